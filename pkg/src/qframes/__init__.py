"""Frames, Hermitian operator spaces and tight IC POVMs for qubit state
estimation and binary detection experiments."""

__version__ = "0.1.0"
