"""Deterministic SO(3) grids for orientation sweeps.

A grid point is ``R = A(u) Rz(psi)``: a turn by ``psi`` about the z axis
followed by the minimal rotation ``A(u)`` taking z to the axis ``u``.  The
axes ``u`` come from a Fibonacci sphere and the angles ``psi`` from a
uniform grid on ``[0, 2 pi)``, so every rotation is covered and the set is
reproducible without a seed.
"""

from __future__ import annotations

import numpy as np
from scipy.spatial.transform import Rotation


def fibonacci_sphere(n: int) -> np.ndarray:
    """``n`` nearly uniform unit vectors, shape ``(n, 3)``."""
    i = np.arange(n) + 0.5
    z = 1 - 2 * i / n
    theta = np.pi * (1 + np.sqrt(5)) * i
    r = np.sqrt(1 - z * z)
    return np.column_stack([r * np.cos(theta), r * np.sin(theta), z])


def align_z(u) -> np.ndarray:
    """Minimal rotation taking ``(0, 0, 1)`` to the unit vector ``u``."""
    u = np.asarray(u, dtype=float)
    u = u / np.linalg.norm(u)
    axis = np.cross([0.0, 0.0, 1.0], u)
    s = np.linalg.norm(axis)
    if s < 1e-12:
        return np.eye(3) if u[2] > 0 else np.diag([1.0, -1.0, -1.0])
    angle = np.arctan2(s, u[2])
    return Rotation.from_rotvec(axis / s * angle).as_matrix()


def rot_z(psi: float) -> np.ndarray:
    c, s = np.cos(psi), np.sin(psi)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def so3_grid(n_axes: int = 100, n_angles: int = 10) -> np.ndarray:
    """``(n_axes * n_angles, 3, 3)`` rotations, axis-major."""
    out = np.empty((n_axes * n_angles, 3, 3))
    angles = 2 * np.pi * np.arange(n_angles) / n_angles
    k = 0
    for u in fibonacci_sphere(n_axes):
        a = align_z(u)
        for psi in angles:
            out[k] = a @ rot_z(psi)
            k += 1
    return out


def to_quaternion(r) -> np.ndarray:
    """Scalar-first unit quaternion ``(w, x, y, z)`` with ``w >= 0``."""
    x, y, z, w = Rotation.from_matrix(np.asarray(r, dtype=float)).as_quat()
    q = np.array([w, x, y, z])
    return q if q[0] >= 0 else -q


def from_quaternion(q) -> np.ndarray:
    w, x, y, z = np.asarray(q, dtype=float)
    return Rotation.from_quat([x, y, z, w]).as_matrix()


def from_euler(angles, seq: str = "zyz") -> np.ndarray:
    """Rotation from Euler angles in radians (intrinsic ``seq``, upper-cased by scipy)."""
    return Rotation.from_euler(seq.upper(), np.asarray(angles, dtype=float)).as_matrix()


def random_rotations(n: int, rng: np.random.Generator) -> np.ndarray:
    return Rotation.random(n, random_state=rng).as_matrix().reshape(n, 3, 3)
