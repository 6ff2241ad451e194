"""Hermitian operators on C^d with the Hilbert-Schmidt inner product.

Operators are embedded isometrically in ``R^{d^2}`` by taking coordinates
in an orthonormal Hermitian basis whose first element is ``I/sqrt(d)``.
Everything downstream (frame bounds, duals, reconstruction) then runs on
plain real vectors through :mod:`qframes.coord_frame`.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence, Tuple

import numpy as np

HERMITIAN_ATOL = 1e-12

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = np.stack([SIGMA_X, SIGMA_Y, SIGMA_Z])


class OperatorError(ValueError):
    """Raised for non-Hermitian input or dimension mismatches."""


def _hermitize(mat, atol: float = HERMITIAN_ATOL) -> np.ndarray:
    m = np.array(mat, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise OperatorError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise OperatorError("operator has non-finite entries")
    drift = np.max(np.abs(m - m.conj().T), initial=0.0)
    if drift > atol:
        raise OperatorError(f"operator is not Hermitian (max |M - M^dag| = {drift:.3e})")
    return (m + m.conj().T) / 2


@dataclass(frozen=True, eq=False)
class HermitianOp:
    """A ``d x d`` Hermitian matrix.

    Drift below :data:`HERMITIAN_ATOL` is repaired by symmetrizing; anything
    larger raises :class:`OperatorError`.
    """

    matrix: np.ndarray

    def __post_init__(self):
        m = _hermitize(self.matrix)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def eigvalsh(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)

    def __add__(self, other: "HermitianOp") -> "HermitianOp":
        return HermitianOp(self.matrix + _matrix(other))

    def __sub__(self, other: "HermitianOp") -> "HermitianOp":
        return HermitianOp(self.matrix - _matrix(other))

    def __mul__(self, scalar: float) -> "HermitianOp":
        return HermitianOp(self.matrix * float(scalar))

    __rmul__ = __mul__

    def allclose(self, other, atol: float = 1e-12) -> bool:
        return bool(np.allclose(self.matrix, _matrix(other), rtol=0, atol=atol))

    @classmethod
    def identity(cls, d: int) -> "HermitianOp":
        return cls(np.eye(d, dtype=complex))


def _matrix(x) -> np.ndarray:
    if isinstance(x, HermitianOp):
        return x.matrix
    return np.asarray(x, dtype=complex)


def hs_inner(a, b) -> float:
    """Hilbert-Schmidt inner product ``tr(a b)`` of two Hermitian operators."""
    ma, mb = _matrix(a), _matrix(b)
    if ma.shape != mb.shape:
        raise OperatorError(f"dimension mismatch: {ma.shape} vs {mb.shape}")
    # tr(AB) = sum_ij A_ij B_ji; the imaginary residue is roundoff for Hermitian input
    return float(np.einsum("ij,ji->", ma, mb).real)


def hs_norm(a) -> float:
    return float(np.sqrt(max(hs_inner(a, a), 0.0)))


@dataclass(frozen=True, eq=False)
class HermBasis:
    """Orthonormal basis of the ``d^2``-dimensional space of Hermitian operators.

    ``elements[0]`` is ``I/sqrt(d)``; the rest are traceless and span the
    traceless subspace.  ``stack`` holds the matrices as a ``(d^2, d, d)``
    array for vectorized coordinate transforms.
    """

    elements: Tuple[HermitianOp, ...]
    name: str = ""

    def __post_init__(self):
        elems = tuple(e if isinstance(e, HermitianOp) else HermitianOp(e) for e in self.elements)
        d = elems[0].dim
        if len(elems) != d * d:
            raise OperatorError(f"a basis for d={d} needs {d * d} elements, got {len(elems)}")
        if not elems[0].allclose(np.eye(d) / np.sqrt(d)):
            raise OperatorError("first basis element must be I/sqrt(d)")
        stack = np.stack([e.matrix for e in elems])
        gram = np.einsum("aij,bji->ab", stack, stack).real
        if np.max(np.abs(gram - np.eye(d * d))) > 1e-12:
            raise OperatorError("basis is not orthonormal under tr(AB)")
        stack.setflags(write=False)
        object.__setattr__(self, "elements", elems)
        object.__setattr__(self, "stack", stack)

    @property
    def dim(self) -> int:
        return self.elements[0].dim

    def __len__(self) -> int:
        return len(self.elements)

    def coords(self, mats: np.ndarray) -> np.ndarray:
        """Coordinates of one ``(d, d)`` matrix or a ``(..., d, d)`` stack."""
        mats = np.asarray(mats, dtype=complex)
        return np.einsum("aij,...ji->...a", self.stack, mats).real

    def matrices(self, coords: np.ndarray) -> np.ndarray:
        """Inverse of :meth:`coords` for one vector or a ``(..., d^2)`` stack."""
        return np.einsum("...a,aij->...ij", np.asarray(coords, dtype=float), self.stack)


@dataclass(frozen=True, eq=False)
class OpCoords:
    c: np.ndarray
    basis: HermBasis

    def __post_init__(self):
        c = np.array(self.c, dtype=float)
        if c.shape != (len(self.basis),):
            raise OperatorError(f"expected {len(self.basis)} coordinates, got shape {c.shape}")
        c.setflags(write=False)
        object.__setattr__(self, "c", c)


@lru_cache(maxsize=None)
def pauli_basis() -> HermBasis:
    """``{I, sigma_x, sigma_y, sigma_z} / sqrt(2)``."""
    mats = [np.eye(2, dtype=complex)] + list(PAULIS)
    return HermBasis(tuple(HermitianOp(m / np.sqrt(2)) for m in mats), name="pauli")


@lru_cache(maxsize=None)
def gellmann_basis(d: int) -> HermBasis:
    """Normalized generalized Gell-Mann matrices preceded by ``I/sqrt(d)``.

    Order: identity, then symmetric and antisymmetric off-diagonal pairs for
    each ``j < k``, then the ``d - 1`` diagonal matrices.  For ``d = 2`` this
    reproduces :func:`pauli_basis`.
    """
    if d < 2:
        raise OperatorError("dimension must be at least 2")
    mats = [np.eye(d, dtype=complex) / np.sqrt(d)]
    for j in range(d):
        for k in range(j + 1, d):
            sym = np.zeros((d, d), dtype=complex)
            sym[j, k] = sym[k, j] = 1 / np.sqrt(2)
            anti = np.zeros((d, d), dtype=complex)
            anti[j, k], anti[k, j] = -1j / np.sqrt(2), 1j / np.sqrt(2)
            mats += [sym, anti]
    for l in range(1, d):
        diag = np.zeros(d)
        diag[:l] = 1.0
        diag[l] = -l
        mats.append(np.diag(diag / np.sqrt(l * (l + 1))).astype(complex))
    return HermBasis(tuple(HermitianOp(m) for m in mats), name=f"gellmann{d}")


def default_basis(d: int) -> HermBasis:
    return pauli_basis() if d == 2 else gellmann_basis(d)


def to_coords(v: HermitianOp, basis: HermBasis | None = None) -> OpCoords:
    """Coordinates ``c_i = tr(B_i V)``."""
    basis = basis or default_basis(v.dim)
    if v.dim != basis.dim:
        raise OperatorError(f"operator dimension {v.dim} does not match basis dimension {basis.dim}")
    return OpCoords(basis.coords(v.matrix), basis)


def from_coords(coords: OpCoords) -> HermitianOp:
    return HermitianOp(coords.basis.matrices(coords.c))


def project_identity_component(v: HermitianOp) -> Tuple[HermitianOp, float]:
    """Split ``V`` into its traceless part and its trace.

    ``V = r_part + (trace / d) I`` with ``tr(r_part) = 0``.
    """
    tr = v.trace
    return HermitianOp(v.matrix - (tr / v.dim) * np.eye(v.dim)), tr


def psd_check(v: HermitianOp, tol: float = 1e-10) -> Tuple[bool, float]:
    """``(lambda_min >= -tol, lambda_min)``."""
    lam_min = float(v.eigvalsh()[0])
    return lam_min >= -tol, lam_min


def cone_test(c: Sequence[float], tol: float = 0.0) -> bool:
    """Qubit PSD test in Pauli coordinates: ``c0 >= 0`` and ``c0^2 >= |c_{1:3}|^2``."""
    c = np.asarray(c, dtype=float)
    return bool(c[0] >= -tol and c[0] ** 2 - np.dot(c[1:], c[1:]) >= -tol)


def density_from_bloch(r: Sequence[float]) -> HermitianOp:
    """``(I + r . sigma) / 2``; rejects vectors outside the unit ball."""
    r = np.asarray(r, dtype=float)
    if r.shape != (3,):
        raise OperatorError(f"Bloch vector must have 3 components, got shape {r.shape}")
    if np.linalg.norm(r) > 1 + 1e-12:
        raise OperatorError(f"Bloch vector norm {np.linalg.norm(r):.6g} exceeds 1")
    return HermitianOp((np.eye(2) + np.einsum("i,ijk->jk", r, PAULIS)) / 2)


def bloch_vector(rho: HermitianOp) -> np.ndarray:
    if rho.dim != 2:
        raise OperatorError("Bloch vectors are defined for qubits only")
    return np.einsum("ijk,kj->i", PAULIS, rho.matrix).real


def pure_state(theta: float, phi: float = 0.0) -> HermitianOp:
    """``|psi><psi|`` for ``|psi> = cos(theta/2)|0> + e^{i phi} sin(theta/2)|1>``."""
    psi = np.array([np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2)])
    return HermitianOp(np.outer(psi, psi.conj()))


def is_density(rho: HermitianOp, tol: float = 1e-10) -> bool:
    return abs(rho.trace - 1.0) <= tol and psd_check(rho, tol)[0]


def random_hermitian(d: int, rng: np.random.Generator) -> HermitianOp:
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return HermitianOp((g + g.conj().T) / 2)


def random_density(d: int, rng: np.random.Generator, rank: int | None = None) -> HermitianOp:
    """Random density operator ``G G^dag / tr(G G^dag)`` with ``G`` Ginibre."""
    rank = rank or d
    g = rng.standard_normal((d, rank)) + 1j * rng.standard_normal((d, rank))
    m = g @ g.conj().T
    return HermitianOp(m / np.trace(m).real)
