"""POVMs: validity, outcome probabilities, informational completeness and
tightness, plus qubit POVMs built from Platonic solids.

Element ``E_k`` is paired with the traceless operators

    S_k = E_k / tr(E_k) - I/d,        Q_k = sqrt(tr(E_k)) S_k,

and the POVM is a tight IC POVM when the ``Q_k`` form a tight frame for the
traceless subspace.  Frame computations run on basis coordinates, so the
``Q_k`` become rows of a :class:`~qframes.coord_frame.CoordFrame` over
``R^{d^2 - 1}``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .coord_frame import CoordFrame
from .herm_space import (
    PAULIS,
    HermBasis,
    HermitianOp,
    OperatorError,
    default_basis,
    hs_inner,
    is_density,
)

PSD_TOL = 1e-10
COMPLETENESS_TOL = 1e-10
MIN_TRACE = 1e-12


class PovmError(ValueError):
    """Raised for invalid POVM specifications or unsupported operations."""


@dataclass(frozen=True, eq=False)
class Povm:
    """``M`` Hermitian elements on ``C^d``.

    Construction only checks that the elements are Hermitian and share a
    dimension; use :func:`validate` for positivity and completeness.
    ``meta`` carries provenance such as the solid name, rotation and weights.
    """

    elements: Tuple[HermitianOp, ...]
    meta: Dict = field(default_factory=dict)

    def __post_init__(self):
        elems = tuple(e if isinstance(e, HermitianOp) else HermitianOp(e) for e in self.elements)
        if not elems:
            raise PovmError("a POVM needs at least one element")
        dims = {e.dim for e in elems}
        if len(dims) != 1:
            raise PovmError(f"elements have mixed dimensions {sorted(dims)}")
        stack = np.stack([e.matrix for e in elems])
        stack.setflags(write=False)
        object.__setattr__(self, "elements", elems)
        object.__setattr__(self, "stack", stack)

    @property
    def M(self) -> int:
        return len(self.elements)

    @property
    def dim(self) -> int:
        return self.elements[0].dim

    @property
    def traces(self) -> np.ndarray:
        return np.einsum("kii->k", self.stack).real

    def coords(self, basis: HermBasis | None = None) -> np.ndarray:
        """``(M, d^2)`` array of element coordinates."""
        return (basis or default_basis(self.dim)).coords(self.stack)


@dataclass(frozen=True)
class PovmReport:
    is_valid: bool
    psd_margins: np.ndarray
    completeness_residual: float
    trace_sum: float
    coeff_constraints: Optional[Dict[str, float]] = None


def validate(povm: Povm, tol: float = PSD_TOL) -> PovmReport:
    """Positivity margins, completeness residual and trace sum.

    For qubits the report also includes the Pauli-coordinate constraints on
    the element coefficients ``c_ki``: their worst violations (``*_violation``,
    zero when satisfied) and the sums ``sum_k c_k0`` and ``sum_k c_ki``.
    """
    d = povm.dim
    margins = np.array([np.linalg.eigvalsh(m)[0] for m in povm.stack])
    residual = float(np.linalg.norm(povm.stack.sum(axis=0) - np.eye(d), 2))
    trace_sum = float(povm.traces.sum())
    constraints = None
    if d == 2:
        c = povm.coords()
        c0, cv = c[:, 0], c[:, 1:]
        constraints = {
            "c0_range_violation": float(np.max(np.maximum(-c0, c0 - d))),
            "cone_violation": float(np.max(np.sum(cv**2, axis=1) - c0**2)),
            "sum_c0": float(c0.sum()),
            "sum_c0_target": d / np.sqrt(2),
            "max_abs_sum_ci": float(np.max(np.abs(cv.sum(axis=0)))),
        }
    ok = bool(np.all(margins >= -tol) and residual <= tol and abs(trace_sum - d) <= tol)
    return PovmReport(ok, margins, residual, trace_sum, constraints)


def probabilities(povm: Povm, rho: HermitianOp, tol: float = 1e-10) -> np.ndarray:
    """Outcome probabilities ``p(k) = tr(E_k rho)``, clamped to ``[0, 1]``."""
    if rho.dim != povm.dim:
        raise PovmError(f"state dimension {rho.dim} does not match POVM dimension {povm.dim}")
    if not is_density(rho, tol):
        raise PovmError("rho is not a density operator")
    p = np.einsum("kij,ji->k", povm.stack, rho.matrix).real
    if np.min(p) < -1e-12 or abs(p.sum() - 1) > tol:
        raise PovmError("POVM does not produce a probability vector; run validate()")
    return np.clip(p, 0.0, 1.0)


@dataclass(frozen=True, eq=False)
class TracelessRep:
    s_ops: Tuple[HermitianOp, ...]
    q_ops: Tuple[HermitianOp, ...]
    traces: np.ndarray
    dim: int

    @property
    def M(self) -> int:
        return len(self.q_ops)

    def q_coords(self, basis: HermBasis | None = None) -> np.ndarray:
        """``(M, d^2 - 1)`` coordinates of the ``Q_k`` in the traceless subspace."""
        basis = basis or default_basis(self.dim)
        full = basis.coords(np.stack([q.matrix for q in self.q_ops]))
        return full[:, 1:]

    def q_frame(self, basis: HermBasis | None = None) -> CoordFrame:
        return CoordFrame(self.q_coords(basis))


def traceless_rep(povm: Povm) -> TracelessRep:
    traces = povm.traces
    if np.any(traces <= MIN_TRACE):
        bad = np.flatnonzero(traces <= MIN_TRACE).tolist()
        raise PovmError(f"elements {bad} have zero trace; S_k = E_k / tr(E_k) - I/d is undefined")
    eye = np.eye(povm.dim) / povm.dim
    s = [HermitianOp(m / t - eye) for m, t in zip(povm.stack, traces)]
    q = [HermitianOp(np.sqrt(t) * op.matrix) for op, t in zip(s, traces)]
    return TracelessRep(tuple(s), tuple(q), traces, povm.dim)


@dataclass(frozen=True)
class IcReport:
    is_ic: bool
    rank: int
    kind: str  # "minimal", "overcomplete" or "not-ic"


def ic_check(povm: Povm) -> IcReport:
    """IC iff the element coordinates span ``R^{d^2}`` (the elements form a frame)."""
    n = povm.dim**2
    rank = int(np.linalg.matrix_rank(povm.coords(), tol=1e-10))
    if rank < n:
        return IcReport(False, rank, "not-ic")
    return IcReport(True, rank, "minimal" if povm.M == n else "overcomplete")


@dataclass(frozen=True)
class TightIcReport:
    is_tight_ic: bool
    C: float
    residual: float
    frame_operator: np.ndarray = field(repr=False)


def tight_ic_check(povm: Povm, tol: float = 1e-10) -> TightIcReport:
    """Compare the ``Q_k`` frame operator on the traceless subspace with ``C I``.

    ``C`` is the mean eigenvalue and ``residual`` the largest entry of
    ``|S - C I|``; the POVM is tight IC when ``residual <= tol * max(C, 1)``
    and ``C > 0``.
    """
    q = traceless_rep(povm).q_coords()
    s = q.T @ q
    n = s.shape[0]
    c = float(np.trace(s) / n)
    residual = float(np.max(np.abs(s - c * np.eye(n))))
    return TightIcReport(bool(c > 0 and residual <= tol * max(c, 1.0)), c, residual, s)


@dataclass(frozen=True)
class EntfParams:
    C: float
    a: float
    M: int
    N: int

    @property
    def cn_ma2_residual(self) -> float:
        return abs(self.C * self.N - self.M * self.a**2)


def entf_params(rep: TracelessRep, tol: float = 1e-10) -> EntfParams:
    """Frame bound and common norm of the ``Q_k``, which must be an ENTF."""
    q = rep.q_coords()
    norms = np.linalg.norm(q, axis=1)
    a = float(norms.mean())
    spread = np.abs(norms - a)
    if np.max(spread) > tol * max(a, 1.0):
        detail = ", ".join(f"k={k}: {n:.12g}" for k, n in enumerate(norms))
        raise PovmError(f"Q_k are not equal-norm ({detail})")
    s = q.T @ q
    n = s.shape[0]
    lam = np.linalg.eigvalsh(s)
    if lam[-1] - lam[0] > tol * max(lam[-1], 1.0):
        raise PovmError(f"Q_k are not tight (frame operator eigenvalues {lam})")
    c = float(lam[0])
    params = EntfParams(c, a, rep.M, n)
    if params.cn_ma2_residual > 1e-9:
        raise PovmError(f"C N - M a^2 = {params.cn_ma2_residual:.3e}")
    return params


# --- Platonic solids -------------------------------------------------------

_PHI = (1 + np.sqrt(5)) / 2


def _normalize(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def _tetrahedron() -> np.ndarray:
    s = 2 * np.sqrt(2) / 3
    ang = 2 * np.pi * np.arange(3) / 3
    rest = np.column_stack([s * np.cos(ang), s * np.sin(ang), np.full(3, -1 / 3)])
    return _normalize(np.vstack([[0.0, 0.0, 1.0], rest]))


def _icosahedron() -> np.ndarray:
    verts = []
    for a in (1.0, -1.0):
        for b in (_PHI, -_PHI):
            verts += [[0.0, a, b], [a, b, 0.0], [b, 0.0, a]]
    return _normalize(verts)


SOLID_VERTICES: Dict[str, np.ndarray] = {
    "antipodal": np.array([[0.0, 0.0, 1.0], [0.0, 0.0, -1.0]]),
    "tetrahedron": _tetrahedron(),
    # +x, -x, +y, -y, +z, -z: three mutually unbiased bases
    "octahedron": np.array(
        [[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1]], dtype=float
    ),
    "cube": _normalize(list(itertools.product([1.0, -1.0], repeat=3))),
    "icosahedron": _icosahedron(),
}
for _v in SOLID_VERTICES.values():
    _v.setflags(write=False)

SOLID_BY_M = {len(v): name for name, v in SOLID_VERTICES.items()}


def solid_name(solid) -> str:
    """Accept a solid name or its vertex count."""
    if isinstance(solid, (int, np.integer)):
        if int(solid) not in SOLID_BY_M:
            raise PovmError(f"no solid with {solid} vertices; choose from {sorted(SOLID_BY_M)}")
        return SOLID_BY_M[int(solid)]
    name = str(solid).lower()
    if name not in SOLID_VERTICES:
        raise PovmError(f"unknown solid {solid!r}; choose from {sorted(SOLID_VERTICES)}")
    return name


def check_rotation(r, atol: float = 1e-12) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    if r.shape != (3, 3):
        raise PovmError(f"rotation must be 3x3, got {r.shape}")
    if np.max(np.abs(r.T @ r - np.eye(3))) > atol or abs(np.linalg.det(r) - 1) > atol:
        raise PovmError("rotation is not in SO(3)")
    return r


@dataclass(frozen=True, eq=False)
class PlatonicSpec:
    """A solid, an orientation on the Bloch sphere and per-element traces."""

    solid: str
    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    weights: Optional[np.ndarray] = None

    def __post_init__(self):
        name = solid_name(self.solid)
        rot = check_rotation(self.rotation)
        m = len(SOLID_VERTICES[name])
        if self.weights is None:
            w = np.full(m, 2.0 / m)
        else:
            w = np.array(self.weights, dtype=float).ravel()
            if w.shape != (m,):
                raise PovmError(f"{name} needs {m} weights, got {w.shape[0]}")
        object.__setattr__(self, "solid", name)
        object.__setattr__(self, "rotation", rot)
        object.__setattr__(self, "weights", w)

    @property
    def M(self) -> int:
        return len(SOLID_VERTICES[self.solid])

    def vertices(self) -> np.ndarray:
        """Rotated unit Bloch vectors ``n_k = R v_k`` as rows."""
        return SOLID_VERTICES[self.solid] @ self.rotation.T


def platonic_povm(spec: PlatonicSpec, tol: float = 1e-10) -> Povm:
    """Qubit POVM ``E_k = w_k (I + n_k . sigma) / 2``.

    The weights are the element traces; they must be positive and sum to 2.
    With unit Bloch vectors every element is rank one, so positivity only
    requires positive weights.
    """
    w = spec.weights
    if np.any(w <= 0):
        raise PovmError("weights must be positive")
    if abs(w.sum() - 2.0) > tol:
        raise PovmError(f"weights must sum to 2, got {w.sum():.12g}")
    n = spec.vertices()
    mats = w[:, None, None] * (np.eye(2) + np.einsum("ki,ijl->kjl", n, PAULIS)) / 2
    povm = Povm(
        tuple(HermitianOp(m) for m in mats),
        meta={"solid": spec.solid, "rotation": spec.rotation.tolist(), "weights": w.tolist()},
    )
    report = validate(povm, tol)
    if not report.is_valid:
        raise PovmError(
            f"weights do not give a valid POVM (completeness residual {report.completeness_residual:.3e})"
        )
    return povm


def povm_from_bloch(vectors: Sequence[Sequence[float]], weights: Sequence[float]) -> Povm:
    """Qubit POVM from arbitrary Bloch vectors (norm <= 1) and traces, unchecked."""
    n = np.asarray(vectors, dtype=float)
    w = np.asarray(weights, dtype=float)
    mats = w[:, None, None] * (np.eye(2) + np.einsum("ki,ijl->kjl", n, PAULIS)) / 2
    return Povm(tuple(HermitianOp(m) for m in mats))


@lru_cache(maxsize=None)
def _symmetry_group(name: str) -> Tuple[np.ndarray, ...]:
    verts = SOLID_VERTICES[name]
    m = len(verts)
    group: List[np.ndarray] = []
    if m == 2:
        # the pair's group is continuous; keep quarter turns about z and flips about x
        for psi in np.arange(4) * np.pi / 2:
            c, s = np.cos(psi), np.sin(psi)
            rz = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
            group += [rz, rz @ np.diag([1.0, -1.0, -1.0])]
        return tuple(group)
    # two vertices that are neither equal nor antipodal fix an orientation
    i, j = next(
        (i, j) for i in range(m) for j in range(i + 1, m) if abs(abs(verts[i] @ verts[j]) - 1) > 1e-9
    )
    src = np.column_stack([verts[i], verts[j], np.cross(verts[i], verts[j])])
    target_dot = verts[i] @ verts[j]
    for a in range(m):
        for b in range(m):
            if a == b or abs(verts[a] @ verts[b] - target_dot) > 1e-9:
                continue
            dst = np.column_stack([verts[a], verts[b], np.cross(verts[a], verts[b])])
            r = dst @ np.linalg.inv(src)
            if abs(np.linalg.det(r) - 1) > 1e-9:
                continue
            image = verts @ r.T
            if np.all(np.min(np.linalg.norm(image[:, None] - verts[None], axis=2), axis=1) < 1e-9):
                group.append(r)
    return tuple(group)


def symmetry_rotations(solid) -> List[np.ndarray]:
    """Rotations that permute the solid's canonical vertex set.

    For the antipodal pair the group is continuous; a finite subgroup of
    eight elements is returned.
    """
    return [g.copy() for g in _symmetry_group(solid_name(solid))]


# --- serialization ---------------------------------------------------------


def povm_to_dict(povm: Povm) -> Dict:
    return {
        "dim": povm.dim,
        "meta": dict(povm.meta),
        "elements": [{"re": m.real.tolist(), "im": m.imag.tolist()} for m in povm.stack],
    }


def povm_from_dict(doc: Dict) -> Povm:
    try:
        mats = [np.array(e["re"], dtype=float) + 1j * np.array(e.get("im", 0.0), dtype=float)
                for e in doc["elements"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise PovmError(f"malformed POVM document: {exc}") from exc
    try:
        povm = Povm(tuple(HermitianOp(m) for m in mats), meta=dict(doc.get("meta", {})))
    except OperatorError as exc:
        raise PovmError(str(exc)) from exc
    if "dim" in doc and int(doc["dim"]) != povm.dim:
        raise PovmError(f"declared dim {doc['dim']} does not match element size {povm.dim}")
    return povm


def hs_gram(povm: Povm) -> np.ndarray:
    """``tr(E_j E_k)`` for all pairs."""
    return np.array([[hs_inner(a, b) for b in povm.elements] for a in povm.elements])
