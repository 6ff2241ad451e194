"""Finite frames over real coordinate spaces.

A frame is stored as an ``(M, N)`` array whose rows are the frame vectors
``f_k``.  In that layout the analysis operator is the array itself
(``a = A @ v``) and the synthesis operator is its transpose
(``v = A.T @ w``).  Dual frames are stored the same way, so the synthesis
operator of a dual is ``dual.vectors.T``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ._seeding import make_rng

SINGULAR_RTOL = 1e-12
TIGHT_RTOL = 1e-10


class FrameError(ValueError):
    """Raised when vectors do not form a frame or shapes disagree."""


def _as_vector(x, length: int, name: str) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1 or arr.shape[0] != length:
        raise FrameError(f"{name} must have length {length}, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise FrameError(f"{name} has non-finite entries")
    return arr


@dataclass(frozen=True)
class CoordFrame:
    """``M`` vectors spanning ``R^N``, stored as the rows of ``vectors``."""

    vectors: np.ndarray

    def __post_init__(self):
        arr = np.array(self.vectors, dtype=float)
        if arr.ndim != 2:
            raise FrameError(f"frame vectors must form a 2-D array, got {arr.ndim}-D")
        if not np.all(np.isfinite(arr)):
            raise FrameError("frame vectors have non-finite entries")
        m, n = arr.shape
        if m < n:
            raise FrameError(f"{m} vectors cannot span R^{n}")
        if np.linalg.matrix_rank(arr) < n:
            raise FrameError(f"vectors do not span R^{n} (rank {np.linalg.matrix_rank(arr)})")
        arr.setflags(write=False)
        object.__setattr__(self, "vectors", arr)

    @property
    def M(self) -> int:
        return self.vectors.shape[0]

    @property
    def N(self) -> int:
        return self.vectors.shape[1]

    def analysis_matrix(self) -> np.ndarray:
        return self.vectors.copy()

    def synthesis_matrix(self) -> np.ndarray:
        return self.vectors.T.copy()

    def frame_operator(self) -> np.ndarray:
        """``S = sum_k f_k f_k^T = A^T A``."""
        return self.vectors.T @ self.vectors


@dataclass(frozen=True)
class FrameBounds:
    lower: float
    upper: float
    is_tight: bool


@dataclass(frozen=True)
class DualFrame:
    """Synthesis family ``{f~_k}`` paired with the analysis frame it inverts.

    Construction checks the left-inverse identity ``F~ A = I``.
    """

    vectors: np.ndarray
    source: CoordFrame
    note: str = ""

    def __post_init__(self):
        arr = np.array(self.vectors, dtype=float)
        if arr.shape != self.source.vectors.shape:
            raise FrameError(
                f"dual shape {arr.shape} does not match frame shape {self.source.vectors.shape}"
            )
        err = np.max(np.abs(arr.T @ self.source.vectors - np.eye(self.source.N)))
        if err > 1e-8:
            raise FrameError(f"not a dual frame: max |F~A - I| = {err:.3e}")
        arr.setflags(write=False)
        object.__setattr__(self, "vectors", arr)

    @property
    def M(self) -> int:
        return self.vectors.shape[0]

    @property
    def N(self) -> int:
        return self.vectors.shape[1]

    def synthesis_matrix(self) -> np.ndarray:
        return self.vectors.T.copy()


@dataclass(frozen=True)
class NoiseSpec:
    """Zero-mean coefficient noise.

    ``variances`` gives an uncorrelated model with per-coefficient variance
    ``Delta_k^2``; a full ``covariance`` matrix overrides it when present.
    """

    variances: Optional[np.ndarray] = None
    covariance: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.variances is None and self.covariance is None:
            raise FrameError("NoiseSpec needs variances or a covariance matrix")
        if self.variances is not None:
            var = np.array(self.variances, dtype=float).ravel()
            if np.any(var < 0) or not np.all(np.isfinite(var)):
                raise FrameError("variances must be finite and non-negative")
            object.__setattr__(self, "variances", var)
        if self.covariance is not None:
            cov = np.array(self.covariance, dtype=float)
            if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
                raise FrameError("covariance must be square")
            if np.max(np.abs(cov - cov.T), initial=0.0) > 1e-12 * max(1.0, np.max(np.abs(cov))):
                raise FrameError("covariance is not symmetric")
            cov = (cov + cov.T) / 2
            lam_min = np.linalg.eigvalsh(cov)[0] if cov.size else 0.0
            if lam_min < -1e-12 * max(1.0, np.max(np.abs(cov))):
                raise FrameError(f"covariance is not PSD (min eigenvalue {lam_min:.3e})")
            object.__setattr__(self, "covariance", cov)

    @classmethod
    def uniform(cls, m: int, variance: float = 1.0) -> "NoiseSpec":
        return cls(variances=np.full(m, float(variance)))

    @property
    def size(self) -> int:
        if self.covariance is not None:
            return self.covariance.shape[0]
        return self.variances.shape[0]

    def covariance_matrix(self) -> np.ndarray:
        if self.covariance is not None:
            return self.covariance.copy()
        return np.diag(self.variances)


def analyze(frame: CoordFrame, v) -> np.ndarray:
    """Frame coefficients ``a_k = <f_k, v>``."""
    return frame.vectors @ _as_vector(v, frame.N, "v")


def synthesize(frame: CoordFrame, w) -> np.ndarray:
    """``sum_k w_k f_k``."""
    return frame.vectors.T @ _as_vector(w, frame.M, "w")


def frame_bounds(frame: CoordFrame, tol: float = TIGHT_RTOL) -> FrameBounds:
    """Tightest frame bounds: the extreme eigenvalues of the frame operator."""
    lam = np.linalg.eigvalsh(frame.frame_operator())
    lower, upper = float(lam[0]), float(lam[-1])
    if lower <= SINGULAR_RTOL * upper:
        raise FrameError(f"rank-deficient frame operator (eigenvalues {lower:.3e}..{upper:.3e})")
    return FrameBounds(lower, upper, (upper - lower) / upper <= tol)


def _inverse_frame_operator(frame: CoordFrame) -> np.ndarray:
    lam, vec = np.linalg.eigh(frame.frame_operator())
    if lam[0] < SINGULAR_RTOL * lam[-1]:
        raise FrameError(
            f"frame operator is numerically singular (condition {lam[-1] / max(lam[0], 1e-300):.3e})"
        )
    return (vec / lam) @ vec.T


def canonical_dual(frame: CoordFrame) -> DualFrame:
    """Dual whose synthesis operator is the pseudoinverse ``(A^T A)^{-1} A^T``.

    The dual vectors are ``S^{-1} f_k``; for a tight frame with bound ``C``
    this is ``f_k / C``.
    """
    s_inv = _inverse_frame_operator(frame)
    return DualFrame(frame.vectors @ s_inv, frame)


def range_projector(frame: CoordFrame) -> np.ndarray:
    """Orthogonal projector of ``R^M`` onto ``range(A)``."""
    a = frame.vectors
    return a @ _inverse_frame_operator(frame) @ a.T


def synthesis_null_space(frame: CoordFrame, rtol: float = 1e-12) -> np.ndarray:
    """Orthonormal basis of ``null(F)`` as the columns of an ``(M, M-N)`` array."""
    _, s, vt = np.linalg.svd(frame.vectors.T)
    rank = int(np.sum(s > rtol * s[0]))
    return vt[rank:].T


def random_dual(frame: CoordFrame, rng_seed=None) -> DualFrame:
    """A random dual ``L = L* + G P_perp``.

    ``L*`` is the canonical synthesis operator, ``G`` an ``N x M`` matrix of
    i.i.d. standard normals drawn from ``rng_seed`` and ``P_perp`` the
    projector onto ``range(A)^perp``.  ``L`` agrees with ``L*`` on
    ``range(A)`` and differs only on the orthogonal complement.
    """
    can = canonical_dual(frame)
    if frame.M == frame.N:
        return DualFrame(can.vectors, frame, note="basis: the dual frame is unique")
    rng = make_rng(rng_seed)
    g = rng.standard_normal((frame.N, frame.M))
    p_perp = np.eye(frame.M) - range_projector(frame)
    synth = can.vectors.T + g @ p_perp
    return DualFrame(synth.T, frame)


def reconstruct(dual: DualFrame, observed) -> np.ndarray:
    """Apply the dual synthesis operator to observed coefficients."""
    return dual.vectors.T @ _as_vector(observed, dual.M, "observed")


def expected_recon_error(frame: CoordFrame, dual: DualFrame, noise: NoiseSpec) -> float:
    """Closed form of ``E ||F~(e)||^2 = sum_jk Cov(e_j, e_k) <f~_j, f~_k>``."""
    if dual.source is not frame and not np.array_equal(dual.source.vectors, frame.vectors):
        raise FrameError("dual was not built for this frame")
    if noise.size != frame.M:
        raise FrameError(f"noise has {noise.size} coefficients, frame has {frame.M}")
    gram = dual.vectors @ dual.vectors.T
    return float(np.sum(noise.covariance_matrix() * gram))


@dataclass(frozen=True)
class EntfReport:
    is_tight: bool
    is_equal_norm: bool
    C: float
    a: float
    cn_ma2_residual: float
    norms: np.ndarray = field(repr=False)


def entf_check(frame: CoordFrame, tol: float = TIGHT_RTOL) -> EntfReport:
    """Report tightness, norm equality and ``|C N - M a^2|``.

    ``C`` is the lower frame bound and ``a`` the root-mean-square vector
    norm, so the residual is zero only for tight frames.
    """
    bounds = frame_bounds(frame, tol)
    norms = np.linalg.norm(frame.vectors, axis=1)
    c = bounds.lower
    a = float(np.sqrt(np.mean(norms**2)))
    equal = bool(np.max(norms) - np.min(norms) <= tol * max(np.max(norms), 1.0))
    return EntfReport(
        is_tight=bounds.is_tight,
        is_equal_norm=equal,
        C=c,
        a=a,
        cn_ma2_residual=abs(c * frame.N - frame.M * a**2),
        norms=norms,
    )


def mercedes_benz_frame() -> CoordFrame:
    """Three unit vectors at 120 degrees in ``R^2``."""
    angles = np.pi / 2 + 2 * np.pi * np.arange(3) / 3
    return CoordFrame(np.column_stack([np.cos(angles), np.sin(angles)]))
