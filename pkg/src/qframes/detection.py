"""Binary state detection with likelihood-ratio tests on outcome counts.

Records of ``L`` shots are summarized by their count vector.  The
multinomial coefficient is the same under both hypotheses, so the
likelihood ratio is ``prod_k (p1(k) / p0(k))^{l_k}`` and it depends on the
counts only.  Exact operating characteristics therefore enumerate count
vectors (``C(L+M-1, M-1)`` of them) rather than outcome sequences.

Decision rule: choose H1 iff ``Lambda > eta``.  Ties, with log-ratios within
:data:`LLR_TOL` of ``log eta``, go to H0.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence

import numpy as np

from ._seeding import child_rng
from .herm_space import HermitianOp, bloch_vector, hs_norm, is_density
from .povm import PlatonicSpec, Povm, platonic_povm, probabilities
from .rotations import align_z, so3_grid
from .sampling_stats import (
    OutcomeCounts,
    _conditional_binomial,
    check_probability,
    composition_count,
    compositions,
    log_pmf_table,
)

LLR_TOL = 1e-9
ENUMERATION_CAP = 10**6
DEFAULT_MC_THRESHOLDS = np.concatenate([[np.inf], np.logspace(3, -3, 25), [0.0]])


class DetectionError(ValueError):
    pass


class EnumerationCapExceeded(DetectionError):
    pass


@dataclass(frozen=True, eq=False)
class BinaryHypothesis:
    """Two candidate density operators with prior probabilities.

    Identical states are allowed (the degenerate reference case);
    :attr:`distinguishable` reports whether they differ.
    """

    rho0: HermitianOp
    rho1: HermitianOp
    q0: float = 0.5
    q1: float = 0.5

    def __post_init__(self):
        for name in ("rho0", "rho1"):
            if not is_density(getattr(self, name)):
                raise DetectionError(f"{name} is not a density operator")
        if self.rho0.dim != self.rho1.dim:
            raise DetectionError("states have different dimensions")
        if min(self.q0, self.q1) < 0 or abs(self.q0 + self.q1 - 1) > 1e-12:
            raise DetectionError(f"priors ({self.q0}, {self.q1}) are not a distribution")

    @property
    def distinguishable(self) -> bool:
        return hs_norm(self.rho0 - self.rho1) > 1e-12

    @property
    def threshold(self) -> float:
        return np.inf if self.q1 == 0 else self.q0 / self.q1


def log_lr_table(counts: np.ndarray, p0, p1) -> np.ndarray:
    """Log likelihood ratio for each row of a ``(n, M)`` count array.

    Outcomes with ``p0 = 0 < p1`` push the ratio to ``+inf`` and outcomes
    with ``p1 = 0 < p0`` to ``-inf``.  Outcomes impossible under both
    hypotheses are skipped.  A record impossible under both (mixing the two
    kinds) carries no evidence and gets log-ratio 0.
    """
    p0 = check_probability(p0)
    p1 = check_probability(p1)
    counts = np.atleast_2d(counts)
    both = (p0 > 0) & (p1 > 0)
    ratio = np.zeros_like(p0)
    ratio[both] = np.log(p1[both]) - np.log(p0[both])
    present = counts > 0
    finite = counts @ ratio
    pos = np.any(present & ((p0 == 0) & (p1 > 0)), axis=1)
    neg = np.any(present & ((p1 == 0) & (p0 > 0)), axis=1)
    out = np.where(pos & ~neg, np.inf, np.where(neg & ~pos, -np.inf, finite))
    out[pos & neg] = 0.0
    return out


def likelihood_ratio(counts, p0, p1) -> float:
    c = counts.counts if isinstance(counts, OutcomeCounts) else np.asarray(counts)
    return float(np.exp(log_lr_table(c, p0, p1)[0]))


def _log(x) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(np.asarray(x, dtype=float))


def decide_log(llr, log_eta) -> np.ndarray:
    """Vectorized rule on log scale: 1 (H1) iff ``llr > log_eta + LLR_TOL``."""
    with np.errstate(invalid="ignore"):
        diff = np.asarray(llr, dtype=float) - np.asarray(log_eta, dtype=float)
        # inf - inf is nan: equal infinities are ties and go to H0
        return (diff > LLR_TOL).astype(int)


def decide(lam: float, eta: float) -> int:
    """0 for H0, 1 for H1."""
    if eta < 0 or lam < 0:
        raise DetectionError("likelihood ratio and threshold must be non-negative")
    return int(decide_log(_log(lam), _log(eta)))


@dataclass(frozen=True)
class LevelSets:
    """Distinct log-likelihood-ratio values (descending) and their masses."""

    log_levels: np.ndarray
    mass0: np.ndarray
    mass1: np.ndarray


def likelihood_levels(p0, p1, shots: int, cap: int = ENUMERATION_CAP) -> LevelSets:
    m = len(p0)
    total = composition_count(shots, m)
    if total > cap:
        raise EnumerationCapExceeded(
            f"{total} count vectors exceed the cap {cap}; use qdoc_monte_carlo instead"
        )
    comps = compositions(shots, m)
    return _levels_from(comps, p0, p1)


def _levels_from(comps: np.ndarray, p0, p1) -> LevelSets:
    llr = log_lr_table(comps, p0, p1)
    w0 = np.exp(log_pmf_table(comps, p0))
    w1 = np.exp(log_pmf_table(comps, p1))
    keep = (w0 > 0) | (w1 > 0)
    llr, w0, w1 = llr[keep], w0[keep], w1[keep]
    order = np.argsort(-llr, kind="stable")
    llr, w0, w1 = llr[order], w0[order], w1[order]
    with np.errstate(invalid="ignore"):
        gap = np.abs(np.diff(llr))
    new_level = np.concatenate([[True], ~(gap <= LLR_TOL)])
    starts = np.flatnonzero(new_level)
    return LevelSets(llr[starts], np.add.reduceat(w0, starts), np.add.reduceat(w1, starts))


def operating_point(levels: LevelSets, eta: float):
    """``(P_f, P_d)`` of the threshold rule at ``eta``."""
    h1 = decide_log(levels.log_levels, _log(eta)).astype(bool)
    pf, pd = levels.mass0[h1].sum(), levels.mass1[h1].sum()
    return float(np.clip(pf, 0.0, 1.0)), float(np.clip(pd, 0.0, 1.0))


@dataclass(frozen=True, eq=False)
class QdocCurve:
    """Rows ``(eta, P_f, P_d)`` ordered by increasing ``P_f``."""

    points: np.ndarray
    method: str
    meta: Dict = field(default_factory=dict)
    levels: Optional[LevelSets] = field(default=None, repr=False)

    @property
    def eta(self) -> np.ndarray:
        return self.points[:, 0]

    @property
    def pf(self) -> np.ndarray:
        return self.points[:, 1]

    @property
    def pd(self) -> np.ndarray:
        return self.points[:, 2]


def _probs(hyp: BinaryHypothesis, povm: Povm):
    return probabilities(povm, hyp.rho0), probabilities(povm, hyp.rho1)


def _curve_from_levels(levels: LevelSets) -> np.ndarray:
    cum0 = np.clip(np.cumsum(levels.mass0), 0.0, 1.0)
    cum1 = np.clip(np.cumsum(levels.mass1), 0.0, 1.0)
    # including levels 0..i is achieved at eta equal to level i+1, since ties go to H0
    etas = np.exp(np.append(levels.log_levels[1:], -np.inf))
    rows = [(np.inf, 0.0, 0.0)] + list(zip(etas, cum0, cum1))
    pts = np.array(rows, dtype=float)
    # the final row is the "always H1" endpoint; pin it against rounding in the cumsum
    pts[-1, 1:] = 1.0
    pts[-1, 0] = 0.0
    return pts


def qdoc_exact(hyp: BinaryHypothesis, povm: Povm, shots: int, cap: int = ENUMERATION_CAP) -> QdocCurve:
    """Every achievable ``(P_f, P_d)`` of the threshold test on ``shots`` records.

    The first row is ``eta = inf`` at ``(0, 0)`` and the last is the
    ``eta = 0`` endpoint ``(1, 1)``.  Intermediate rows are the atoms between
    consecutive distinct likelihood-ratio values; any threshold in between
    reproduces one of them.
    """
    p0, p1 = _probs(hyp, povm)
    levels = likelihood_levels(p0, p1, shots, cap)
    return QdocCurve(_curve_from_levels(levels), "exact", {"M": povm.M, "L": shots, **povm.meta}, levels)


def qdoc_monte_carlo(
    hyp: BinaryHypothesis,
    povm: Povm,
    shots: int,
    samples: int,
    seed: int = 0,
    thresholds: Optional[Sequence[float]] = None,
) -> QdocCurve:
    """Empirical ``(P_f, P_d)`` on a fixed threshold grid.

    ``samples`` records are drawn under each hypothesis, from the streams
    ``SeedSequence([seed, 0])`` (H0) and ``SeedSequence([seed, 1])`` (H1).
    """
    if samples < 1000:
        raise DetectionError("use at least 1000 samples")
    p0, p1 = _probs(hyp, povm)
    etas = np.sort(np.asarray(DEFAULT_MC_THRESHOLDS if thresholds is None else thresholds, float))[::-1]
    llr0 = log_lr_table(_conditional_binomial(child_rng(seed, 0), p0, shots, samples), p0, p1)
    llr1 = log_lr_table(_conditional_binomial(child_rng(seed, 1), p1, shots, samples), p0, p1)
    log_eta = _log(etas)[:, None]
    pf = decide_log(llr0[None, :], log_eta).mean(axis=1)
    pd = decide_log(llr1[None, :], log_eta).mean(axis=1)
    pts = np.column_stack([etas, pf, pd])
    return QdocCurve(pts, "monte-carlo", {"M": povm.M, "L": shots, "samples": samples, "seed": seed, **povm.meta})


def prob_error_from_probs(p0, p1, shots: int, q0: float = 0.5, q1: float = 0.5, comps=None) -> float:
    comps = compositions(shots, len(p0)) if comps is None else comps
    levels = _levels_from(comps, p0, p1)
    eta = np.inf if q1 == 0 else q0 / q1
    pf, pd = operating_point(levels, eta)
    return q0 * pf + q1 * (1 - pd)


def prob_error(hyp: BinaryHypothesis, povm: Povm, shots: int, cap: int = ENUMERATION_CAP) -> float:
    """Exact ``P_e = q0 P_f + q1 (1 - P_d)`` at ``eta = q0 / q1``."""
    p0, p1 = _probs(hyp, povm)
    if composition_count(shots, povm.M) > cap:
        raise EnumerationCapExceeded(f"enumeration over {composition_count(shots, povm.M)} count vectors exceeds cap {cap}")
    return prob_error_from_probs(p0, p1, shots, hyp.q0, hyp.q1)


@dataclass(frozen=True, eq=False)
class OrientationSweepResult:
    solid: str
    shots: int
    rotations: np.ndarray
    pe: np.ndarray

    @property
    def pe_min(self) -> float:
        return float(self.pe.min())

    @property
    def pe_max(self) -> float:
        return float(self.pe.max())

    @property
    def spread(self) -> float:
        return self.pe_max - self.pe_min


def default_rotation_set(hyp: BinaryHypothesis, spec: PlatonicSpec, grid: Optional[np.ndarray] = None) -> np.ndarray:
    """``grid`` (default the 1000-point grid); the antipodal pair also gets the aligned orientation.

    For the pair, the appended rotation points its axis along the difference
    of the two Bloch vectors, which is the best single-axis measurement for
    equal priors.
    """
    grid = so3_grid(100, 10) if grid is None else grid
    if spec.solid != "antipodal":
        return grid
    diff = bloch_vector(hyp.rho0) - bloch_vector(hyp.rho1)
    if np.linalg.norm(diff) < 1e-12:
        return grid
    return np.concatenate([grid, align_z(diff)[None]])


def _sweep_chunk(verts, weights, r0, r1, shots, q0, q1, rotations) -> np.ndarray:
    comps = compositions(shots, len(verts))
    out = np.empty(len(rotations))
    for i, rot in enumerate(rotations):
        n = verts @ rot.T
        p0 = np.clip(weights * (1 + n @ r0) / 2, 0.0, 1.0)
        p1 = np.clip(weights * (1 + n @ r1) / 2, 0.0, 1.0)
        out[i] = prob_error_from_probs(p0 / p0.sum(), p1 / p1.sum(), shots, q0, q1, comps)
    return out


def orientation_sweep(
    hyp: BinaryHypothesis,
    spec: PlatonicSpec,
    shots: int,
    rotations: Optional[np.ndarray] = None,
    workers: Optional[int] = None,
    cap: int = ENUMERATION_CAP,
) -> OrientationSweepResult:
    """Exact ``P_e`` for the solid turned by each rotation (applied after ``spec.rotation``).

    Outcome probabilities use the qubit closed form
    ``p(k) = tr(E_k)(1 + n_k . r)/2``, which is what
    :func:`~qframes.povm.probabilities` returns for a Platonic POVM.
    """
    if hyp.rho0.dim != 2:
        raise DetectionError("orientation sweeps are defined for qubits")
    if composition_count(shots, spec.M) > cap:
        raise EnumerationCapExceeded(f"{composition_count(shots, spec.M)} count vectors exceed cap {cap}")
    platonic_povm(spec)  # validates the weights
    rots = default_rotation_set(hyp, spec) if rotations is None else np.asarray(rotations, float).reshape(-1, 3, 3)
    if len(rots) == 0:
        raise DetectionError("rotation set is empty")
    verts = spec.vertices()
    args = (verts, spec.weights, bloch_vector(hyp.rho0), bloch_vector(hyp.rho1), shots, hyp.q0, hyp.q1)
    workers = max(1, int(os.environ.get("QFRAMES_WORKERS", "1")) if workers is None else int(workers))
    if workers == 1 or len(rots) < 2 * workers:
        pe = _sweep_chunk(*args, rots)
    else:
        chunks = np.array_split(rots, workers)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            pe = np.concatenate(list(pool.map(_sweep_chunk, *zip(*[(*args, c) for c in chunks]))))
    return OrientationSweepResult(spec.solid, shots, rots, pe)


def upper_envelope(pf: np.ndarray, pd: np.ndarray) -> np.ndarray:
    """Upper concave hull of ``(pf, pd)`` points, as rows sorted by ``pf``."""
    pts = sorted(set(zip(np.round(pf, 15), np.round(pd, 15))))
    hull = []
    for p in pts:
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            if (x2 - x1) * (p[1] - y1) - (y2 - y1) * (p[0] - x1) >= 0:
                hull.pop()
            else:
                break
        hull.append(p)
    return np.array(hull)


def dominates(better: QdocCurve, worse: QdocCurve, tol: float = 1e-12) -> bool:
    """Every atom of ``worse`` lies on or below the interpolated ``better`` curve."""
    hull = upper_envelope(better.pf, better.pd)
    return bool(np.all(np.interp(worse.pf, hull[:, 0], hull[:, 1]) >= worse.pd - tol))
