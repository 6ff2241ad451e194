"""Linear state estimation from finite-shot relative frequencies.

The shifted state ``rho - I/d`` is analysed by the ``Q_k`` frame of a tight
IC POVM.  Its frame coefficients are a known affine function of the outcome
probabilities,

    a_k = p(k) / sqrt(tr E_k) - sqrt(tr E_k) / d,

so replacing ``p`` with relative frequencies gives noisy coefficients, and
the canonical dual ``Q_k / C`` synthesizes the estimate.  The error
``||rho_hat - rho||^2`` is measured in the Hilbert-Schmidt norm and the
estimate is never projected back onto the state space on this path.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from ._seeding import child_rng
from .coord_frame import CoordFrame, DualFrame, canonical_dual
from .herm_space import HermitianOp, default_basis, is_density, project_identity_component
from .povm import Povm, PovmError, entf_params, probabilities, tight_ic_check, traceless_rep
from .sampling_stats import _conditional_binomial, coeff_error_moments


class EstimationError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class EstimationConfig:
    rho: HermitianOp
    povm: Povm
    shots: int
    trials: int = 500
    seed: int = 0

    def __post_init__(self):
        if not is_density(self.rho):
            raise EstimationError("rho is not a density operator")
        if self.shots < 1:
            raise EstimationError("shots must be >= 1")
        if self.trials < 1:
            raise EstimationError("trials must be >= 1")
        if not tight_ic_check(self.povm).is_tight_ic:
            raise EstimationError("POVM is not tight IC")


@dataclass(frozen=True)
class TrialRecord:
    counts: np.ndarray
    coeff_errors: np.ndarray
    error_sq: float

    @property
    def rel_freq(self) -> np.ndarray:
        return self.counts / self.counts.sum()


@dataclass(frozen=True)
class EstimationSummary:
    M: int
    shots: int
    trials: int
    mean_error_sq: float
    std_error_sq: float
    predicted_uncorrelated: float
    predicted_exact: float
    mean_estimate_error: float
    records: Optional[List[TrialRecord]] = field(default=None, repr=False)

    @property
    def stderr(self) -> float:
        return self.std_error_sq / np.sqrt(self.trials)


class _QModel:
    """Everything a trial needs, precomputed once per (POVM, state)."""

    def __init__(self, povm: Povm, rho: HermitianOp):
        report = tight_ic_check(povm)
        if not report.is_tight_ic:
            raise EstimationError(f"POVM is not tight IC (residual {report.residual:.3e})")
        rep = traceless_rep(povm)
        self.d = povm.dim
        self.basis = default_basis(self.d)
        self.rep = rep
        self.traces = rep.traces
        self.C = report.C
        self.frame = CoordFrame(rep.q_coords(self.basis))
        self.dual: DualFrame = canonical_dual(self.frame)
        self.p = probabilities(povm, rho)
        shifted, _ = project_identity_component(rho)
        self.target = self.basis.coords(shifted.matrix)[1:]

    def coeffs(self, freqs: np.ndarray) -> np.ndarray:
        root = np.sqrt(self.traces)
        return freqs / root - root / self.d

    def errors_sq(self, counts: np.ndarray, shots: int):
        """Coefficient errors and ``||rho_hat - rho||^2`` for a batch of count rows."""
        freqs = np.atleast_2d(counts) / shots
        e = (freqs - self.p) / np.sqrt(self.traces)
        recon = self.coeffs(freqs) @ self.dual.vectors
        return e, np.sum((recon - self.target) ** 2, axis=1), recon

    def estimate(self, recon_coords: np.ndarray) -> HermitianOp:
        c = np.concatenate([[1 / np.sqrt(self.d)], recon_coords])
        return HermitianOp(self.basis.matrices(c))


def frame_coeffs(povm: Povm, rho: HermitianOp) -> np.ndarray:
    """``a_k = <<Q_k | rho - I/d>>``, checked against the probability form."""
    rep = traceless_rep(povm)
    if not tight_ic_check(povm).is_tight_ic:
        raise EstimationError("POVM is not tight IC")
    shifted, _ = project_identity_component(rho)
    a = np.array([np.einsum("ij,ji->", q.matrix, shifted.matrix).real for q in rep.q_ops])
    root = np.sqrt(rep.traces)
    via_p = probabilities(povm, rho) / root - root / povm.dim
    if np.max(np.abs(a - via_p)) > 1e-12:
        raise EstimationError(f"coefficient forms disagree by {np.max(np.abs(a - via_p)):.3e}")
    return a


def _trial_counts(p: np.ndarray, shots: int, seed: int, start: int, stop: int) -> np.ndarray:
    rows = [_conditional_binomial(child_rng(seed, t), p, shots, 1)[0] for t in range(start, stop)]
    return np.array(rows, dtype=np.int64).reshape(stop - start, p.shape[0])


def default_workers() -> int:
    return max(1, int(os.environ.get("QFRAMES_WORKERS", "1")))


def trial_counts(p, shots: int, seed: int, trials: int, workers: Optional[int] = None) -> np.ndarray:
    """Counts for trials ``0..trials-1``; trial ``t`` draws from ``SeedSequence([seed, t])``.

    The result does not depend on ``workers``.
    """
    p = np.asarray(p, dtype=float)
    workers = default_workers() if workers is None else max(1, int(workers))
    if workers == 1 or trials < 2 * workers:
        return _trial_counts(p, shots, seed, 0, trials)
    bounds = np.linspace(0, trials, workers + 1).astype(int)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = pool.map(_trial_counts, *zip(*[(p, shots, seed, a, b) for a, b in zip(bounds, bounds[1:])]))
        return np.vstack(list(parts))


def estimate_once(config: EstimationConfig, trial_seed: int, exact_frequencies: bool = False) -> TrialRecord:
    """One trial: sample ``shots`` outcomes, reconstruct, score.

    With ``exact_frequencies`` the relative frequencies are replaced by the
    true probabilities (the infinite-shot limit).
    """
    model = _QModel(config.povm, config.rho)
    if exact_frequencies:
        counts = model.p * config.shots
    else:
        counts = _conditional_binomial(child_rng(config.seed, trial_seed), model.p, config.shots, 1)[0]
    e, err, _ = model.errors_sq(counts, config.shots)
    return TrialRecord(np.asarray(counts), e[0], float(err[0]))


def estimate_from_counts(povm: Povm, rho: HermitianOp, counts) -> tuple:
    """``(rho_hat, error_sq)`` for an explicit count vector (fractional counts allowed)."""
    model = _QModel(povm, rho)
    counts = np.asarray(counts, dtype=float)
    _, err, recon = model.errors_sq(counts, counts.sum())
    return model.estimate(recon[0]), float(err[0])


def analytic_prediction(povm: Povm, rho: HermitianOp, shots: int) -> dict:
    """Expected ``||rho_e||^2`` under the uncorrelated model and exactly.

    ``uncorrelated`` is ``N^2 / (M^2 a^2) sum_k Delta_k^2`` with
    ``Delta_k^2 = p(k)(1 - p(k)) / (L tr E_k)``; ``exact`` uses the full
    multinomial covariance of the coefficient errors with the canonical dual.
    """
    rep = traceless_rep(povm)
    ent = entf_params(rep)
    p = probabilities(povm, rho)
    cov = coeff_error_moments(p, shots, rep.traces)
    uncorrelated = ent.N**2 / (ent.M**2 * ent.a**2) * float(np.trace(cov))
    exact = expected_error_for_dual(povm, rho, shots, None, correlated=True)
    return {"uncorrelated": uncorrelated, "exact": exact}


def expected_error_for_dual(
    povm: Povm, rho: HermitianOp, shots: int, dual: Optional[DualFrame], correlated: bool = True
) -> float:
    """``sum_jk E[e_j e_k] <Q~_j, Q~_k>`` for any dual of the ``Q_k`` frame.

    ``dual=None`` selects the canonical dual.  With ``correlated=False`` the
    off-diagonal covariances are dropped.
    """
    rep = traceless_rep(povm)
    frame = rep.q_frame()
    dual = dual or canonical_dual(frame)
    if dual.vectors.shape != frame.vectors.shape:
        raise EstimationError("dual does not match the Q_k frame")
    cov = coeff_error_moments(probabilities(povm, rho), shots, rep.traces)
    if not correlated:
        cov = np.diag(np.diag(cov))
    return float(np.sum(cov * (dual.vectors @ dual.vectors.T)))


def run_experiment(
    config: EstimationConfig,
    keep_records: bool = False,
    exact_frequencies: bool = False,
    workers: Optional[int] = None,
) -> EstimationSummary:
    model = _QModel(config.povm, config.rho)
    if exact_frequencies:
        counts = np.tile(model.p * config.shots, (config.trials, 1))
    else:
        counts = trial_counts(model.p, config.shots, config.seed, config.trials, workers)
    e, err, recon = model.errors_sq(counts, config.shots)
    try:
        pred = analytic_prediction(config.povm, config.rho, config.shots)
    except PovmError:
        pred = {"uncorrelated": float("nan"), "exact": expected_error_for_dual(config.povm, config.rho, config.shots, None)}
    mean_recon_err = float(np.linalg.norm(recon.mean(axis=0) - model.target))
    records = None
    if keep_records:
        records = [TrialRecord(c, ek, float(x)) for c, ek, x in zip(counts, e, err)]
    return EstimationSummary(
        M=config.povm.M,
        shots=config.shots,
        trials=config.trials,
        mean_error_sq=float(err.mean()),
        std_error_sq=float(err.std(ddof=1)) if config.trials > 1 else 0.0,
        predicted_uncorrelated=pred["uncorrelated"],
        predicted_exact=pred["exact"],
        mean_estimate_error=mean_recon_err,
        records=records,
    )


def cell_seed(seed: int, m: int, shots: int) -> int:
    """Seed for one grid cell, derived from the base seed, ``M`` and ``L``."""
    return int(np.random.SeedSequence([int(seed), int(m), int(shots)]).generate_state(1)[0])


def tradeoff_grid(
    povms: Sequence[Povm],
    shots_list: Sequence[int],
    rho: HermitianOp,
    trials: int = 500,
    seed: int = 0,
    exact_frequencies: bool = False,
    workers: Optional[int] = None,
) -> List[EstimationSummary]:
    """Summaries for every (POVM, L) pair, POVM-major."""
    out = []
    for povm in povms:
        for shots in shots_list:
            cfg = EstimationConfig(rho, povm, int(shots), trials, cell_seed(seed, povm.M, shots))
            out.append(run_experiment(cfg, exact_frequencies=exact_frequencies, workers=workers))
    return out


def physical_projection(rho_hat: HermitianOp) -> HermitianOp:
    """Closest density operator in Hilbert-Schmidt norm.

    Eigenvalues are projected onto the probability simplex.  Not used by any
    of the error statistics above.
    """
    lam, vec = np.linalg.eigh(rho_hat.matrix)
    u = np.sort(lam)[::-1]
    css = np.cumsum(u) - 1
    idx = np.arange(1, len(u) + 1)
    r = idx[u - css / idx > 0][-1]
    shifted = np.maximum(lam - css[r - 1] / r, 0.0)
    return HermitianOp((vec * shifted) @ vec.conj().T)
