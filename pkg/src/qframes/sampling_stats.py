"""Multinomial shot statistics for finite measurement records.

Deviations are defined as ``d_k = p_hat(k) - p(k)`` with
``p_hat(k) = l_k / L``.  Their exact second moments are the multinomial
covariance divided by ``L^2``:

    E[d_k^2]   =  p(k) (1 - p(k)) / L
    E[d_j d_k] = -p(j) p(k) / L          (j != k)

:func:`raw_moment_offdiagonal` keeps the alternative off-diagonal value
``-p(j) p(k) (L - 1) / L``, which results from reading the count covariance
``-L p(j) p(k)`` as the raw moment ``E[l_j l_k]``.  It is reported next to
the correct value for comparison only; nothing computes with it.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import Optional, Tuple

import numpy as np
from scipy.special import gammaln

from ._seeding import make_rng

PROB_TOL = 1e-10


class SamplingError(ValueError):
    pass


def check_probability(p, tol: float = PROB_TOL) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise SamplingError(f"probability vector must be 1-D and non-empty, got shape {p.shape}")
    if not np.all(np.isfinite(p)) or np.any(p < -tol) or abs(p.sum() - 1) > tol:
        raise SamplingError(f"not a probability vector: {p}")
    return np.clip(p, 0.0, 1.0)


@dataclass(frozen=True, eq=False)
class OutcomeCounts:
    counts: np.ndarray
    shots: int

    def __post_init__(self):
        c = np.array(self.counts, dtype=np.int64)
        if c.ndim != 1 or np.any(c < 0):
            raise SamplingError("counts must be a 1-D array of non-negative integers")
        if int(c.sum()) != int(self.shots):
            raise SamplingError(f"counts sum to {int(c.sum())}, expected {self.shots}")
        c.setflags(write=False)
        object.__setattr__(self, "counts", c)
        object.__setattr__(self, "shots", int(self.shots))

    @classmethod
    def of(cls, counts) -> "OutcomeCounts":
        c = np.asarray(counts, dtype=np.int64)
        return cls(c, int(c.sum()))

    @property
    def M(self) -> int:
        return self.counts.shape[0]

    def rel_freq(self) -> "RelFreq":
        return RelFreq(self.counts, self.shots)


@dataclass(frozen=True, eq=False)
class RelFreq:
    """Relative frequencies ``l_k / L``; ``exact`` keeps them as fractions."""

    counts: np.ndarray
    shots: int

    @property
    def values(self) -> np.ndarray:
        return np.asarray(self.counts, dtype=float) / self.shots

    @property
    def exact(self) -> Tuple[Fraction, ...]:
        return tuple(Fraction(int(c), self.shots) for c in self.counts)


@dataclass(frozen=True)
class DeviationMoments:
    mean: np.ndarray
    second: np.ndarray


def _conditional_binomial(rng: np.random.Generator, p: np.ndarray, shots: int, size: int) -> np.ndarray:
    """Multinomial draws as a chain of binomials.

    ``l_1 ~ Bin(L, p_1)``, ``l_k ~ Bin(L - l_1 - ... - l_{k-1}, p_k / (1 - p_1 - ... - p_{k-1}))``
    and the last outcome takes the remainder.  This fixed algorithm is what
    makes counts reproducible from a seed.
    """
    m = p.shape[0]
    out = np.zeros((size, m), dtype=np.int64)
    remaining = np.full(size, shots, dtype=np.int64)
    mass_left = 1.0
    for k in range(m - 1):
        if mass_left <= 0:
            break
        q = min(max(p[k] / mass_left, 0.0), 1.0)
        out[:, k] = rng.binomial(remaining, q)
        remaining -= out[:, k]
        mass_left -= p[k]
    out[:, m - 1] = remaining
    return out


def sample_counts(p, shots: int, rng_seed=None) -> OutcomeCounts:
    """One multinomial record of ``shots`` outcomes."""
    p = check_probability(p)
    if shots < 1:
        raise SamplingError("shots must be >= 1")
    return OutcomeCounts(_conditional_binomial(make_rng(rng_seed), p, int(shots), 1)[0], shots)


def sample_counts_batch(p, shots: int, draws: int, rng_seed=None) -> np.ndarray:
    """``(draws, M)`` array of independent multinomial records."""
    p = check_probability(p)
    if shots < 1:
        raise SamplingError("shots must be >= 1")
    return _conditional_binomial(make_rng(rng_seed), p, int(shots), int(draws))


def deviation_moments_analytic(p, shots: int) -> DeviationMoments:
    p = check_probability(p)
    second = (np.diag(p) - np.outer(p, p)) / shots
    return DeviationMoments(np.zeros_like(p), second)


def raw_moment_offdiagonal(p, shots: int) -> np.ndarray:
    """Off-diagonal ``-p(j) p(k) (L-1)/L`` with the correct diagonal; comparison only."""
    p = check_probability(p)
    out = -np.outer(p, p) * (shots - 1) / shots
    np.fill_diagonal(out, p * (1 - p) / shots)
    return out


def empirical_deviation_moments(p, shots: int, draws: int, rng_seed=None):
    """Sample mean and second-moment matrix of ``d`` with standard errors.

    Returns ``(mean, second, second_stderr)`` where ``second_stderr`` is the
    per-entry standard error of the sample mean of ``d_j d_k``.
    """
    p = check_probability(p)
    counts = sample_counts_batch(p, shots, draws, rng_seed)
    d = counts / shots - p
    prod = d[:, :, None] * d[:, None, :]
    second = prod.mean(axis=0)
    stderr = prod.std(axis=0, ddof=1) / np.sqrt(draws)
    return d.mean(axis=0), second, stderr


def coeff_error_moments(p, shots: int, traces) -> np.ndarray:
    """``E[e_j e_k]`` for frame-coefficient errors ``e_k = d_k / sqrt(tr E_k)``."""
    traces = np.asarray(traces, dtype=float)
    if np.any(traces <= 0):
        raise SamplingError("traces must be positive")
    second = deviation_moments_analytic(p, shots).second
    if traces.shape != (second.shape[0],):
        raise SamplingError(f"expected {second.shape[0]} traces, got {traces.shape}")
    root = np.sqrt(traces)
    return second / np.outer(root, root)


def log_multinomial_pmf(counts, p) -> float:
    """Log probability of a count vector; ``-inf`` when impossible."""
    c = np.asarray(counts.counts if isinstance(counts, OutcomeCounts) else counts, dtype=np.int64)
    p = check_probability(p)
    if c.shape != p.shape:
        raise SamplingError(f"counts shape {c.shape} does not match p shape {p.shape}")
    if np.any((c > 0) & (p == 0)):
        return -np.inf
    shots = int(c.sum())
    nz = c > 0
    log_coef = gammaln(shots + 1) - gammaln(c + 1).sum()
    return float(log_coef + np.sum(c[nz] * np.log(p[nz])))


def multinomial_pmf(counts, p) -> float:
    """``L! / (l_1! ... l_M!) prod_k p(k)^l_k`` with ``0^0 = 1``."""
    return float(np.exp(log_multinomial_pmf(counts, p)))


def composition_count(shots: int, m: int) -> int:
    return comb(shots + m - 1, m - 1)


def compositions(shots: int, m: int, cap: Optional[int] = None) -> np.ndarray:
    """All count vectors of length ``m`` summing to ``shots``, one per row.

    Rows are in reverse lexicographic order (``(L, 0, ..., 0)`` first).
    """
    total = composition_count(shots, m)
    if cap is not None and total > cap:
        raise SamplingError(f"{total} compositions exceed the enumeration cap {cap}")
    if m == 1:
        return np.array([[shots]], dtype=np.int64)
    blocks = []
    for first in range(shots, -1, -1):
        rest = compositions(shots - first, m - 1)
        blocks.append(np.column_stack([np.full(len(rest), first, dtype=np.int64), rest]))
    return np.vstack(blocks)


def log_pmf_table(comps: np.ndarray, p) -> np.ndarray:
    """Vectorized :func:`log_multinomial_pmf` over the rows of ``comps``."""
    p = check_probability(p)
    shots = int(comps[0].sum())
    log_coef = gammaln(shots + 1) - gammaln(comps + 1).sum(axis=1)
    with np.errstate(divide="ignore"):
        logp = np.log(p)
    terms = np.where(comps > 0, comps * np.where(p > 0, logp, 0.0), 0.0)
    impossible = np.any((comps > 0) & (p == 0), axis=1)
    out = log_coef + terms.sum(axis=1)
    out[impossible] = -np.inf
    return out
