"""Empirical pmfs, total-variation distance and chi-square goodness of fit.

These back every Monte Carlo check in the test-suite and in ``cli validate``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import partial
from typing import Callable, Dict, Iterable, Optional, Union

import numpy as np
from scipy import stats as sps

from .distributions import BTParams, bt_pmf, bt_pmf_array, bt_support_cap
from .exceptions import DomainError

__all__ = [
    "EmpiricalPmf",
    "AnalyticPmf",
    "empirical_pmf",
    "bt_analytic",
    "tv_distance",
    "chi_square_gof",
    "mean_z_score",
]


@dataclass(frozen=True)
class EmpiricalPmf:
    counts: Dict[int, int]
    n: int

    def __post_init__(self):
        if self.n <= 0 or sum(self.counts.values()) != self.n:
            raise DomainError("counts must be nonnegative and sum to n > 0")
        if any(c < 0 or k < 0 for k, c in self.counts.items()):
            raise DomainError("counts and support must be nonnegative")

    @property
    def support_cap(self) -> int:
        return max(self.counts)

    def __call__(self, k: int) -> float:
        return self.counts.get(int(k), 0) / self.n

    def probabilities(self, cap: int) -> np.ndarray:
        out = np.zeros(cap + 1)
        for k, c in self.counts.items():
            if k <= cap:
                out[k] = c
        return out / self.n


@dataclass(frozen=True)
class AnalyticPmf:
    """A pmf closure with a known support cap and an optional vectorised table."""

    pmf: Callable[[int], float]
    support_cap: int
    table: Optional[Callable[[int], np.ndarray]] = None

    def __call__(self, k: int) -> float:
        return self.pmf(k)

    def probabilities(self, cap: int) -> np.ndarray:
        if self.table is not None:
            return self.table(cap)
        return np.array([self.pmf(k) for k in range(cap + 1)])


def bt_analytic(params: BTParams) -> AnalyticPmf:
    """``BT(alpha, theta)`` pmf as an :class:`AnalyticPmf` with its adaptive cap."""
    return AnalyticPmf(partial(bt_pmf, params), bt_support_cap(params), partial(bt_pmf_array, params))


def empirical_pmf(samples: Iterable[int]) -> EmpiricalPmf:
    arr = np.asarray(list(samples) if not isinstance(samples, np.ndarray) else samples)
    if arr.size == 0:
        raise DomainError("empirical pmf of an empty sample")
    arr = arr.astype(np.int64, copy=False).ravel()
    if arr.min() < 0:
        raise DomainError("samples must be nonnegative integers")
    counts = np.bincount(arr)
    nz = np.nonzero(counts)[0]
    return EmpiricalPmf({int(k): int(counts[k]) for k in nz}, int(arr.size))


PmfLike = Union[EmpiricalPmf, AnalyticPmf, Callable[[int], float]]


def _probabilities(p: PmfLike, cap: int) -> np.ndarray:
    if hasattr(p, "probabilities"):
        return np.asarray(p.probabilities(cap), dtype=float)
    return np.array([p(k) for k in range(cap + 1)], dtype=float)


def tv_distance(p: PmfLike, q: PmfLike, support_cap: Optional[int] = None) -> float:
    """Total variation ``(1/2) sum |p - q|`` over ``0..support_cap`` plus the pooled tail.

    The cap defaults to the largest ``support_cap`` attribute of the inputs.
    """
    if support_cap is None:
        caps = [getattr(x, "support_cap", None) for x in (p, q)]
        caps = [c for c in caps if c is not None]
        if not caps:
            raise DomainError("support_cap is required for plain pmf callables")
        support_cap = max(caps)
    pa, qa = _probabilities(p, support_cap), _probabilities(q, support_cap)
    tail_p = max(0.0, 1.0 - math.fsum(pa))
    tail_q = max(0.0, 1.0 - math.fsum(qa))
    d = 0.5 * (math.fsum(np.abs(pa - qa)) + abs(tail_p - tail_q))
    return min(1.0, max(0.0, d))


@dataclass(frozen=True)
class ChiSquareResult:
    statistic: float
    dof: int
    p_value: float
    expected: np.ndarray
    observed: np.ndarray

    def __iter__(self):
        return iter((self.statistic, self.dof, self.p_value))


def chi_square_gof(samples, pmf: PmfLike, min_expected: float = 5.0, support_cap: Optional[int] = None) -> ChiSquareResult:
    """Pearson chi-square test of integer samples against ``pmf``.

    Cells ``0..cap`` whose expected count is below ``min_expected`` are pooled
    with everything above the cap into one tail cell; if that cell is still
    short it is merged into the last retained cell. Unpacks to
    ``(statistic, dof, p_value)``.
    """
    arr = np.asarray(samples, dtype=np.int64).ravel()
    n = arr.size
    if n == 0:
        raise DomainError("no samples")
    if support_cap is None:
        support_cap = getattr(pmf, "support_cap", None)
        if support_cap is None:
            support_cap = int(arr.max())
    probs = _probabilities(pmf, support_cap)
    expected = n * probs
    observed = np.bincount(np.minimum(arr, support_cap + 1), minlength=support_cap + 2)[: support_cap + 1]

    keep = expected >= min_expected
    exp_kept = list(expected[keep])
    obs_kept = list(observed[keep])
    tail_obs = n - int(sum(obs_kept))
    tail_exp = n - math.fsum(exp_kept)
    if tail_exp < min_expected and exp_kept:
        exp_kept[-1] += tail_exp
        obs_kept[-1] += tail_obs
    else:
        exp_kept.append(tail_exp)
        obs_kept.append(tail_obs)
    exp_arr, obs_arr = np.array(exp_kept), np.array(obs_kept, dtype=float)
    dof = exp_arr.size - 1
    if dof < 1:
        raise DomainError("fewer than two cells after pooling; chi-square undefined")
    stat = float(np.sum((obs_arr - exp_arr) ** 2 / exp_arr))
    return ChiSquareResult(stat, dof, float(sps.chi2.sf(stat, dof)), exp_arr, obs_arr)


def mean_z_score(samples, expected_mean: float) -> float:
    """``(sample mean - expected_mean) / standard error``."""
    arr = np.asarray(samples, dtype=float).ravel()
    if arr.size < 2:
        raise DomainError("need at least two samples")
    se = arr.std(ddof=1) / math.sqrt(arr.size)
    if se == 0:
        return 0.0 if arr.mean() == expected_mean else math.inf
    return float((arr.mean() - expected_mean) / se)
