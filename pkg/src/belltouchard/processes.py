"""Path simulation and algebra of Bell-Touchard counting processes.

Paths keep their batch structure: each :class:`EventRecord` is one arrival
epoch together with the number of units counted at that epoch.
"""

from __future__ import annotations

import bisect
import csv
import io
import math
from dataclasses import dataclass, field
from functools import cached_property, partial
from typing import Callable, List, Optional, Sequence

import numpy as np
from scipy import integrate
from scipy.special import gammaln, logsumexp, xlogy

from .distributions import BTParams, ZTPParams, bt_log_pmf, ztp_sample
from .exceptions import (
    BoundViolationError,
    DomainError,
    IntegrationError,
    ParameterMismatchError,
    TruncationError,
)
from .streams import run_batch

__all__ = [
    "EventRecord",
    "EventPath",
    "RateFunction",
    "CompoundPoissonSpec",
    "simulate_bt",
    "simulate_bt_batch",
    "superpose",
    "superpose_params",
    "decompose",
    "decomposition_params",
    "decomposition_joint_pmf",
    "decomposition_joint_mgf",
    "convolve_different_theta",
    "compound_poisson_sample",
    "iterated_poisson_sample",
    "mean_jump_fn",
    "simulate_nhbt",
    "iterated_nhpp_sample",
    "multiple_poisson_sample",
    "multiple_poisson_truncation",
    "paths_to_csv",
    "batch_summary",
]

MATCH_TOL = 1e-12


@dataclass(frozen=True)
class EventRecord:
    time: float
    jump: int


@dataclass(frozen=True)
class EventPath:
    """One simulated path on ``[0, horizon]``.

    ``params`` is ``None`` for paths that are not homogeneous Bell-Touchard
    (for example nonhomogeneous ones); ``theta`` is then given directly.
    """

    params: Optional[BTParams]
    horizon: float
    events: tuple = ()
    seed: Optional[int] = None
    theta: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "events", tuple(self.events))
        if self.theta is None:
            if self.params is None:
                raise DomainError("EventPath needs either params or theta")
            object.__setattr__(self, "theta", self.params.theta)
        if not (self.horizon > 0 and math.isfinite(self.horizon)):
            raise DomainError(f"horizon must be positive, got {self.horizon!r}")
        last = 0.0
        for ev in self.events:
            if not (last < ev.time <= self.horizon):
                raise DomainError("event times must be positive, strictly increasing and <= horizon")
            if ev.jump < 1:
                raise DomainError("event jumps must be >= 1")
            last = ev.time

    @property
    def times(self) -> np.ndarray:
        return np.array([ev.time for ev in self.events], dtype=float)

    @property
    def jumps(self) -> np.ndarray:
        return np.array([ev.jump for ev in self.events], dtype=np.int64)

    @property
    def total(self) -> int:
        """``N(horizon)``."""
        return sum(ev.jump for ev in self.events)

    def count_at(self, t: float) -> int:
        """``N(t)``: units counted at epochs ``<= t`` (right-continuous)."""
        idx = bisect.bisect_right([ev.time for ev in self.events], t)
        return sum(ev.jump for ev in self.events[:idx])


# ---------------------------------------------------------------------------
# homogeneous simulation
# ---------------------------------------------------------------------------


def simulate_bt(
    params: BTParams, horizon: float, rng: np.random.Generator, seed: Optional[int] = None
) -> EventPath:
    """Simulate one Bell-Touchard path on ``[0, horizon]``.

    Waiting times are ``Exp(alpha (e^theta - 1))`` and batch sizes are
    zero-truncated Poisson(theta); for each epoch the gap is drawn before the
    batch size.
    """
    if not (horizon > 0 and math.isfinite(horizon)):
        raise DomainError(f"horizon must be positive, got {horizon!r}")
    scale = 1.0 / params.event_rate
    ztp = ZTPParams(params.theta)
    events = []
    clock = 0.0
    while True:
        clock += rng.exponential(scale)
        if clock > horizon:
            break
        events.append(EventRecord(clock, ztp_sample(ztp, rng)))
    return EventPath(params, float(horizon), tuple(events), seed)


def _bt_path_task(params, horizon, rng, seed):
    return simulate_bt(params, horizon, rng, seed)


def simulate_bt_batch(
    params: BTParams, horizon: float, n_paths: int, master_seed: int, workers: int = 1
) -> List[EventPath]:
    """``n_paths`` independent paths, path ``i`` driven by its own derived stream."""
    return run_batch(partial(_bt_path_task, params, float(horizon)), n_paths, master_seed, workers)


# ---------------------------------------------------------------------------
# superposition and decomposition
# ---------------------------------------------------------------------------


def superpose_params(params_list: Sequence[BTParams]) -> BTParams:
    """Parameters of a sum of independent processes sharing ``theta``."""
    if not params_list:
        raise DomainError("need at least one parameter set")
    theta = params_list[0].theta
    for p in params_list[1:]:
        if abs(p.theta - theta) > MATCH_TOL:
            raise ParameterMismatchError(f"theta differs: {p.theta} vs {theta}")
    return BTParams(math.fsum(p.alpha for p in params_list), theta)


def superpose(paths: Sequence[EventPath]) -> EventPath:
    """Merge paths sharing ``theta`` and horizon into one time-ordered path.

    Epochs that coincide exactly are combined into a single record.
    """
    if not paths:
        raise DomainError("need at least one path")
    if len(paths) == 1:
        return paths[0]
    first = paths[0]
    for p in paths[1:]:
        if abs(p.theta - first.theta) > MATCH_TOL:
            raise ParameterMismatchError(f"theta differs: {p.theta} vs {first.theta}")
        if abs(p.horizon - first.horizon) > MATCH_TOL:
            raise ParameterMismatchError(f"horizon differs: {p.horizon} vs {first.horizon}")
    merged = sorted((ev for p in paths for ev in p.events), key=lambda ev: ev.time)
    events: List[EventRecord] = []
    for ev in merged:
        if events and events[-1].time == ev.time:
            events[-1] = EventRecord(ev.time, events[-1].jump + ev.jump)
        else:
            events.append(ev)
    if all(p.params is not None for p in paths):
        params = superpose_params([p.params for p in paths])
    else:
        params = None
    return EventPath(params, first.horizon, tuple(events), None, first.theta)


def _check_probabilities(p: Sequence[float]) -> np.ndarray:
    probs = np.asarray(p, dtype=float).ravel()
    if probs.size == 0 or not np.all(np.isfinite(probs)) or np.any(probs <= 0.0):
        raise DomainError(f"class probabilities must be positive, got {p!r}")
    if abs(probs.sum() - 1.0) > 1e-12:
        raise DomainError(f"class probabilities must sum to 1, got {probs.sum()!r}")
    return probs


def decomposition_params(params: BTParams, p: float) -> BTParams:
    """Law of a class kept with probability ``p``: ``(alpha e^{(1-p) theta}, p theta)``."""
    return BTParams(params.alpha * math.exp((1.0 - p) * params.theta), p * params.theta)


def decompose(path: EventPath, p: Sequence[float], rng: np.random.Generator) -> List[EventPath]:
    """Split a path into classes by labelling every counted unit independently.

    Each of the ``jump`` units of an epoch goes to class ``i`` with
    probability ``p[i]``; a class path records the epoch only if it received at
    least one unit. The class paths are dependent.
    """
    probs = _check_probabilities(p)
    if probs.size == 1:
        return [path]
    per_class: List[List[EventRecord]] = [[] for _ in probs]
    for ev in path.events:
        split = rng.multinomial(ev.jump, probs)
        for i, units in enumerate(split):
            if units:
                per_class[i].append(EventRecord(ev.time, int(units)))
    out = []
    for pi, events in zip(probs, per_class):
        params = decomposition_params(path.params, pi) if path.params is not None else None
        out.append(EventPath(params, path.horizon, tuple(events), None, float(pi * path.theta)))
    return out


def decomposition_joint_pmf(params: BTParams, t: float, p: float, k: int, n: int) -> float:
    """``P[N1(t) = k, N2(t) = n]`` for a two-class decomposition.

    Binomial split of ``N(t) = n + k`` times the ``BT(alpha t, theta)`` mass at
    ``n + k``.
    """
    if not (0.0 <= p <= 1.0):
        raise DomainError(f"p must lie in [0, 1], got {p!r}")
    if int(k) != k or int(n) != n or k < 0 or n < 0:
        raise DomainError("k and n must be nonnegative integers")
    k, n = int(k), int(n)
    log_binom = gammaln(n + k + 1.0) - gammaln(k + 1.0) - gammaln(n + 1.0)
    log_split = log_binom + xlogy(k, p) + xlogy(n, 1.0 - p)
    if not math.isfinite(log_split):
        return 0.0
    return math.exp(log_split + bt_log_pmf(params.at_time(t), n + k))


def decomposition_joint_mgf(params: BTParams, t: float, p: float, u1: float, u2: float) -> float:
    """Joint MGF ``E[exp(u1 N1 + u2 N2)] = exp(alpha t (e^{theta (p e^u1 + q e^u2)} - e^theta))``,
    with ``u1`` attached to the class of probability ``p``."""
    if not (0.0 <= p <= 1.0):
        raise DomainError(f"p must lie in [0, 1], got {p!r}")
    q = 1.0 - p
    mix = p * math.exp(u1) + q * math.exp(u2)
    return math.exp(params.alpha * t * (math.exp(params.theta * mix) - math.exp(params.theta)))


# ---------------------------------------------------------------------------
# sums with different theta
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CompoundPoissonSpec:
    """Compound Poisson law: batches at ``rate``, sizes from ``jump_pmf`` on ``{1, 2, ...}``."""

    rate: float
    jump_pmf: Callable[[int], float] = field(compare=False)

    def __post_init__(self):
        if not (self.rate > 0 and math.isfinite(self.rate)):
            raise DomainError(f"rate must be positive, got {self.rate!r}")

    @cached_property
    def jump_cdf(self) -> np.ndarray:
        """Cumulative jump distribution over ``1..K``, ``K`` where the mass reaches 1."""
        cdf = []
        total = 0.0
        for x in range(1, 10_001):
            total += self.jump_pmf(x)
            cdf.append(total)
            if total >= 1.0 - 1e-15:
                break
        else:
            raise DomainError(f"jump pmf sums to {total} over 1..10000, not 1")
        return np.array(cdf)


def convolve_different_theta(a: BTParams, b: BTParams) -> CompoundPoissonSpec:
    """Law of ``N1(t) + N2(t)`` for independent processes with any ``theta``.

    Rate ``alpha1 nu(theta1) + alpha2 nu(theta2)`` with ``nu = e^theta - 1``;
    jump pmf ``(alpha1 theta1^x + alpha2 theta2^x) / (rate x!)`` on ``x >= 1``.
    """
    rate = a.event_rate + b.event_rate
    log_rate = math.log(rate)
    log_a, log_b = math.log(a.alpha), math.log(b.alpha)
    log_ta, log_tb = math.log(a.theta), math.log(b.theta)

    def jump_pmf(x: int) -> float:
        if x < 1:
            return 0.0
        num = logsumexp([log_a + x * log_ta, log_b + x * log_tb])
        return math.exp(num - log_rate - math.lgamma(x + 1))

    return CompoundPoissonSpec(rate, jump_pmf)


def compound_poisson_sample(spec: CompoundPoissonSpec, t: float, rng: np.random.Generator, size=None):
    """Draw the compound Poisson total at time ``t``; jump sizes by table inversion."""
    table = spec.jump_cdf
    batches = rng.poisson(spec.rate * t, size=size)
    n_jumps = int(np.sum(batches))
    idx = np.searchsorted(table, rng.random(n_jumps), side="right")
    jumps = np.minimum(idx, table.size - 1) + 1
    if size is None:
        return int(jumps.sum())
    batches = np.asarray(batches)
    owner = np.repeat(np.arange(batches.size), batches.ravel())
    return np.bincount(owner, weights=jumps, minlength=batches.size).astype(np.int64).reshape(batches.shape)


# ---------------------------------------------------------------------------
# alternative representations
# ---------------------------------------------------------------------------


def iterated_poisson_sample(nu: float, omega: float, t: float, rng: np.random.Generator, size=None):
    """Draw ``N1(N2(t))`` for Poisson processes of rates ``nu`` (outer) and ``omega`` (inner).

    Distributed as ``BT(omega e^{-nu} t, nu)``.
    """
    if not (nu > 0 and omega > 0 and t > 0):
        raise DomainError("nu, omega and t must be positive")
    inner = rng.poisson(omega * t, size=size)
    outer = rng.poisson(nu * np.asarray(inner, dtype=float))
    return int(outer) if size is None else outer.astype(np.int64)


def _tail_bound(alpha: float, theta: float, K: int) -> float:
    # sum_{n>K} alpha theta^n / n!  <=  alpha theta^{K+1}/(K+1)! / (1 - theta/(K+2))
    if K + 2 <= theta:
        return math.inf
    first = math.exp(math.log(alpha) + (K + 1) * math.log(theta) - math.lgamma(K + 2))
    return first / (1.0 - theta / (K + 2))


def multiple_poisson_truncation(params: BTParams, tol: float = 1e-12) -> int:
    """Smallest ``K`` whose rate tail ``sum_{n>K} alpha theta^n / n!`` is certified below ``tol``."""
    K = 1
    while _tail_bound(params.alpha, params.theta, K) >= tol:
        K += 1
    return K


def multiple_poisson_sample(
    params: BTParams,
    t: float,
    rng: np.random.Generator,
    K: Optional[int] = None,
    tol: Optional[float] = 1e-12,
    size=None,
):
    """Draw ``sum_n n xi_n(t)`` with independent ``xi_n ~ Poisson(t alpha theta^n / n!)``, ``n <= K``.

    ``K`` defaults to :func:`multiple_poisson_truncation`. An explicit ``K``
    whose tail bound is not below ``tol`` raises :class:`TruncationError`;
    pass ``tol=None`` to accept any ``K``.
    """
    if K is None:
        K = multiple_poisson_truncation(params, 1e-12 if tol is None else tol)
    elif int(K) != K or K < 1:
        raise DomainError(f"K must be a positive integer, got {K!r}")
    elif tol is not None and _tail_bound(params.alpha, params.theta, int(K)) >= tol:
        raise TruncationError(f"K={K} leaves a rate tail above {tol:g}")
    K = int(K)
    n = np.arange(1, K + 1)
    rates = t * np.exp(math.log(params.alpha) + n * math.log(params.theta) - gammaln(n + 1.0))
    shape = (K,) if size is None else tuple(np.atleast_1d(size)) + (K,)
    xi = rng.poisson(rates, size=shape)
    totals = xi @ n
    return int(totals) if size is None else totals.astype(np.int64)


# ---------------------------------------------------------------------------
# nonhomogeneous process
# ---------------------------------------------------------------------------


class _ConstantRate:
    def __init__(self, c):
        self.c = float(c)

    def __call__(self, t):
        return self.c

    def cumulative(self, t):
        return self.c * t


class _LinearRate:
    def __init__(self, a, b):
        self.a, self.b = float(a), float(b)

    def __call__(self, t):
        return self.a + self.b * t

    def cumulative(self, t):
        return self.a * t + 0.5 * self.b * t * t


class _SinSquaredRate:
    def __init__(self, a, b, omega):
        self.a, self.b, self.omega = float(a), float(b), float(omega)

    def __call__(self, t):
        return self.a + self.b * math.sin(self.omega * t) ** 2

    def cumulative(self, t):
        w = self.omega
        return self.a * t + self.b * (0.5 * t - math.sin(2.0 * w * t) / (4.0 * w))


@dataclass(frozen=True)
class RateFunction:
    """Time-varying intensity ``alpha(t) >= 0`` with ``alpha(t) <= upper_bound``.

    ``cumulative`` is an optional closed form for ``m(t) = int_0^t alpha``.
    """

    eval: Callable[[float], float]
    upper_bound: float
    cumulative: Optional[Callable[[float], float]] = None
    name: str = "custom"

    def __post_init__(self):
        if not (self.upper_bound > 0 and math.isfinite(self.upper_bound)):
            raise DomainError(f"upper_bound must be positive and finite, got {self.upper_bound!r}")

    def __call__(self, t: float) -> float:
        return self.eval(t)

    @classmethod
    def constant(cls, c: float) -> "RateFunction":
        if c < 0:
            raise DomainError("rate must be nonnegative")
        fn = _ConstantRate(c)
        # any positive bound is valid for the zero rate
        return cls(fn, c if c > 0 else 1.0, fn.cumulative, "constant")

    @classmethod
    def linear(cls, a: float, b: float, horizon: float) -> "RateFunction":
        """``alpha(t) = a + b t``, nonnegative on ``[0, horizon]``."""
        lo, hi = sorted((a, a + b * horizon))
        if lo < 0:
            raise DomainError("linear rate goes negative on the horizon")
        fn = _LinearRate(a, b)
        return cls(fn, hi if hi > 0 else 1.0, fn.cumulative, "linear")

    @classmethod
    def sin_squared(cls, a: float, b: float, omega: float = 1.0) -> "RateFunction":
        """``alpha(t) = a + b sin^2(omega t)`` with ``a, b >= 0``."""
        if a < 0 or b < 0 or omega <= 0:
            raise DomainError("need a, b >= 0 and omega > 0")
        fn = _SinSquaredRate(a, b, omega)
        return cls(fn, a + b if a + b > 0 else 1.0, fn.cumulative, "sin_squared")


def mean_jump_fn(rate: RateFunction, t: float, tol: float = 1e-9) -> float:
    """``m(t) = int_0^t alpha(w) dw``; closed form if available, else adaptive quadrature."""
    if t < 0:
        raise DomainError("t must be nonnegative")
    if t == 0:
        return 0.0
    if rate.cumulative is not None:
        return float(rate.cumulative(t))
    value, abserr, info = integrate.quad(rate.eval, 0.0, t, epsabs=tol, epsrel=0.0, limit=500, full_output=1)[:3]
    if abserr > tol:
        raise IntegrationError(f"quadrature of the rate on [0, {t}] reached only {abserr:g}")
    return float(value)


def simulate_nhbt(
    rate: RateFunction, theta: float, horizon: float, rng: np.random.Generator, seed: Optional[int] = None
) -> EventPath:
    """Nonhomogeneous Bell-Touchard path by thinning.

    Candidate epochs arrive at the majorant rate ``M (e^theta - 1)``; a
    candidate at time ``s`` is kept with probability ``alpha(s) / M`` and then
    receives a zero-truncated Poisson(theta) batch.
    """
    if not (horizon > 0 and math.isfinite(horizon)):
        raise DomainError(f"horizon must be positive, got {horizon!r}")
    ztp = ZTPParams(theta)
    bound = rate.upper_bound
    scale = 1.0 / (bound * math.expm1(ztp.theta))
    events = []
    clock = 0.0
    while True:
        clock += rng.exponential(scale)
        if clock > horizon:
            break
        a = rate.eval(clock)
        if a < 0 or a > bound * (1.0 + 1e-12):
            raise BoundViolationError(f"alpha({clock}) = {a} outside [0, {bound}]")
        if rng.random() * bound < a:
            events.append(EventRecord(clock, ztp_sample(ztp, rng)))
    return EventPath(None, float(horizon), tuple(events), seed, ztp.theta)


def iterated_nhpp_sample(nu: float, rate: RateFunction, t: float, rng: np.random.Generator, size=None):
    """Draw ``N1(N2(t))`` with ``N1`` Poisson(``nu``) and ``N2`` nonhomogeneous with intensity ``rate``.

    Distributed as ``BT(m(t) e^{-nu}, nu)``.
    """
    if nu <= 0:
        raise DomainError("nu must be positive")
    m = mean_jump_fn(rate, t)
    inner = rng.poisson(m, size=size)
    outer = rng.poisson(nu * np.asarray(inner, dtype=float))
    return int(outer) if size is None else outer.astype(np.int64)


# ---------------------------------------------------------------------------
# export
# ---------------------------------------------------------------------------

CSV_HEADER = ("path_id", "event_index", "time", "jump", "cumulative_count")


def paths_to_csv(paths: Sequence[EventPath], out=None) -> str:
    """Write events as CSV rows; returns the text when ``out`` is None."""
    buf = out if out is not None else io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for pid, path in enumerate(paths):
        running = 0
        for j, ev in enumerate(path.events):
            running += ev.jump
            writer.writerow((pid, j, f"{ev.time:.12g}", ev.jump, running))
    return buf.getvalue() if out is None else ""


def batch_summary(paths: Sequence[EventPath], params, horizon: float, seed: int) -> dict:
    """Summary of ``N(horizon)`` across a batch of paths."""
    totals = np.array([p.total for p in paths], dtype=np.int64)
    if totals.size == 0:
        raise DomainError("empty batch")
    counts = np.bincount(totals)
    return {
        "params": params,
        "horizon": float(horizon),
        "n_paths": int(totals.size),
        "seed": int(seed),
        "empirical_pmf": (counts / totals.size).tolist(),
        "mean": float(totals.mean()),
        "variance": float(totals.var(ddof=1)) if totals.size > 1 else 0.0,
    }
