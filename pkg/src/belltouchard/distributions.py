"""Exact probability laws around the Bell-Touchard distribution.

All mass functions are evaluated in log space and exponentiated at the end,
since ``B_k(alpha)`` overflows long before the pmf itself underflows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np
from scipy.special import gammaln

from .bellpoly import default_engine, integer_partitions
from .exceptions import DomainError, NonConvergenceError, NumericOverflowError

__all__ = [
    "BTParams",
    "ZTPParams",
    "MixedBTParams",
    "bt_log_pmf",
    "bt_log_pmf_array",
    "bt_pmf",
    "bt_pmf_array",
    "bt_cdf",
    "bt_pgf",
    "bt_mgf",
    "bt_mean",
    "bt_variance",
    "bt_support_cap",
    "bt_sample",
    "ztp_pmf",
    "ztp_mean",
    "ztp_sample",
    "neyman_a_pmf",
    "composed_poisson_pmf",
    "eulerian_numbers",
    "polylog_neg_int",
    "mixed_bt_pmf",
]

_LOG_FLOAT_MAX = math.log(np.finfo(float).max)
# log-pmf level past the mode at which the adaptive support is cut
LOG_PMF_CUTOFF = -40.0


def _positive_finite(name, value) -> float:
    value = float(value)
    if not math.isfinite(value) or value <= 0.0:
        raise DomainError(f"{name} must be positive and finite, got {value!r}")
    return value


def _check_count(k, name="k", minimum=0) -> int:
    if isinstance(k, bool) or int(k) != k or k < minimum:
        raise DomainError(f"{name} must be an integer >= {minimum}, got {k!r}")
    return int(k)


@dataclass(frozen=True)
class BTParams:
    """Parameters ``(alpha, theta)`` of a Bell-Touchard law or process."""

    alpha: float
    theta: float

    def __post_init__(self):
        object.__setattr__(self, "alpha", _positive_finite("alpha", self.alpha))
        object.__setattr__(self, "theta", _positive_finite("theta", self.theta))

    def at_time(self, t: float) -> "BTParams":
        """Parameters of ``N(t)``: ``(alpha * t, theta)``."""
        return BTParams(self.alpha * _positive_finite("t", t), self.theta)

    @property
    def event_rate(self) -> float:
        """Rate ``alpha * (e**theta - 1)`` of the batch arrivals."""
        return self.alpha * math.expm1(self.theta)


@dataclass(frozen=True)
class ZTPParams:
    """Zero-truncated Poisson jump-size law."""

    theta: float

    def __post_init__(self):
        object.__setattr__(self, "theta", _positive_finite("theta", self.theta))


@dataclass(frozen=True)
class MixedBTParams:
    """Bell-Touchard process whose ``alpha`` is drawn from ``Exp(gamma)``."""

    theta: float
    gamma: float

    def __post_init__(self):
        object.__setattr__(self, "theta", _positive_finite("theta", self.theta))
        object.__setattr__(self, "gamma", _positive_finite("gamma", self.gamma))


# ---------------------------------------------------------------------------
# Bell-Touchard law
# ---------------------------------------------------------------------------


def bt_log_pmf_array(params: BTParams, k_max: int) -> np.ndarray:
    """``ln P[Y = k]`` for ``k = 0..k_max``."""
    k_max = _check_count(k_max, "k_max")
    row = default_engine().log_row(k_max, params.alpha)
    ks = np.arange(k_max + 1, dtype=float)
    return -params.alpha * math.expm1(params.theta) + ks * math.log(params.theta) - gammaln(ks + 1.0) + row


def bt_pmf_array(params: BTParams, k_max: int) -> np.ndarray:
    """``P[Y = k]`` for ``k = 0..k_max``."""
    return np.exp(bt_log_pmf_array(params, k_max))


def bt_log_pmf(params: BTParams, k: int) -> float:
    """Log of the Bell-Touchard pmf ``exp(-a(e^t-1)) t^k B_k(a) / k!``."""
    k = _check_count(k)
    log_b = default_engine().log_bell_poly(k, params.alpha)
    return -params.alpha * math.expm1(params.theta) + k * math.log(params.theta) - math.lgamma(k + 1) + log_b


def bt_pmf(params: BTParams, k: int) -> float:
    """Bell-Touchard probability ``P[Y = k]``."""
    return math.exp(bt_log_pmf(params, k))


def bt_mean(params: BTParams) -> float:
    return params.alpha * params.theta * math.exp(params.theta)


def bt_variance(params: BTParams) -> float:
    return params.theta * (params.theta + 1.0) * params.alpha * math.exp(params.theta)


def bt_support_cap(params: BTParams) -> int:
    """Smallest ``k`` past the mode with ``ln P[Y = k] < -40``.

    The Bell-Touchard tail decays faster than geometrically beyond that point,
    so the mass above the cap is negligible (each term below ``e**-40``).
    """
    engine = default_engine()
    mean, sd = bt_mean(params), math.sqrt(bt_variance(params))
    k_max = int(math.ceil(mean + 12.0 * sd + 20.0))
    while True:
        if k_max > engine.max_degree:
            raise NonConvergenceError(
                f"support of BT({params.alpha}, {params.theta}) exceeds degree {engine.max_degree}"
            )
        lp = bt_log_pmf_array(params, k_max)
        mode = int(np.argmax(lp))
        below = np.nonzero(lp[mode:] < LOG_PMF_CUTOFF)[0]
        if below.size:
            return mode + int(below[0])
        k_max = min(2 * k_max, engine.max_degree) if k_max < engine.max_degree else k_max + 1


def bt_cdf(params: BTParams, k: int) -> float:
    """``P[Y <= k]`` by direct summation of the pmf.

    Beyond the adaptive support cap the sum is frozen at the cap.
    """
    k = _check_count(k)
    cap = bt_support_cap(params)
    probs = bt_pmf_array(params, min(k, cap))
    return min(1.0, float(np.cumsum(probs)[-1]))


def bt_pgf(params: BTParams, s: float) -> float:
    """Probability generating function ``exp(alpha (e^{s theta} - e^theta))``."""
    s = float(s)
    if not math.isfinite(s) or abs(s) > 1.0:
        raise DomainError(f"pgf argument must satisfy |s| <= 1, got {s!r}")
    return math.exp(params.alpha * (math.exp(s * params.theta) - math.exp(params.theta)))


def bt_mgf(params: BTParams, t: float) -> float:
    """Moment generating function ``exp(alpha e^theta (e^{theta (e^t - 1)} - 1))``."""
    t = float(t)
    inner = params.theta * math.expm1(t)
    if inner > _LOG_FLOAT_MAX:
        raise NumericOverflowError(f"mgf at t={t} overflows")
    exponent = params.alpha * math.exp(params.theta) * math.expm1(inner)
    if not math.isfinite(exponent) or exponent > _LOG_FLOAT_MAX:
        raise NumericOverflowError(f"mgf at t={t} overflows")
    return math.exp(exponent)


def bt_sample(params: BTParams, t: float, rng: np.random.Generator, size=None):
    """Draw ``N(t) ~ BT(alpha t, theta)`` through the compound-Poisson form.

    ``M ~ Poisson(alpha t (e^theta - 1))`` batches, each of zero-truncated
    Poisson(theta) size. Returns an int, or an int64 array when ``size`` is given.
    """
    t = _positive_finite("t", t)
    rate = params.event_rate * t
    batches = rng.poisson(rate, size=size)
    ztp = ZTPParams(params.theta)
    if size is None:
        if batches == 0:
            return 0
        return int(np.sum(ztp_sample(ztp, rng, size=int(batches))))
    batches = np.asarray(batches)
    jumps = ztp_sample(ztp, rng, size=int(batches.sum()))
    owner = np.repeat(np.arange(batches.size), batches.ravel())
    totals = np.bincount(owner, weights=jumps, minlength=batches.size)
    return totals.astype(np.int64).reshape(batches.shape)


# ---------------------------------------------------------------------------
# zero-truncated Poisson
# ---------------------------------------------------------------------------


def ztp_pmf(params: ZTPParams, x: int) -> float:
    """``P[X = x] = theta^x / (x! (e^theta - 1))`` for ``x >= 1``."""
    x = _check_count(x, "x", minimum=1)
    th = params.theta
    return math.exp(x * math.log(th) - math.lgamma(x + 1) - math.log(math.expm1(th)))


def ztp_mean(params: ZTPParams) -> float:
    th = params.theta
    return th * math.exp(th) / math.expm1(th)


@lru_cache(maxsize=64)
def _ztp_cdf_table(theta: float) -> np.ndarray:
    # cdf[i] = P[X <= i + 1]; extended until past the mode and the next term is
    # below 1e-18 of the accumulated mass.
    term = theta / math.expm1(theta)
    cdf = [term]
    x = 1
    while x < theta or term > 1e-18 * cdf[-1]:
        term *= theta / (x + 1)
        x += 1
        cdf.append(cdf[-1] + term)
    table = np.array(cdf)
    table.flags.writeable = False
    return table


def ztp_sample(params: ZTPParams, rng: np.random.Generator, size=None):
    """Zero-truncated Poisson draws by inversion with a sequential search from 1.

    The search runs over a cumulative table built once per ``theta``; uniforms
    beyond the table's last entry (mass below ~1e-16) map to its last support point.
    """
    table = _ztp_cdf_table(params.theta)
    u = rng.random(size)
    idx = np.searchsorted(table, u, side="right")
    idx = np.minimum(idx, table.size - 1) + 1
    if size is None:
        return int(idx)
    return idx.astype(np.int64)


# ---------------------------------------------------------------------------
# related laws
# ---------------------------------------------------------------------------


def neyman_a_pmf(lam: float, theta: float, k: int) -> float:
    """Neyman Type A pmf, computed as ``BT(lam * e^-theta, theta)``."""
    lam = _positive_finite("lambda", lam)
    theta = _positive_finite("theta", theta)
    return bt_pmf(BTParams(lam * math.exp(-theta), theta), k)


def composed_poisson_pmf(c: Sequence[float], t: float, k: int, tail: float = 0.0) -> float:
    """``P[xi(t) = k]`` for the multiple Poisson process with rates ``c_1..c_K``.

    Evaluated by summing ``prod_j (t c_j)^{r_j} / r_j!`` over partitions
    ``r_1 + 2 r_2 + ... = k``. Rates past ``K`` are taken to be zero; pass the
    caller's estimate of ``sum_{n > K} c_n`` as ``tail`` to get a warning when it
    is not zero.
    """
    import warnings

    t = _positive_finite("t", t)
    k = _check_count(k)
    rates = [float(v) for v in c]
    if any(not math.isfinite(v) or v < 0 for v in rates):
        raise DomainError("rates must be finite and nonnegative")
    if tail > 0.0:
        warnings.warn(
            f"composed Poisson rates truncated at K={len(rates)} with tail mass {tail:g}",
            RuntimeWarning,
            stacklevel=2,
        )
    scaled = [t * v for v in rates]
    terms = []
    for mult in integer_partitions(k):
        if any(part > len(scaled) for part in mult):
            continue
        term = 1.0
        for part, r in mult.items():
            term *= scaled[part - 1] ** r / math.factorial(r)
        terms.append(term)
    return math.exp(-math.fsum(scaled)) * math.fsum(terms)


@lru_cache(maxsize=None)
def eulerian_numbers(n: int) -> tuple:
    """Eulerian numbers ``A(n, 0..n-1)`` (``()`` for ``n = 0``)."""
    if n == 0:
        return ()
    if n == 1:
        return (1,)
    prev = eulerian_numbers(n - 1)
    row = []
    for k in range(n):
        a = (k + 1) * prev[k] if k < n - 1 else 0
        b = (n - k) * prev[k - 1] if k >= 1 else 0
        row.append(a + b)
    return tuple(row)


def _polylog_neg_int_ratio(n: int, x: float):
    """Exact ``Li_{-n}(x)`` as ``(numerator, denominator)`` integers for float ``x``."""
    p, d = float(x).as_integer_ratio()
    if n == 0:
        # x / (1 - x)
        return p, d - p
    # (1-x)^{-(n+1)} * sum_k A(n,k) x^{n-k}, with x = p/d
    num = sum(a * p ** (n - k) * d**k for k, a in enumerate(eulerian_numbers(n)))
    return num * d, (d - p) ** (n + 1)


def polylog_neg_int(n: int, x: float) -> float:
    """Polylogarithm of negative integer order, ``Li_{-n}(x) = sum_{k>=1} k^n x^k``.

    Uses the Eulerian-number closed form evaluated in exact integer arithmetic
    on the binary value of ``x``, so the result is correctly rounded.
    """
    n = _check_count(n, "n")
    x = float(x)
    if not math.isfinite(x) or abs(x) >= 1.0:
        raise DomainError(f"polylogarithm argument must satisfy |x| < 1, got {x!r}")
    num, den = _polylog_neg_int_ratio(n, x)
    try:
        return num / den
    except OverflowError as exc:
        raise NumericOverflowError(f"Li_-{n}({x}) overflows a float") from exc


def mixed_bt_pmf(params: MixedBTParams, t: float, n: int) -> float:
    """``P[N(t) = n]`` for the Bell-Touchard process with ``alpha ~ Exp(gamma)``.

    For ``n >= 1`` this is ``theta^n gamma / (n! z) Li_{-n}(t/z)`` with
    ``z = t e^theta + gamma``. At ``n = 0`` the mixing integral gives
    ``gamma / (t (e^theta - 1) + gamma)`` instead, because ``Li_0`` lacks the
    ``k = 0`` term of the underlying series.
    """
    t = _positive_finite("t", t)
    n = _check_count(n, "n")
    th, g = params.theta, params.gamma
    if n == 0:
        return g / (t * math.expm1(th) + g)
    z = t * math.exp(th) + g
    num, den = _polylog_neg_int_ratio(n, t / z)
    log_li = math.log(num) - math.log(den)
    return math.exp(n * math.log(th) + math.log(g) - math.lgamma(n + 1) - math.log(z) + log_li)
