"""Single-variable Bell (Touchard) polynomials.

Three independent evaluators are provided:

* :meth:`BellPolyEngine.bell_poly` -- the binomial-type recurrence
  ``B_{n+1}(x) = x * sum_k C(n, k) B_k(x)``, in linear and log scale.
* :func:`bell_poly_dobinski` -- the truncated Dobinski series
  ``B_n(x) = exp(-x) * sum_k k**n x**k / k!``.
* :func:`bell_poly_partition` -- an exact sum over integer partitions of ``n``
  (Faa di Bruno form), via Stirling numbers of the second kind.

The last two exist mainly as oracles for the first.
"""

from __future__ import annotations

import math
from functools import lru_cache
from typing import Dict, Iterator

import numpy as np
from scipy.special import gammaln

from .exceptions import (
    DegreeExceededError,
    DomainError,
    NonConvergenceError,
    NumericOverflowError,
)

__all__ = [
    "BellPolyEngine",
    "bell_poly",
    "log_bell_poly",
    "log_bell_row",
    "bell_poly_dobinski",
    "bell_poly_partition",
    "bell_generating_fn",
    "integer_partitions",
    "stirling2_row",
    "default_engine",
]

# Rows of the exact integer Pascal triangle kept by an engine. Past this the
# linear-scale recurrence goes through the log-scale one anyway.
EXACT_BINOMIAL_DEGREE = 128
DEFAULT_MAX_DEGREE = 10_000
PARTITION_MAX_DEGREE = 20
DOBINSKI_MAX_TERMS = 10_000

_LOG_FLOAT_MAX = math.log(np.finfo(float).max)


def _check_x(x) -> float:
    x = float(x)
    if not math.isfinite(x) or x <= 0.0:
        raise DomainError(f"Bell polynomial argument must be positive and finite, got {x!r}")
    return x


def _check_n(n, limit: int) -> int:
    if isinstance(n, bool) or int(n) != n or n < 0:
        raise DomainError(f"degree must be a nonnegative integer, got {n!r}")
    n = int(n)
    if n > limit:
        raise DegreeExceededError(f"degree {n} exceeds the supported maximum {limit}")
    return n


def _pascal(rows: int) -> tuple:
    table = [(1,)]
    for _ in range(rows):
        prev = table[-1]
        table.append((1,) + tuple(prev[i] + prev[i + 1] for i in range(len(prev) - 1)) + (1,))
    return tuple(table)


class BellPolyEngine:
    """Evaluator for ``B_n(x)`` with eagerly built tables.

    Parameters
    ----------
    max_degree : int
        Highest degree this engine will evaluate.

    Attributes
    ----------
    binomial_cache : tuple of tuple of int
        Exact Pascal triangle up to ``min(max_degree, EXACT_BINOMIAL_DEGREE)``.

    Nothing on the instance is mutated after ``__init__``; rows computed for a
    given ``x`` are memoised in per-instance LRU caches keyed by the exact float
    value of ``x`` (no rounding).
    """

    def __init__(self, max_degree: int = DEFAULT_MAX_DEGREE):
        if int(max_degree) != max_degree or max_degree < 0:
            raise DomainError(f"max_degree must be a nonnegative integer, got {max_degree!r}")
        self.max_degree = int(max_degree)
        self.binomial_cache = _pascal(min(self.max_degree, EXACT_BINOMIAL_DEGREE))
        self._float_binomials = tuple(np.array(row, dtype=float) for row in self.binomial_cache)
        self._log_factorials = gammaln(np.arange(self.max_degree + 1, dtype=float) + 1.0)
        self._log_factorials.flags.writeable = False
        self._linear_row = lru_cache(maxsize=512)(self._compute_linear_row)
        self._log_row = lru_cache(maxsize=512)(self._compute_log_row)

    def __repr__(self):
        return f"BellPolyEngine(max_degree={self.max_degree})"

    # -- row builders -----------------------------------------------------

    def _compute_linear_row(self, x: float, n: int) -> np.ndarray:
        row = np.empty(n + 1)
        row[0] = 1.0
        for m in range(n):
            row[m + 1] = x * np.dot(self._float_binomials[m], row[: m + 1])
        row.flags.writeable = False
        return row

    def _compute_log_row(self, x: float, n: int) -> np.ndarray:
        lf = self._log_factorials
        row = np.empty(n + 1)
        row[0] = 0.0
        log_x = math.log(x)
        for m in range(n):
            # ln C(m, k) + ln B_k(x), k = 0..m
            v = lf[m] - lf[: m + 1] - lf[m::-1] + row[: m + 1]
            top = v.max()
            row[m + 1] = log_x + top + math.log(np.exp(v - top).sum())
        row.flags.writeable = False
        return row

    # -- public API -------------------------------------------------------

    def log_row(self, n: int, x: float) -> np.ndarray:
        """Return the read-only array ``[ln B_0(x), ..., ln B_n(x)]``."""
        n = _check_n(n, self.max_degree)
        x = _check_x(x)
        return self._log_row(x, n)

    def bell_poly(self, n: int, x: float) -> float:
        """Return ``B_n(x)`` from the binomial-type recurrence.

        Raises :class:`NumericOverflowError` when the value exceeds the float range;
        use :meth:`log_bell_poly` there.
        """
        n = _check_n(n, self.max_degree)
        x = _check_x(x)
        if n < len(self.binomial_cache):
            value = float(self._linear_row(x, n)[n])
        else:
            log_value = float(self._log_row(x, n)[n])
            value = math.exp(log_value) if log_value < _LOG_FLOAT_MAX else math.inf
        if not math.isfinite(value):
            raise NumericOverflowError(f"B_{n}({x}) overflows a float; use log_bell_poly")
        return value

    def log_bell_poly(self, n: int, x: float) -> float:
        """Return ``ln B_n(x)``, finite wherever ``x`` and ``n`` are in range."""
        n = _check_n(n, self.max_degree)
        x = _check_x(x)
        if n == 0:
            return 0.0
        return float(self._log_row(x, n)[n])


_default_engine = BellPolyEngine()


def default_engine() -> BellPolyEngine:
    """The shared module-level engine (``max_degree = 10_000``)."""
    return _default_engine


def bell_poly(n: int, x: float) -> float:
    """``B_n(x)`` using the default engine."""
    return _default_engine.bell_poly(n, x)


def log_bell_poly(n: int, x: float) -> float:
    """``ln B_n(x)`` using the default engine."""
    return _default_engine.log_bell_poly(n, x)


def log_bell_row(n: int, x: float) -> np.ndarray:
    """``[ln B_0(x), ..., ln B_n(x)]`` using the default engine."""
    return _default_engine.log_row(n, x)


def bell_poly_dobinski(
    n: int, x: float, tol: float = 1e-12, max_terms: int = DOBINSKI_MAX_TERMS
) -> float:
    """Evaluate ``B_n(x)`` by summing the Dobinski series.

    Terms ``k**n x**k / k!`` rise to a mode and then decay with a ratio that
    only shrinks, so the sum stops once it is past the mode and the geometric
    bound on the remaining tail drops below ``tol`` times the partial sum.

    Independent of the recurrence and meant to be used as its oracle.
    """
    if isinstance(n, bool) or int(n) != n or n < 0:
        raise DomainError(f"degree must be a nonnegative integer, got {n!r}")
    n = int(n)
    x = _check_x(x)
    if not (0.0 < tol <= 1e-4):
        raise DomainError(f"tol must lie in (0, 1e-4], got {tol!r}")

    log_x = math.log(x)
    total = 0.0
    for k in range(max_terms):
        if k == 0:
            term = math.exp(-x) if n == 0 else 0.0
        else:
            term = math.exp(n * math.log(k) + k * log_x - math.lgamma(k + 1) - x)
        total += term
        if k >= 1 and total > 0.0:
            # term_{k+1} / term_k; nonincreasing in k
            log_ratio = n * math.log1p(1.0 / k) + log_x - math.log(k + 1)
            if log_ratio < 0.0:
                ratio = math.exp(log_ratio)
                if term * ratio / (1.0 - ratio) <= tol * total:
                    return total
    raise NonConvergenceError(
        f"Dobinski series for B_{n}({x}) did not converge within {max_terms} terms"
    )


def integer_partitions(n: int) -> Iterator[Dict[int, int]]:
    """Yield the partitions of ``n`` as ``{part: multiplicity}`` dicts.

    ``n = 0`` yields the single empty partition.
    """
    if n == 0:
        yield {}
        return

    def _gen(remaining, largest):
        if remaining == 0:
            yield []
            return
        for part in range(min(remaining, largest), 0, -1):
            for rest in _gen(remaining - part, part):
                yield [part] + rest

    for parts in _gen(n, n):
        mult: Dict[int, int] = {}
        for p in parts:
            mult[p] = mult.get(p, 0) + 1
        yield mult


def stirling2_row(n: int) -> list:
    """Exact Stirling numbers of the second kind ``[S(n, 0), ..., S(n, n)]``,
    obtained by enumerating the partitions of ``n`` (no recurrence)."""
    coeffs = [0] * (n + 1)
    fact_n = math.factorial(n)
    for mult in integer_partitions(n):
        denom = 1
        for part, r in mult.items():
            denom *= math.factorial(r) * math.factorial(part) ** r
        coeffs[sum(mult.values())] += fact_n // denom
    return coeffs


def bell_poly_partition(n: int, x: float) -> float:
    """``B_n(x)`` by summing over integer partitions of ``n`` (``n <= 20``)."""
    n = _check_n(n, PARTITION_MAX_DEGREE)
    x = _check_x(x)
    coeffs = stirling2_row(n)
    return math.fsum(c * x**m for m, c in enumerate(coeffs) if c)


def bell_generating_fn(x: float, theta: float) -> float:
    """``exp(x * (e**theta - 1))``, the exponential generating function of ``B_n(x)``."""
    x, theta = float(x), float(theta)
    if not (math.isfinite(x) and math.isfinite(theta)):
        raise DomainError("arguments must be finite")
    exponent = x * math.expm1(theta)
    if exponent > _LOG_FLOAT_MAX:
        raise NumericOverflowError(f"x*(e^theta - 1) = {exponent} is beyond the float range")
    return math.exp(exponent)
