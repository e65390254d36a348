import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from belltouchard.bellpoly import (
    BellPolyEngine,
    bell_generating_fn,
    bell_poly,
    bell_poly_dobinski,
    bell_poly_partition,
    integer_partitions,
    log_bell_poly,
    log_bell_row,
    stirling2_row,
)
from belltouchard.exceptions import DegreeExceededError, DomainError, NonConvergenceError, NumericOverflowError

GRID_X = [0.1, 0.5, 1.0, 2.0, 5.0, 10.0]


def mp_bell(n, x):
    with mp.workdps(40):
        return mp.bell(n, mp.mpf(x))


class TestBellPoly:
    def test_degree_zero_is_one(self):
        assert bell_poly(0, 3.7) == 1.0

    @pytest.mark.parametrize("n,x,expected", [(3, 1.0, 5.0), (2, 2.0, 6.0), (1, 4.5, 4.5)])
    def test_small_values(self, n, x, expected):
        assert bell_poly(n, x) == pytest.approx(expected, rel=1e-14)

    def test_bell_numbers(self):
        # ground truth is the partition oracle, not the familiar list
        for n in range(11):
            assert bell_poly(n, 1.0) == pytest.approx(sum(stirling2_row(n)), rel=1e-14)
        assert [round(bell_poly(n, 1.0)) for n in range(11)] == [1, 1, 2, 5, 15, 52, 203, 877, 4140, 21147, 115975]

    @pytest.mark.parametrize("n", [0, 7, 25, 60, 127, 128, 200])
    @pytest.mark.parametrize("x", [0.3, 3.0, 40.0])
    def test_matches_high_precision(self, n, x):
        ref = mp_bell(n, x)
        if ref > np.finfo(float).max:
            with pytest.raises(NumericOverflowError):
                bell_poly(n, x)
            return
        assert bell_poly(n, x) == pytest.approx(float(ref), rel=1e-11)

    def test_overflow_raises(self):
        with pytest.raises(NumericOverflowError):
            bell_poly(400, 1e4)

    @pytest.mark.parametrize("bad", [0.0, -1.0, float("nan"), float("inf")])
    def test_rejects_bad_x(self, bad):
        with pytest.raises(DomainError):
            bell_poly(3, bad)

    def test_rejects_negative_degree(self):
        with pytest.raises(DomainError):
            bell_poly(-1, 1.0)

    def test_degree_cap(self):
        eng = BellPolyEngine(max_degree=50)
        with pytest.raises(DegreeExceededError):
            eng.bell_poly(51, 1.0)


class TestLogBellPoly:
    def test_zero_degree(self):
        assert log_bell_poly(0, 10.0) == 0.0

    @pytest.mark.parametrize("n,x,expected", [(3, 1.0, math.log(5)), (2, 2.0, math.log(6))])
    def test_small_values(self, n, x, expected):
        assert log_bell_poly(n, x) == pytest.approx(expected, rel=1e-14)

    @pytest.mark.parametrize("n,x", [(500, 100.0), (300, 1e4), (1000, 0.5), (150, 7.0)])
    def test_large_arguments_match_high_precision(self, n, x):
        ref = float(mp.log(mp_bell(n, x)))
        assert log_bell_poly(n, x) == pytest.approx(ref, rel=1e-11)

    def test_row_consistent_with_scalar(self):
        row = log_bell_row(40, 3.0)
        assert row.shape == (41,)
        for n in (0, 5, 40):
            assert row[n] == pytest.approx(log_bell_poly(n, 3.0), rel=1e-13)

    def test_row_is_read_only(self):
        row = log_bell_row(10, 1.0)
        with pytest.raises(ValueError):
            row[0] = 5.0

    def test_cache_distinguishes_nearby_x(self):
        eng = BellPolyEngine()
        x = 2.0
        y = np.nextafter(x, 3.0)
        assert eng.log_bell_poly(30, x) != eng.log_bell_poly(30, y)


class TestDobinski:
    @pytest.mark.parametrize("n,x,expected", [(1, 1.0, 1.0), (0, 5.0, 1.0), (4, 1.0, 15.0)])
    def test_examples(self, n, x, expected):
        assert bell_poly_dobinski(n, x, 1e-12) == pytest.approx(expected, rel=1e-12)

    def test_past_mode_stop(self):
        # terms rise for a long while at large x, a first-small-term rule would stop at k=0
        assert bell_poly_dobinski(3, 50.0) == pytest.approx(float(mp_bell(3, 50)), rel=1e-12)

    @pytest.mark.parametrize("tol", [0.0, -1e-3, 0.5])
    def test_rejects_bad_tol(self, tol):
        with pytest.raises(DomainError):
            bell_poly_dobinski(2, 1.0, tol)

    def test_budget_exhausted(self):
        with pytest.raises(NonConvergenceError):
            bell_poly_dobinski(2, 500.0, 1e-12, max_terms=50)


class TestPartition:
    def test_degree_one(self):
        assert bell_poly_partition(1, 2.5) == pytest.approx(2.5)

    @pytest.mark.parametrize("n,expected", [(2, 2.0), (5, 52.0)])
    def test_bell_numbers(self, n, expected):
        assert bell_poly_partition(n, 1.0) == pytest.approx(expected, rel=1e-15)

    def test_partition_counts(self):
        # p(n): 1, 1, 2, 3, 5, 7, 11, 15, 22, 30, 42
        assert [sum(1 for _ in integer_partitions(n)) for n in range(11)] == [1, 1, 2, 3, 5, 7, 11, 15, 22, 30, 42]

    def test_partitions_sum_to_n(self):
        for part in integer_partitions(9):
            assert sum(k * m for k, m in part.items()) == 9

    def test_stirling_row(self):
        assert stirling2_row(4) == [0, 1, 7, 6, 1]

    def test_degree_limit(self):
        with pytest.raises(DegreeExceededError):
            bell_poly_partition(21, 1.0)


def test_three_way_oracle_agreement():
    for x in GRID_X:
        for n in range(21):
            rec = bell_poly(n, x)
            dob = bell_poly_dobinski(n, x, 1e-12)
            par = bell_poly_partition(n, x)
            assert rec == pytest.approx(dob, rel=1e-9)
            assert rec == pytest.approx(par, rel=1e-9)


@pytest.mark.parametrize("x", [0.3, 1.0, 2.0])
@pytest.mark.parametrize("y", [0.3, 1.0, 2.0])
def test_binomial_type_identity(x, y):
    for n in range(16):
        rhs = math.fsum(math.comb(n, l) * bell_poly(l, x) * bell_poly(n - l, y) for l in range(n + 1))
        assert bell_poly(n, x + y) == pytest.approx(rhs, rel=1e-9)


def test_shifted_generating_identity():
    x, theta = 1.0, 0.5
    for k in range(6):
        series = math.fsum(bell_poly(n + k, x) * theta**n / math.factorial(n) for n in range(61))
        closed = bell_poly(k, x * math.exp(theta)) * bell_generating_fn(x, theta)
        assert series == pytest.approx(closed, rel=1e-8)


class TestGeneratingFn:
    def test_zero_theta(self):
        assert bell_generating_fn(4.2, 0.0) == 1.0

    def test_unit_exponent(self):
        assert bell_generating_fn(1.0, math.log(2.0)) == pytest.approx(math.e, rel=1e-15)

    def test_against_partial_sum(self):
        partial = math.fsum(bell_poly(n, 2.0) / math.factorial(n) for n in range(41))
        assert bell_generating_fn(2.0, 1.0) == pytest.approx(31.079973004503163, rel=1e-14)
        assert bell_generating_fn(2.0, 1.0) == pytest.approx(partial, rel=1e-9)

    def test_overflow(self):
        with pytest.raises(NumericOverflowError):
            bell_generating_fn(1e3, 10.0)


@settings(max_examples=60, deadline=None)
@given(n=st.integers(0, 60), x=st.floats(0.01, 50.0))
def test_recurrence_positive_and_log_consistent(n, x):
    v = bell_poly(n, x)
    assert v > 0
    assert math.log(v) == pytest.approx(log_bell_poly(n, x), rel=1e-12, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(n=st.integers(1, 40), x=st.floats(0.05, 20.0), y=st.floats(0.05, 20.0))
def test_monotone_in_x(n, x, y):
    lo, hi = sorted((x, y))
    assert log_bell_poly(n, lo) <= log_bell_poly(n, hi) + 1e-12
