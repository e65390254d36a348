"""Acceptance gate: one test per criterion, each at its stated tolerance and time budget.

Every test records a ``PASS``/``FAIL`` line that is printed in the pytest
terminal summary (and to stdout when run with ``-s``).
"""

import math
import subprocess
import sys
import time
from functools import partial

import numpy as np
import pytest
from scipy import integrate

from belltouchard.bellpoly import bell_poly, bell_poly_dobinski, bell_poly_partition
from belltouchard.distributions import (
    BTParams,
    MixedBTParams,
    bt_mgf,
    bt_pgf,
    bt_pmf,
    bt_pmf_array,
    bt_sample,
    bt_support_cap,
    mixed_bt_pmf,
)
from belltouchard.processes import (
    RateFunction,
    decompose,
    decomposition_joint_pmf,
    decomposition_params,
    iterated_poisson_sample,
    mean_jump_fn,
    multiple_poisson_sample,
    simulate_bt,
    simulate_bt_batch,
    simulate_nhbt,
)
from belltouchard.risk import GammaParams, RiskConfig, expected_loss, ruin_probability_mc, simulate_compound_bt
from belltouchard.stats import bt_analytic, chi_square_gof, empirical_pmf, mean_z_score, tv_distance
from belltouchard.streams import derive_seed, run_batch

from conftest import ACCEPTANCE_LINES

N_PATHS = 200_000
UNIT = BTParams(1.0, 1.0)


def record(number, title, checks, elapsed, budget=None):
    """Log the criterion and fail the test if any check (or the time budget) fails."""
    if budget is not None:
        checks = {**checks, f"runtime {elapsed:.1f}s < {budget}s": elapsed < budget}
    passed = all(checks.values())
    detail = "; ".join(f"{k}={'ok' if v else 'FAILED'}" for k, v in checks.items())
    line = f"{'PASS' if passed else 'FAIL'}  criterion {number}: {title} [{detail}]"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert passed, line


def test_criterion_1_bell_oracle_triangle():
    start = time.perf_counter()
    worst = 0.0
    for x in (0.1, 0.5, 1.0, 2.0, 5.0, 10.0):
        for n in range(21):
            rec = bell_poly(n, x)
            dob = bell_poly_dobinski(n, x, 1e-12)
            par = bell_poly_partition(n, x)
            worst = max(worst, abs(rec - dob) / dob, abs(rec - par) / par, abs(dob - par) / par)
    elapsed = time.perf_counter() - start
    record(1, "Bell-polynomial oracle triangle", {f"max rel err {worst:.1e} < 1e-9": worst < 1e-9}, elapsed, 5)


def test_criterion_2_distribution_identities():
    start = time.perf_counter()
    checks = {}

    conv_err = 0.0
    for a1, a2, theta in ((1.0, 2.0, 0.5), (0.176, 0.2993, 0.3472), (3.0, 0.5, 1.2)):
        conv = np.convolve(bt_pmf_array(BTParams(a1, theta), 59), bt_pmf_array(BTParams(a2, theta), 59))[:60]
        conv_err = max(conv_err, float(np.max(np.abs(conv - bt_pmf_array(BTParams(a1 + a2, theta), 59)))))
    checks[f"convolution closure {conv_err:.1e} < 1e-9"] = conv_err < 1e-9

    pgf_err = mgf_err = norm_err = 0.0
    cum_err = 0.0
    for params in (UNIT, BTParams(2.0, 0.5), BTParams(0.176, 0.3472)):
        pmf = bt_pmf_array(params, bt_support_cap(params))
        k = np.arange(pmf.size)
        norm_err = max(norm_err, abs(math.fsum(pmf) - 1.0))
        for s in (-0.9, 0.0, 0.5, 0.9):
            pgf_err = max(pgf_err, abs(bt_pgf(params, s) - math.fsum(s**k * pmf)))
        for t in (-0.2, 0.1):
            series = math.fsum(np.exp(t * k) * pmf)
            mgf_err = max(mgf_err, abs(bt_mgf(params, t) - series) / series)
        h = 1e-4
        K = [math.log(bt_mgf(params, u)) for u in (-h, 0.0, h)]
        k1, k2 = (K[2] - K[0]) / (2 * h), (K[2] - 2 * K[1] + K[0]) / h**2
        mean = params.alpha * params.theta * math.exp(params.theta)
        cum_err = max(cum_err, abs(k1 - mean) / mean, abs(k2 - (params.theta + 1) * mean) / ((params.theta + 1) * mean))
    checks[f"pgf series {pgf_err:.1e} < 1e-9"] = pgf_err < 1e-9
    checks[f"mgf series rel {mgf_err:.1e} < 1e-9"] = mgf_err < 1e-9
    checks[f"cumulants rel {cum_err:.1e} < 1e-4"] = cum_err < 1e-4
    checks[f"normalization {norm_err:.1e} < 1e-10"] = norm_err < 1e-10
    record(2, "distribution identities", checks, time.perf_counter() - start, 30)


def test_criterion_3_compound_law_reproduction():
    start = time.perf_counter()
    totals = [p.total for p in simulate_bt_batch(UNIT, 1.0, N_PATHS, master_seed=3)]
    law = bt_analytic(UNIT)
    tv = tv_distance(empirical_pmf(totals), law)
    chi = chi_square_gof(totals, law)
    record(
        3,
        "N(1) law from 2e5 simulated paths",
        {f"TV {tv:.4f} < 0.01": tv < 0.01, f"chi2 p {chi.p_value:.3g} > 1e-4": chi.p_value > 1e-4},
        time.perf_counter() - start,
        60,
    )


def test_criterion_4_representation_equivalence():
    start = time.perf_counter()
    laws = {
        "compound": empirical_pmf(bt_sample(UNIT, 1.0, np.random.default_rng(derive_seed(4, 0)), size=N_PATHS)),
        "multiple": empirical_pmf(multiple_poisson_sample(UNIT, 1.0, np.random.default_rng(derive_seed(4, 1)), size=N_PATHS)),
        "iterated": empirical_pmf(
            iterated_poisson_sample(1.0, math.e, 1.0, np.random.default_rng(derive_seed(4, 2)), size=N_PATHS)
        ),
    }
    names = list(laws)
    checks = {}
    for i in range(3):
        for j in range(i + 1, 3):
            tv = tv_distance(laws[names[i]], laws[names[j]])
            checks[f"TV {names[i]}/{names[j]} {tv:.4f} < 0.015"] = tv < 0.015
    record(4, "three samplers agree", checks, time.perf_counter() - start, 90)


def _thinned_pair(params, p, rng, seed):
    a, b = decompose(simulate_bt(params, 1.0, rng, seed), p, rng)
    return a.total, b.total


def test_criterion_5_thinning():
    start = time.perf_counter()
    p = 0.3
    pairs = np.array(run_batch(partial(_thinned_pair, UNIT, (p, 1 - p)), N_PATHS, master_seed=5))
    marginal = decomposition_params(UNIT, p)
    assert marginal == BTParams(math.exp(0.7), 0.3)
    tv = tv_distance(empirical_pmf(pairs[:, 0]), bt_analytic(marginal))

    marg_err = 0.0
    for k in range(20):
        s = math.fsum(decomposition_joint_pmf(UNIT, 1.0, p, k, n) for n in range(80))
        marg_err = max(marg_err, abs(s - bt_pmf(marginal, k)))

    n1, n2 = pairs[:, 0].astype(float), pairs[:, 1].astype(float)
    prod = (n1 - n1.mean()) * (n2 - n2.mean())
    cov, se = prod.mean(), prod.std(ddof=1) / math.sqrt(prod.size)
    record(
        5,
        "thinning at p=0.3",
        {
            f"TV {tv:.4f} < 0.01": tv < 0.01,
            f"joint marginal err {marg_err:.1e} < 1e-8": marg_err < 1e-8,
            f"cov/se {cov / se:.1f} > 5": cov > 5 * se,
        },
        time.perf_counter() - start,
    )


def _nh_total(rate, theta, horizon, rng, seed):
    return simulate_nhbt(rate, theta, horizon, rng, seed).total


def test_criterion_6_nonhomogeneous():
    start = time.perf_counter()
    const = run_batch(partial(_nh_total, RateFunction.constant(1.0), 1.0, 1.0), N_PATHS, master_seed=61)
    homog = [p.total for p in simulate_bt_batch(UNIT, 1.0, N_PATHS, master_seed=62)]
    tv_const = tv_distance(empirical_pmf(const), empirical_pmf(homog))

    rate = RateFunction.sin_squared(1.0, 1.0)
    quad_rate = RateFunction(rate.eval, rate.upper_bound)  # forces the quadrature route
    m = mean_jump_fn(quad_rate, 2.0)
    sin2 = run_batch(partial(_nh_total, rate, 0.5, 2.0), N_PATHS, master_seed=63)
    tv_sin2 = tv_distance(empirical_pmf(sin2), bt_analytic(BTParams(m, 0.5)))
    record(
        6,
        "nonhomogeneous process",
        {f"constant-rate TV {tv_const:.4f} < 0.01": tv_const < 0.01, f"sin^2 TV {tv_sin2:.4f} < 0.01": tv_sin2 < 0.01},
        time.perf_counter() - start,
    )


def test_criterion_7_mixed_process():
    start = time.perf_counter()
    params, t = MixedBTParams(0.5, 1.0), 1.0
    quad_err = 0.0
    for n in range(6):
        f = lambda a: bt_pmf(BTParams(a * t, 0.5), n) * math.exp(-a)  # noqa: E731
        ref, _ = integrate.quad(f, 1e-300, 40.0, epsabs=1e-13, epsrel=1e-12, limit=200)
        quad_err = max(quad_err, abs(mixed_bt_pmf(params, t, n) - ref))
    total = math.fsum(mixed_bt_pmf(params, t, n) for n in range(201))
    record(
        7,
        "Exp-mixed pmf",
        {f"quadrature err {quad_err:.1e} < 1e-7": quad_err < 1e-7, f"sum-1 {abs(total - 1):.1e} < 1e-8": abs(total - 1) < 1e-8},
        time.perf_counter() - start,
    )


def _loss_at_one(bt, claims, rng, seed):
    losses = simulate_compound_bt(bt, claims, 1.0, rng)
    return losses[-1].cumulative_loss if losses else 0.0


def test_criterion_8_risk_process():
    start = time.perf_counter()
    claims = GammaParams(1.0, 1.0)
    totals = run_batch(partial(_loss_at_one, UNIT, claims), N_PATHS, master_seed=8)
    z = mean_z_score(totals, expected_loss(UNIT, claims, 1.0))

    cfg = RiskConfig(5.0, 0.1, UNIT, claims, 50.0)
    one = ruin_probability_mc(cfg, 2000, master_seed=81, workers=1)
    four = ruin_probability_mc(cfg, 2000, master_seed=81, workers=4)

    ests = [ruin_probability_mc(RiskConfig(u, 0.1, UNIT, claims, 50.0), 10_000, master_seed=82).estimate for u in (0, 5, 10)]
    record(
        8,
        "risk process",
        {
            f"|z| {abs(z):.2f} < 3": abs(z) < 3,
            "ruin bit-identical across workers": one == four,
            f"ruin nonincreasing in u {ests}": ests[0] >= ests[1] >= ests[2],
        },
        time.perf_counter() - start,
    )


def _cli(*args):
    proc = subprocess.run([sys.executable, "-m", "belltouchard.cli", *args], capture_output=True, check=True)
    return proc.stdout


def test_criterion_9_cli_reproducibility(tmp_path):
    start = time.perf_counter()
    sim = ["simulate", "--alpha", "1", "--theta", "1", "--horizon", "10", "--seed", "42", "--paths", "300"]
    risk = ["risk", "--preset", "dataset1", "--u", "10", "--epsilon", "0.1", "--horizon", "100", "--paths", "1000", "--seed", "7"]
    summary = ["simulate", "--alpha", "1", "--theta", "1", "--paths", "500", "--summary", "--seed", "9"]
    checks = {}
    for name, args in (("simulate", sim), ("risk", risk), ("summary", summary)):
        first = _cli(*args, "--workers", "1")
        checks[f"{name} repeat"] = first == _cli(*args, "--workers", "1")
        checks[f"{name} workers 1 vs 4"] = first == _cli(*args, "--workers", "4")
    record(9, "CLI byte reproducibility", checks, time.perf_counter() - start)
