"""Monte Carlo validation scenarios run by ``belltouchard validate``.

Each scenario simulates one of the distributional results (compound law of
``N(t)``, equivalent representations, superposition, thinning, the
nonhomogeneous law, the compound loss mean) and compares against the exact
law. TV tolerances are stated for 200 000 draws and widened by
``sqrt(200000 / n)`` for smaller runs so the false-alarm rate stays put.
"""

from __future__ import annotations

import math
import time
from functools import partial
from typing import Callable, Dict, List

import numpy as np

from .distributions import BTParams, bt_sample
from .processes import (
    RateFunction,
    compound_poisson_sample,
    convolve_different_theta,
    decompose,
    iterated_nhpp_sample,
    iterated_poisson_sample,
    mean_jump_fn,
    multiple_poisson_sample,
    simulate_bt_batch,
    simulate_nhbt,
    superpose,
)
from .risk import GammaParams, expected_loss, simulate_compound_bt
from .stats import bt_analytic, chi_square_gof, empirical_pmf, mean_z_score, tv_distance
from .streams import derive_seed, run_batch

__all__ = ["SUITES", "SCENARIOS", "run_suite", "tv_tolerance"]

REFERENCE_DRAWS = 200_000
SUITES = {"quick": 20_000, "full": 200_000}
CHI2_MIN_P = 1e-4


def tv_tolerance(base: float, n: int) -> float:
    return base * math.sqrt(max(1.0, REFERENCE_DRAWS / n))


def _check(name, passed, **metrics):
    return {"name": name, "passed": bool(passed), **{k: float(v) for k, v in metrics.items()}}


def _compound_law(n, seed, workers):
    params = BTParams(1.0, 1.0)
    totals = [p.total for p in simulate_bt_batch(params, 1.0, n, seed, workers)]
    law = bt_analytic(params)
    tv = tv_distance(empirical_pmf(totals), law)
    chi = chi_square_gof(totals, law)
    tol = tv_tolerance(0.01, n)
    return [
        _check("compound_law_tv", tv < tol, tv=tv, tol=tol),
        _check("compound_law_chi2", chi.p_value > CHI2_MIN_P, p_value=chi.p_value, statistic=chi.statistic),
    ]


def _representations(n, seed, workers):
    params = BTParams(1.0, 1.0)
    rngs = [np.random.default_rng(derive_seed(seed, i)) for i in range(3)]
    draws = {
        "compound": bt_sample(params, 1.0, rngs[0], size=n),
        "multiple": multiple_poisson_sample(params, 1.0, rngs[1], size=n),
        "iterated": iterated_poisson_sample(1.0, math.e, 1.0, rngs[2], size=n),
    }
    tol = tv_tolerance(0.015, n)
    out = []
    names = list(draws)
    for i in range(3):
        for j in range(i + 1, 3):
            tv = tv_distance(empirical_pmf(draws[names[i]]), empirical_pmf(draws[names[j]]))
            out.append(_check(f"representation_{names[i]}_vs_{names[j]}", tv < tol, tv=tv, tol=tol))
    return out


def _superposition(n, seed, workers):
    a = simulate_bt_batch(BTParams(1.0, 0.5), 1.0, n, derive_seed(seed, 0), workers)
    b = simulate_bt_batch(BTParams(1.0, 0.5), 1.0, n, derive_seed(seed, 1), workers)
    totals = [superpose([x, y]).total for x, y in zip(a, b)]
    tv = tv_distance(empirical_pmf(totals), bt_analytic(BTParams(2.0, 0.5)))
    tol = tv_tolerance(0.01, n)
    return [_check("superposition_tv", tv < tol, tv=tv, tol=tol)]


def _thinning_task(params, p, rng, seed):
    from .processes import simulate_bt

    path = simulate_bt(params, 1.0, rng, seed)
    first, second = decompose(path, p, rng)
    return first.total, second.total


def _thinning(n, seed, workers):
    params = BTParams(1.0, 1.0)
    pairs = np.array(run_batch(partial(_thinning_task, params, (0.3, 0.7)), n, seed, workers))
    tv = tv_distance(empirical_pmf(pairs[:, 0]), bt_analytic(BTParams(math.exp(0.7), 0.3)))
    tol = tv_tolerance(0.01, n)
    n1, n2 = pairs[:, 0].astype(float), pairs[:, 1].astype(float)
    prod = (n1 - n1.mean()) * (n2 - n2.mean())
    cov, se = prod.mean(), prod.std(ddof=1) / math.sqrt(n)
    return [
        _check("thinning_marginal_tv", tv < tol, tv=tv, tol=tol),
        _check("thinning_dependence", cov > 5 * se, covariance=cov, standard_error=se),
    ]


def _different_theta(n, seed, workers):
    a, b = BTParams(1.0, 0.5), BTParams(2.0, 1.5)
    rng = np.random.default_rng(derive_seed(seed, 0))
    summed = bt_sample(a, 1.0, rng, size=n) + bt_sample(b, 1.0, rng, size=n)
    direct = compound_poisson_sample(convolve_different_theta(a, b), 1.0, rng, size=n)
    tv = tv_distance(empirical_pmf(summed), empirical_pmf(direct))
    tol = tv_tolerance(0.01, n)
    return [_check("different_theta_tv", tv < tol, tv=tv, tol=tol)]


def _nh_task(rate, theta, horizon, rng, seed):
    return simulate_nhbt(rate, theta, horizon, rng, seed).total


def _nonhomogeneous(n, seed, workers):
    tol = tv_tolerance(0.01, n)
    const = run_batch(partial(_nh_task, RateFunction.constant(1.0), 1.0, 1.0), n, derive_seed(seed, 0), workers)
    homog = [p.total for p in simulate_bt_batch(BTParams(1.0, 1.0), 1.0, n, derive_seed(seed, 1), workers)]
    tv_const = tv_distance(empirical_pmf(const), empirical_pmf(homog))

    rate = RateFunction.sin_squared(1.0, 1.0, 1.0)
    sin2 = run_batch(partial(_nh_task, rate, 0.5, 2.0), n, derive_seed(seed, 2), workers)
    m = mean_jump_fn(rate, 2.0)
    tv_sin2 = tv_distance(empirical_pmf(sin2), bt_analytic(BTParams(m, 0.5)))

    ramp = RateFunction.linear(0.0, 1.0, 2.0)
    rng = np.random.default_rng(derive_seed(seed, 3))
    comp = iterated_nhpp_sample(1.0, ramp, 2.0, rng, size=n)
    tv_comp = tv_distance(empirical_pmf(comp), bt_analytic(BTParams(2.0 * math.exp(-1.0), 1.0)))
    return [
        _check("nonhomogeneous_constant_reduction_tv", tv_const < tol, tv=tv_const, tol=tol),
        _check("nonhomogeneous_sin2_tv", tv_sin2 < tol, tv=tv_sin2, tol=tol, m=m),
        _check("nonhomogeneous_composition_tv", tv_comp < tol, tv=tv_comp, tol=tol),
    ]


def _loss_task(bt, claims, rng, seed):
    losses = simulate_compound_bt(bt, claims, 1.0, rng)
    return losses[-1].cumulative_loss if losses else 0.0


def _compound_loss(n, seed, workers):
    bt, claims = BTParams(1.0, 1.0), GammaParams(1.0, 1.0)
    totals = run_batch(partial(_loss_task, bt, claims), n, seed, workers)
    z = mean_z_score(totals, expected_loss(bt, claims, 1.0))
    return [_check("compound_loss_mean", abs(z) < 3.0, z=z)]


SCENARIOS: Dict[str, Callable[[int, int, int], List[dict]]] = {
    "compound_law": _compound_law,
    "representations": _representations,
    "superposition": _superposition,
    "thinning": _thinning,
    "different_theta": _different_theta,
    "nonhomogeneous": _nonhomogeneous,
    "compound_loss": _compound_loss,
}


def run_suite(suite: str, seed: int, n_paths=None, workers: int = 1, log=None) -> dict:
    """Run every scenario; ``n_paths`` overrides the suite's default draw count."""
    if suite not in SUITES:
        raise KeyError(suite)
    n = int(n_paths or SUITES[suite])
    checks = []
    for idx, (name, fn) in enumerate(SCENARIOS.items()):
        start = time.perf_counter()
        results = fn(n, derive_seed(seed, idx), workers)
        elapsed = time.perf_counter() - start
        for r in results:
            r["scenario"] = name
            r["seconds"] = elapsed
            if log is not None:
                log(f"{'PASS' if r['passed'] else 'FAIL'}  {r['name']}")
        checks.extend(results)
    return {
        "suite": suite,
        "seed": int(seed),
        "n_paths": n,
        "passed": all(c["passed"] for c in checks),
        "checks": checks,
    }
