"""``belltouchard`` command-line front end.

Subcommands: ``pmf``, ``simulate``, ``risk`` and ``validate``. Any flag may
also come from ``--config FILE``, a flat JSON object keyed by flag names;
explicit flags win. Every output carries the resolved config and the toolkit
version. Exit codes: 0 success, 1 numeric failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from functools import partial
from typing import Optional, Sequence

from . import __version__
from .distributions import BTParams, bt_pmf_array
from .exceptions import BellTouchardError, DomainError
from .processes import (
    RateFunction,
    batch_summary,
    paths_to_csv,
    simulate_bt_batch,
    simulate_nhbt,
)
from .risk import GammaParams, RiskConfig, ruin_probability_mc, simulate_risk_path, trajectories_to_csv
from .streams import path_rng, run_batch
from .validation import SUITES, run_suite

PRESETS = {
    "dataset1": (0.1760, 0.3472),
    "dataset2": (0.2993, 1.2667),
    "dataset3": (0.4450, 0.6453),
}

EXIT_OK, EXIT_NUMERIC, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _nonneg_int(text):
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"expected a nonnegative integer, got {text}")
    return v


def _pos_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _add_common(p, seed=True):
    p.add_argument("--config", help="JSON file of flag values (flags override it)")
    p.add_argument("--output", "-o", help="write to this file instead of stdout")
    if seed:
        p.add_argument("--seed", type=_nonneg_int, default=0, help="master seed (default 0)")
        p.add_argument("--workers", type=_pos_int, default=1, help="worker processes (output does not depend on this)")


def _add_bt(p):
    p.add_argument("--preset", choices=sorted(PRESETS), help="load (alpha, theta) from a named preset")
    p.add_argument("--alpha", type=float)
    p.add_argument("--theta", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="belltouchard", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pmf", help="tabulate the pmf and cdf of N(t)")
    _add_bt(p)
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--k-max", type=_nonneg_int, default=20)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    _add_common(p, seed=False)

    p = sub.add_parser("simulate", help="simulate event paths")
    _add_bt(p)
    p.add_argument("--horizon", type=float, default=1.0)
    p.add_argument("--paths", type=_pos_int, default=1)
    p.add_argument("--summary", action="store_true", help="emit only the batch summary JSON")
    p.add_argument("--summary-output", help="also write the batch summary JSON here")
    p.add_argument("--nh-rate", choices=("constant", "linear", "sin2"),
                   help="nonhomogeneous rate family; --alpha is then ignored")
    p.add_argument("--rate-a", type=float, default=1.0, help="constant / intercept term")
    p.add_argument("--rate-b", type=float, default=0.0, help="slope or sin^2 amplitude")
    p.add_argument("--rate-omega", type=float, default=1.0, help="sin^2 angular frequency")
    _add_common(p)

    p = sub.add_parser("risk", help="surplus process and ruin probability")
    _add_bt(p)
    p.add_argument("--eta", type=float, default=1.0, help="Gamma claim shape")
    p.add_argument("--beta", type=float, default=1.0, help="Gamma claim rate")
    p.add_argument("--u", type=float, default=0.0, help="initial capital")
    p.add_argument("--epsilon", type=float, default=0.1, help="safety loading")
    p.add_argument("--horizon", type=float, default=100.0)
    p.add_argument("--paths", type=_nonneg_int, default=10_000, help="ruin Monte Carlo paths (0 skips it)")
    p.add_argument("--trajectories", type=_nonneg_int, default=0, help="number of surplus paths to export")
    p.add_argument("--trajectory-csv", help="file for the exported surplus paths")
    _add_common(p)

    p = sub.add_parser("validate", help="run the Monte Carlo validation suite")
    p.add_argument("--suite", default="quick", help=f"one of {', '.join(SUITES)}")
    p.add_argument("--paths", type=_pos_int, help="override the suite's draw count")
    p.add_argument("--quiet", action="store_true", help="no per-check lines on stderr")
    _add_common(p)
    return parser


def _load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise UsageError("config file must hold a flat JSON object")
    return {str(k).lstrip("-").replace("-", "_"): v for k, v in data.items()}


def _subparser(parser, command):
    action = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    return action.choices[command]


def parse_args(argv: Optional[Sequence[str]]) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        try:
            cfg = _load_config(args.config)
        except UsageError as exc:
            parser.error(str(exc))
        sub = _subparser(parser, args.command)
        known = {a.dest for a in sub._actions}
        unknown = sorted(set(cfg) - known - {"config"})
        if unknown:
            parser.error(f"unknown config keys: {', '.join(unknown)}")
        # reparse with file values as defaults so explicit flags still win
        sub.set_defaults(**{k: v for k, v in cfg.items() if k != "config"})
        args = parser.parse_args(argv)
    return args


def _resolve_bt(args, need_alpha=True):
    if args.preset:
        a, th = PRESETS[args.preset]
        args.alpha = a if args.alpha is None else args.alpha
        args.theta = th if args.theta is None else args.theta
    if args.theta is None:
        raise UsageError("--theta is required (or use --preset)")
    if need_alpha and args.alpha is None:
        raise UsageError("--alpha is required (or use --preset)")


def _positive(name, value):
    if not (value > 0 and math.isfinite(value)):
        raise UsageError(f"--{name} must be positive, got {value}")


# settings that never change the numbers; kept out so --workers cannot alter output bytes
_UNRECORDED = ("config", "output", "summary_output", "workers", "quiet", "trajectory_csv")


def _config_of(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in _UNRECORDED}


def _meta(args) -> dict:
    return {"version": __version__, "config": _config_of(args)}


def _emit(text: str, path: Optional[str]):
    if path:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _comment_line(args) -> str:
    return "# " + json.dumps(_meta(args), sort_keys=True) + "\n"


def cmd_pmf(args):
    _resolve_bt(args)
    _positive("t", args.t)
    params = BTParams(args.alpha, args.theta).at_time(args.t)
    pmf = bt_pmf_array(params, args.k_max)
    cdf = [min(1.0, math.fsum(pmf[: k + 1])) for k in range(args.k_max + 1)]
    rows = [{"k": k, "pmf": float(pmf[k]), "cdf": cdf[k]} for k in range(args.k_max + 1)]
    if args.format == "json":
        text = _dumps({**_meta(args), "rows": rows})
    else:
        lines = [_comment_line(args), "k,pmf,cdf\n"]
        lines += [f"{r['k']},{r['pmf']:.17g},{r['cdf']:.17g}\n" for r in rows]
        text = "".join(lines)
    _emit(text, args.output)


def _nh_path_task(rate, theta, horizon, rng, seed):
    return simulate_nhbt(rate, theta, horizon, rng, seed)


def _rate_from_args(args) -> RateFunction:
    if args.nh_rate == "constant":
        return RateFunction.constant(args.rate_a)
    if args.nh_rate == "linear":
        return RateFunction.linear(args.rate_a, args.rate_b, args.horizon)
    return RateFunction.sin_squared(args.rate_a, args.rate_b, args.rate_omega)


def cmd_simulate(args):
    _resolve_bt(args, need_alpha=args.nh_rate is None)
    _positive("horizon", args.horizon)
    _positive("theta", args.theta)
    if args.nh_rate is None:
        params = BTParams(args.alpha, args.theta)
        paths = simulate_bt_batch(params, args.horizon, args.paths, args.seed, args.workers)
        summary_params = {"alpha": params.alpha, "theta": params.theta}
    else:
        rate = _rate_from_args(args)
        task = partial(_nh_path_task, rate, args.theta, args.horizon)
        paths = run_batch(task, args.paths, args.seed, args.workers)
        summary_params = {"rate": args.nh_rate, "theta": args.theta}

    summary = None
    if args.summary or args.summary_output:
        summary = _dumps({**_meta(args), **batch_summary(paths, summary_params, args.horizon, args.seed)})
    if args.summary:
        _emit(summary, args.output)
        return
    _emit(_comment_line(args) + paths_to_csv(paths), args.output)
    if args.summary_output:
        _emit(summary, args.summary_output)


def _risk_config(args) -> RiskConfig:
    _resolve_bt(args)
    _positive("horizon", args.horizon)
    if not (args.epsilon >= 0 and math.isfinite(args.epsilon)):
        raise UsageError(f"--epsilon must be nonnegative, got {args.epsilon}")
    if not (args.u >= 0 and math.isfinite(args.u)):
        raise UsageError(f"--u must be nonnegative, got {args.u}")
    return RiskConfig(args.u, args.epsilon, BTParams(args.alpha, args.theta),
                      GammaParams(args.eta, args.beta), args.horizon)


def cmd_risk(args):
    config = _risk_config(args)
    if args.trajectories and not args.trajectory_csv:
        raise UsageError("--trajectories needs --trajectory-csv")
    report = {**_meta(args), "premium_rate": config.premium}
    if args.paths:
        est = ruin_probability_mc(config, args.paths, args.seed, args.workers)
        mc = est.report(config)
        report["model"] = mc.pop("config")
        report.update(mc)
    if args.trajectory_csv:
        # the exported paths are the first members of the Monte Carlo batch
        n = args.trajectories or 1
        risk_paths = [simulate_risk_path(config, path_rng(args.seed, i)) for i in range(n)]
        with open(args.trajectory_csv, "w", newline="") as fh:
            fh.write(_comment_line(args))
            trajectories_to_csv(risk_paths, fh)
    _emit(_dumps(report), args.output)


def cmd_validate(args):
    if args.suite not in SUITES:
        raise UsageError(f"unknown suite {args.suite!r}; choose from {', '.join(SUITES)}")
    log = None if args.quiet else (lambda line: print(line, file=sys.stderr))
    result = run_suite(args.suite, args.seed, args.paths, args.workers, log=log)
    _emit(_dumps({**_meta(args), **result}), args.output)
    return EXIT_OK if result["passed"] else EXIT_NUMERIC


COMMANDS = {"pmf": cmd_pmf, "simulate": cmd_simulate, "risk": cmd_risk, "validate": cmd_validate}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = parse_args(argv)
    try:
        code = COMMANDS[args.command](args)
    except (UsageError, DomainError) as exc:
        sys.stderr.write(_subparser(build_parser(), args.command).format_usage())
        print(f"belltouchard {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (BellTouchardError, ArithmeticError) as exc:
        print(f"belltouchard {args.command}: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK if code is None else code


if __name__ == "__main__":
    sys.exit(main())
