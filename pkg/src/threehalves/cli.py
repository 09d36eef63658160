"""Command-line entry point.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import SCHEMES, SimConfig, load_config
from .errors import ConfigError, NumericalFailure
from .harness import benchmark_timing, emit_report, emit_reports, run_experiment, rel_mse_grid
from .params import L_COEFFICIENTS

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="JSON config file; flags override its values")
    p.add_argument("--scheme", choices=SCHEMES)
    p.add_argument("--set", dest="parameter_set", help="parameter set PS1..PS5")
    p.add_argument("--n", dest="N", type=int, help="paths per estimate")
    p.add_argument("--h", type=float, help="outer time step")
    p.add_argument("--m", dest="M", type=int, help="quadrature subintervals per step")
    p.add_argument("--T", type=float, help="maturity in years")
    p.add_argument("--reps", dest="repetitions", type=int, help="independent repetitions")
    p.add_argument("--strikes", type=float, nargs="+", help="moneyness ratios K/S0")
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--long", action="store_true", help="allow runs with very many OU components (PS1)")
    p.add_argument(
        "--strict-paper-milstein", action="store_true",
        help="drive the Milstein stock with an independent normal only",
    )
    p.add_argument("--l-coefficient", dest="l_coefficient", choices=L_COEFFICIENTS)


def _config(args: argparse.Namespace) -> SimConfig:
    overrides = {
        k: getattr(args, k)
        for k in ("scheme", "parameter_set", "N", "h", "M", "T", "repetitions", "strikes", "seed", "workers",
                  "l_coefficient")
    }
    if args.strict_paper_milstein:
        overrides["milstein_correlated"] = False
    return load_config(args.config, **overrides)


def _write(data: bytes, path: Path | None) -> None:
    if path is None:
        sys.stdout.write(data.decode())
    else:
        path.write_bytes(data)


def _price(args) -> int:
    report = run_experiment(_config(args), allow_long=args.long)
    _write(emit_report(report, "csv"), args.out)
    if args.json is not None:
        args.json.write_bytes(emit_report(report, "json"))
    return EXIT_OK


def _timing(args) -> int:
    cfg = _config(args)
    rows = {}
    for scheme in SCHEMES:
        cfg.scheme = scheme
        rows[scheme] = benchmark_timing(cfg, allow_long=args.long)
    out = {"parameter_set": cfg.parameter_set, "N": cfg.N, "h": cfg.h, "M": cfg.M, "seconds": rows}
    _write((json.dumps(out, indent=2) + "\n").encode(), args.out)
    return EXIT_OK


def _mse_grid(args) -> int:
    sets = ("PS1", "PS2", "PS3") if args.long else ("PS2", "PS3")
    base = SimConfig()
    reports = rel_mse_grid(
        sets,
        repetitions=args.repetitions or base.repetitions,
        seed=base.seed if args.seed is None else args.seed,
        workers=args.workers or 1,
        allow_long=args.long,
    )
    _write(emit_reports(reports, "csv"), args.out)
    if args.json is not None:
        args.json.write_bytes(emit_reports(reports, "json"))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="threehalves", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    price = sub.add_parser("price", help="repeated price estimates with error statistics")
    _common(price)
    price.add_argument("--out", type=Path, help="CSV output (default stdout)")
    price.add_argument("--json", type=Path, help="also write the full JSON report here")
    price.set_defaults(func=_price)

    timing = sub.add_parser("timing", help="median-of-3 wall time per price estimate for every scheme")
    _common(timing)
    timing.add_argument("--out", type=Path)
    timing.set_defaults(func=_timing)

    grid = sub.add_parser("mse-grid", help="relative-MSE grid: sets x M in {2,4} x N in {5e3,1e4,5e4}")
    grid.add_argument("--reps", dest="repetitions", type=int)
    grid.add_argument("--seed", type=int)
    grid.add_argument("--workers", type=int)
    grid.add_argument("--long", action="store_true", help="include PS1")
    grid.add_argument("--out", type=Path)
    grid.add_argument("--json", type=Path)
    grid.set_defaults(func=_mse_grid)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
