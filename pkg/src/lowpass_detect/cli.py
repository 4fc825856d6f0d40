"""Command-line entry point: ``lowpass-detect run|validate|fixtures|theorem``."""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

from .experiments import (
    ConfigError,
    GraphConfig,
    emit_results,
    instance_report,
    load_config,
    parse_config,
    run_experiment,
)

FIXTURES = {
    "detect_lp": {
        "kind": "detect-lp",
        "graph": {"N": 60, "K": 3, "r_scale": 1, "p_scale": 4},
        "taus": [1.0, 3.0],
        "n": 40,
        "M": 50,
        "grid": {"var": "n", "values": [20, 40, 60]},
        "trials": 10,
        "master_seed": 7,
    },
    "blind_cd": {
        "kind": "blind-cd",
        "graph": {"N": 60, "K": 3, "r_scale": 1, "p_scale": 7},
        "filter": {"kind": "power", "a": 0.5, "T": 3},
        "M": 200,
        "grid": {"var": "n", "values": [30, 60]},
        "trials": 5,
        "master_seed": 7,
    },
    "rk_norm": {
        "kind": "rk-norm",
        "graph": {"N": 60, "K": 2, "r_scale": 1, "p_scale": 4},
        "K_grid": [2, 3],
        "grid": {"var": "n", "values": [20, 40, 60]},
        "trials": 10,
        "master_seed": 7,
    },
}


def _cmd_run(args) -> int:
    config = load_config(args.config)
    if args.workers is not None:
        config = config.model_copy(update={"workers": args.workers})
    table = run_experiment(config)
    fmt = args.format or config.output.format
    out = Path(args.out or config.output.path)
    emit_results(table, fmt, out)
    print(f"wrote {len(table.rows)} rows to {out}")
    return 0


def _cmd_validate(args) -> int:
    config = load_config(args.config)
    print(f"ok: {config.kind}, grid {config.grid.var}={config.grid_values()}, {config.trials} trials")
    return 0


def _cmd_fixtures(args) -> int:
    out = Path(args.out)
    for name, raw in FIXTURES.items():
        table = run_experiment(parse_config(raw))
        emit_results(table, "csv", out / f"{name}.csv")
        print(f"wrote {out / (name + '.csv')}")
    return 0


def _cmd_theorem(args) -> int:
    graph = GraphConfig(N=args.N, K=args.K, r_scale=args.r_scale, p_scale=args.p_scale)
    delta = args.delta if args.delta is not None else math.sqrt(args.N / args.n)
    report = instance_report(graph, args.n, args.M, args.tau, delta, args.noise_var, args.c1, args.seed)
    print(json.dumps(report, indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lowpass-detect", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run an experiment config and write its results table")
    p.add_argument("config")
    p.add_argument("--out", help="override output.path")
    p.add_argument("--format", choices=["csv", "json"], help="override output.format")
    p.add_argument("--workers", type=int, help="override the number of worker processes")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("validate", help="check a config file without running it")
    p.add_argument("config")
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("fixtures", help="emit small golden tables for every experiment kind")
    p.add_argument("--out", default="fixtures")
    p.set_defaults(func=_cmd_fixtures)

    p = sub.add_parser("theorem", help="diagnostics of the detection guarantee on one sampled instance")
    p.add_argument("--N", type=int, default=150)
    p.add_argument("--K", type=int, default=3)
    p.add_argument("--r-scale", type=float, default=1.0)
    p.add_argument("--p-scale", type=float, default=4.0)
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--M", type=int, default=100)
    p.add_argument("--tau", type=float, default=5.0)
    p.add_argument("--delta", type=float, help="threshold (default sqrt(N/n))")
    p.add_argument("--noise-var", type=float, default=1e-2)
    p.add_argument("--c1", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_theorem)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
