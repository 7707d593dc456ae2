"""Command line front end: ``hypac {run-pde,run-ode,sweep,compare,check}``."""

from __future__ import annotations

import argparse
import sys

from .experiments import EXIT_CONFIG, ConfigError, exit_code, failed_checks, load_config, run_experiment

_SUBCOMMANDS = {"run-pde": "pde", "run-ode": "ode", "sweep": "sweep", "compare": "compare", "check": "check"}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hypac", description="Radial damped hyperbolic Allen-Cahn experiments.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", metavar="PATH", help="key = value file with an [experiment] section")
        p.add_argument("--out", metavar="DIR", default="out", help="output directory (default: out)")
        p.add_argument("--workers", metavar="N", type=int, default=1, help="concurrent runs for sweep/compare")
        p.add_argument("--timescale", choices=("fast", "slow"), help="scale of the times given in the config")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    mode = _SUBCOMMANDS[args.command]
    try:
        if args.workers < 1:
            raise ConfigError("--workers must be at least 1")
        cfg = load_config(args.config, timescale=args.timescale, mode=mode)
        code, rep = run_experiment(cfg, args.out, args.workers)
    except ConfigError as exc:
        print(f"hypac: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for c in rep.checks:
        print(f"{'PASS' if c['pass'] else 'FAIL'} {c['name']} margin={c['margin']:.6g}")
    if code != 0:
        bad = failed_checks(rep)
        if bad:
            print("failed invariants: " + ", ".join(bad), file=sys.stderr)
        elif rep.failed:
            print("a run failed; partial outputs were kept", file=sys.stderr)
        else:
            print("nothing ran", file=sys.stderr)
    return exit_code(rep)


if __name__ == "__main__":
    sys.exit(main())
