"""
Command line entry point.

    frachs run <config.json> [--out DIR] [--seed N] [--threads N] [--verbose]
    frachs stats [logfile]

Exit codes: 0 all checks passed, 2 config error, 3 numerical failure,
4 at least one check failed.
"""

import argparse
import logging
import os
import sys

from .errors import ConfigError, FracHSError
from .infrastructure.config import LOGFILE
from .infrastructure.logger import print_stats

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_CHECKS = 4

log = logging.getLogger("frachs")


def build_parser():
    parser = argparse.ArgumentParser(prog="frachs", description="Fractional Hardy-Sobolev numerical lab")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one experiment from a JSON config")
    run.add_argument("config", help="path to the experiment config")
    run.add_argument("--out", help="output directory (overrides the config)")
    run.add_argument("--seed", type=int, help="random seed (overrides the config)")
    run.add_argument("--threads", type=int, help="numba threads and worker processes")
    run.add_argument("-v", "--verbose", action="store_true", help="log progress at INFO level")
    run.add_argument("-q", "--quiet", action="store_true", help="suppress the progress display")

    stats = sub.add_parser("stats", help="summarize the run log")
    stats.add_argument("logfile", nargs="?", default=os.path.join("results", LOGFILE))
    return parser


def _run(args):
    from .experiments import load_config, run_experiment, with_overrides

    if args.verbose:
        log.setLevel(logging.INFO)
    try:
        cfg = with_overrides(load_config(args.config), out=args.out, seed=args.seed, threads=args.threads)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        report, paths = run_experiment(cfg, quiet=args.quiet)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except FracHSError as e:
        print(f"numerical failure ({type(e).__name__}): {e}", file=sys.stderr)
        return EXIT_NUMERICAL

    failed = [c for c in report.checks if not c.passed]
    for c in failed:
        print(f"FAILED {c.name}: value={c.value} threshold={c.threshold}", file=sys.stderr)
    print(f"{cfg.experiment}: {len(report.checks) - len(failed)}/{len(report.checks)} checks passed")
    for path in paths:
        print(f"  wrote {path}")
    return EXIT_CHECKS if failed else EXIT_OK


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.command == "run":
        return _run(args)
    print_stats(args.logfile)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
