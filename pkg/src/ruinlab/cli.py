"""Command-line entry point.

Subcommands simulate | asymptotics | compare | table share the flags
--config PATH, --out DIR, --seed N, --workers K and repeatable
--override key=value.  Exit codes: 0 success, 2 configuration error,
3 hypothesis violation (the failed items are named on stderr), 4 numeric
failure.  RUIN_LAB_LOG in {error, info, debug} controls log verbosity only.
"""

import argparse
import logging
import os
import sys

from .errors import (AcceptanceRateError, ConfigError, DegenerateDenominator,
                     DerivativeUnstable, DomainError, HypothesisViolation,
                     NetProfitViolation, NoRoot, QuadratureFailure,
                     StratificationError)
from .harness import MODES, apply_override, load_config, parse_config, run

log = logging.getLogger("ruinlab")

EXIT_CONFIG = 2
EXIT_HYPOTHESIS = 3
EXIT_NUMERIC = 4

_NUMERIC_ERRORS = (QuadratureFailure, NoRoot, DerivativeUnstable,
                   AcceptanceRateError, StratificationError,
                   DegenerateDenominator)


def _configure_logging():
    level = os.environ.get("RUIN_LAB_LOG", "error").lower()
    chosen = {"error": logging.ERROR, "info": logging.INFO,
              "debug": logging.DEBUG}.get(level, logging.ERROR)
    logging.basicConfig(level=chosen,
                        format="%(levelname)s %(name)s: %(message)s")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="ruinlab",
        description="Ruin-probability experiments: simulation, asymptotic "
                    "constants, and prediction comparisons.")
    sub = parser.add_subparsers(dest="mode", required=True)
    for mode in MODES:
        p = sub.add_parser(mode)
        p.add_argument("--config", required=True, help="JSON config path")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--workers", type=int, default=None)
        p.add_argument("--override", action="append", default=[],
                       metavar="KEY=VALUE",
                       help="override a config field (JSON value)")
    return parser


def main(argv=None):
    _configure_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else 0
    overrides = list(args.override)
    overrides.append(f"mode={args.mode}")
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    if args.workers is not None:
        overrides.append(f"workers={args.workers}")
    try:
        config = load_config(args.config, overrides)
        log.info("running mode=%s method=%s", config.mode, config.method)
        run(config, out_dir=args.out)
    except (ConfigError, DomainError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (HypothesisViolation, NetProfitViolation) as exc:
        failed = getattr(exc, "failed", ())
        detail = f" (failed: {', '.join(failed)})" if failed else ""
        print(f"hypothesis violation: {exc}{detail}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    except _NUMERIC_ERRORS as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return 0


if __name__ == "__main__":
    sys.exit(main())
