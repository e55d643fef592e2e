"""Command-line interface: one subcommand per experiment family.

Usage::

    sim <subcommand> --config <path> [--seed N] [--out DIR] [--workers N]

Subcommands mirror the experiment kinds (sis-scan, sir-run,
gradient-snapshot, multi-domain-scan, hysteresis, multistability-map,
fit).  Each subcommand's --help lists every config key with its range
and default.  SIM_SEED and SIM_OUT environment variables override the
config; command-line flags override both.
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys

from .config import SCHEMAS, ConfigError, parse_config, schema_help
from .runner import run_experiment

_DESCRIPTIONS = {
    "sis-scan": "endemic-state threshold scan over the fill fraction, with a tanh fit",
    "sir-run": "single outbreak time series with herd-immunity summary",
    "gradient-snapshot": "density-gradient run emitting a PGM snapshot and the domain wall",
    "multi-domain-scan": "threshold scan with per-domain density offsets and a multi-tanh fit",
    "hysteresis": "transmission vs coupling detuning for both scan directions",
    "multistability-map": "directional transmission-difference map over (f_R2, delta_c)",
    "fit": "fit a tanh / multi-tanh / Gaussian model to CSV data",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sim",
        description="Lattice avalanche-excitation simulator experiment runner.",
    )
    sub = parser.add_subparsers(dest="kind", required=True)
    for kind in SCHEMAS:
        p = sub.add_parser(
            kind,
            help=_DESCRIPTIONS[kind],
            description=_DESCRIPTIONS[kind],
            epilog="config keys:\n" + schema_help(kind),
            formatter_class=argparse.RawDescriptionHelpFormatter,
        )
        p.add_argument("--config", required=True, help="TOML experiment config path")
        p.add_argument("--seed", type=int, default=None,
                       help="master seed (overrides config and SIM_SEED)")
        p.add_argument("--out", default=None,
                       help="output directory (overrides config and SIM_OUT)")
        p.add_argument("--workers", type=int, default=None,
                       help="parallel worker count (overrides config)")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = parse_config(args.config)
    except ConfigError as e:
        print(e, file=sys.stderr)
        return 2
    except OSError as e:
        print(f"cannot read config: {e}", file=sys.stderr)
        return 2

    if config.kind != args.kind:
        print(
            f"config kind {config.kind!r} does not match subcommand {args.kind!r}",
            file=sys.stderr,
        )
        return 2

    seed = config.seed
    if os.environ.get("SIM_SEED"):
        try:
            seed = int(os.environ["SIM_SEED"])
        except ValueError:
            print("SIM_SEED must be an integer", file=sys.stderr)
            return 2
    if args.seed is not None:
        seed = args.seed

    out = config.out
    if os.environ.get("SIM_OUT"):
        out = os.environ["SIM_OUT"]
    if args.out is not None:
        out = args.out

    config = dataclasses.replace(config, seed=seed, out=out)
    try:
        manifest = run_experiment(config, workers=args.workers)
    except Exception as e:
        print(f"experiment failed: {type(e).__name__}: {e}", file=sys.stderr)
        return 1
    print(manifest)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
