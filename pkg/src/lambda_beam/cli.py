"""Command line entry point.

Usage::

    lambda-beam <scenario> [--config run.yaml] [--out DIR] [--seed N]
                [--set key=value ...]

Scenarios: pde, adiabatic, compare, measure, sweep.  The subcommand always
wins over any ``scenario`` key in the file.  Without --config every field
takes its default, so ``lambda-beam measure`` works out of the box.  The
output directory defaults to $LAMBDA_BEAM_OUT, then ./out.
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys

from .config import SCENARIOS, ConfigError, RunConfig, load_config
from .interferometry import MeasurementError
from .model import ModelError
from .pde import EngineError
from .runner import run_scenario


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lambda-beam",
        description="Probe-to-matter-wave transfer simulations and "
                    "counting interferometry.")
    sub = parser.add_subparsers(dest="scenario", required=True)
    for name in SCENARIOS:
        p = sub.add_parser(name, help=f"run the {name} scenario")
        p.add_argument("--config", default=None,
                       help="YAML run file (defaults apply when omitted)")
        p.add_argument("--out", default=None,
                       help="output directory (default: $LAMBDA_BEAM_OUT "
                            "or ./out)")
        p.add_argument("--seed", type=int, default=None,
                       help="override the run seed")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       dest="overrides",
                       help="override a config entry by dotted path "
                            "(repeatable)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config) if args.config else RunConfig()
        config = dataclasses.replace(config, scenario=args.scenario)
        if args.overrides:
            config = config.with_overrides(args.overrides)
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError("--seed must be non-negative")
            config = dataclasses.replace(config, seed=args.seed)
        out_dir = args.out or os.environ.get("LAMBDA_BEAM_OUT") or "out"
        manifest = run_scenario(config, out_dir)
    except (ConfigError, ModelError, EngineError, MeasurementError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"{config.scenario}: wrote {len(manifest['outputs'])} outputs to "
          f"{out_dir} ({manifest['runtime_s']:.2f} s)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
