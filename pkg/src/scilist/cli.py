"""Command-line entry point: ``scilist <stage> --config FILE [--key value ...]``."""
from __future__ import annotations

import argparse
import logging
import sys

from .config import SCHEMA, ConfigError, example_config, load_config
from .pipeline import STAGES, DataError, StageDependencyError, run_stage

EXIT_OK, EXIT_VALIDATION, EXIT_DEPENDENCY, EXIT_DATA = 0, 2, 3, 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scilist",
        description="Find scientists through list metadata and analyse what they share "
                    "and how they connect.")
    parser.add_argument("stage", choices=STAGES + ("all", "example-config"),
                        help="pipeline stage to run, or example-config to print a template")
    parser.add_argument("--config", "-c", help="INI configuration file")
    parser.add_argument("--verbose", "-v", action="store_true")
    group = parser.add_argument_group("config overrides (one flag per config key)")
    for key in SCHEMA:
        group.add_argument(key.flag, dest=key.name, metavar=key.kind.upper(),
                           help=f"[{key.section}] {key.name}")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    if args.stage == "example-config":
        sys.stdout.write(example_config())
        return EXIT_OK
    overrides = {k.name: getattr(args, k.name) for k in SCHEMA}
    try:
        cfg = load_config(args.config, overrides)
    except ConfigError as exc:
        print(f"scilist: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        run_stage(args.stage, cfg)
    except StageDependencyError as exc:
        print(f"scilist: {exc}", file=sys.stderr)
        return EXIT_DEPENDENCY
    except DataError as exc:
        print(f"scilist: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
