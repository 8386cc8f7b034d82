"""Entry point: ``python -m cli <command> [options]``."""
from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

from core.errors import CombSenseError, ComputationError, ConfigurationError, SpectrumError

from .commands import COMMANDS
from .config import PRESETS, load_config

logger = logging.getLogger("cli")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_COMPUTATION = 4

LOG_LEVELS = ("CRITICAL", "ERROR", "WARNING", "INFO", "DEBUG")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="combsense",
        description="Qubit time-comb mass sensing: coherence traces, sensitivity sweeps, estimation campaigns.",
    )
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", type=Path, help="flat key = value configuration file")
    parser.add_argument("--preset", choices=sorted(PRESETS))
    parser.add_argument("--out", help="output CSV path (default: <command>.csv)")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--workers", type=int)
    parser.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE")
    parser.add_argument("--verbose", action="store_true")
    return parser


def configure_logging(verbose: bool = False) -> None:
    """Log to stderr; an unknown COMBSENSE_LOG_LEVEL falls back to INFO and raises."""

    name = os.getenv("COMBSENSE_LOG_LEVEL", "INFO").strip().upper()
    known = name in LOG_LEVELS
    level = logging.DEBUG if verbose else (name if known else logging.INFO)
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
    if not known:
        raise ConfigurationError(f"unknown COMBSENSE_LOG_LEVEL {name!r}, expected one of {', '.join(LOG_LEVELS)}")


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        configure_logging(args.verbose)
        config = load_config(
            preset=args.preset,
            path=args.config,
            overrides=args.overrides,
            flags={"out": args.out, "seed": args.seed, "workers": args.workers},
        )
        COMMANDS[args.command](config)
    except ComputationError as exc:
        logger.error("computation failed: %s", exc)
        return EXIT_COMPUTATION
    except (ValueError, SpectrumError) as exc:
        logger.error("invalid configuration: %s", exc)
        return EXIT_CONFIG
    except OSError as exc:
        logger.error("I/O error: %s", exc)
        return EXIT_IO
    except CombSenseError as exc:
        logger.error("%s", exc)
        return EXIT_COMPUTATION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
