"""The ``weighted-tv`` command.

Usage::

    weighted-tv [-v] denoise [--config FILE] [--section.key=value ...]
    weighted-tv [-v] verify SUITE [--config FILE] [...]
    weighted-tv [-v] sweep [--lambdas L [L ...]] [--config FILE] [...]
    weighted-tv [-v] reproduce FIGURE [--config FILE] [...]
    weighted-tv [-v] inspect RUN_DIR [--delete]
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from collections.abc import Iterator
from contextlib import contextmanager
from pathlib import Path

from pydantic import ValidationError

from .. import __version__
from ..backend.verification import SUITES, UnknownSuiteError
from .commands import (
    EXIT_IO,
    EXIT_USAGE,
    UsageError,
    cmd_denoise,
    cmd_inspect,
    cmd_reproduce,
    cmd_sweep,
    cmd_verify,
)
from .config import ConfigError, describe_validation_error, load_config
from .figures import FIGURES, UnknownFigureError

logger = logging.getLogger(__name__)

LOCK_NAME = ".weighted-tv.lock"


class ExperimentLockedError(OSError):
    """Another process owns the output directory."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@contextmanager
def experiment_lock(directory: Path) -> Iterator[Path]:
    """Hold a lockfile in ``directory`` for the duration of the block.

    Raises:
        ExperimentLockedError: If the lockfile already exists.
    """
    directory.mkdir(parents=True, exist_ok=True)
    lock = directory / LOCK_NAME
    try:
        fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError as e:
        raise ExperimentLockedError(
            f"{directory} is in use by another process (remove {lock} if "
            "it is stale)"
        ) from e
    with os.fdopen(fd, "w") as f:
        f.write(f"{os.getpid()}\n")
    try:
        yield lock
    finally:
        lock.unlink(missing_ok=True)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="weighted-tv",
        description="Weighted and anisotropic total variation denoising.",
        epilog="Any config field can be overridden with "
        "--section.key=value, e.g. --problem.lam=0.1.",
    )
    parser.add_argument(
        "--version", action="version", version=f"%(prog)s {__version__}"
    )
    parser.add_argument(
        "-v", "--verbose", action="store_true", help="Log at DEBUG level."
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    def add(name: str, summary: str) -> argparse.ArgumentParser:
        sub = subparsers.add_parser(name, help=summary)
        sub.add_argument("--config", type=Path, help="A YAML config file.")
        return sub

    add("denoise", "Solve the configured problem and save the run.")
    verify = add("verify", "Run a property suite.")
    verify.add_argument("suite", help=f"One of {', '.join(SUITES)} or all.")
    sweep = add("sweep", "Solve for a list of regularization weights.")
    sweep.add_argument(
        "--lambdas",
        type=float,
        nargs="+",
        help="Defaults to analysis.lambdas.",
    )
    reproduce = add("reproduce", "Regenerate a figure preset.")
    reproduce.add_argument("figure", choices=list(FIGURES))
    inspect = subparsers.add_parser(
        "inspect", help="Print the summary and gap history of a saved run."
    )
    inspect.add_argument("run_dir", type=Path, help="A run directory.")
    inspect.add_argument(
        "--delete", action="store_true", help="Delete the run afterwards."
    )
    return parser


def _dispatch(args: argparse.Namespace, overrides: list[str]) -> int:
    if args.command == "inspect":
        if overrides:
            raise UsageError(f"inspect takes no overrides, got {overrides}")
        return cmd_inspect(args.run_dir, args.delete)
    config = load_config(args.config, overrides)
    with experiment_lock(Path(config.output.directory)):
        if args.command == "denoise":
            return cmd_denoise(config)
        if args.command == "verify":
            return cmd_verify(config, args.suite)
        if args.command == "sweep":
            return cmd_sweep(config, args.lambdas)
        return cmd_reproduce(config, args.figure)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args, overrides = parser.parse_known_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(name)s %(levelname)-8s %(message)s",
    )
    try:
        return _dispatch(args, overrides)
    except ValidationError as e:
        print(
            f"Invalid configuration:\n{describe_validation_error(e)}",
            file=sys.stderr,
        )
        return EXIT_USAGE
    except (
        ConfigError,
        UnknownSuiteError,
        UnknownFigureError,
        UsageError,
        KeyError,
    ) as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as e:
        logger.error("I/O failure: %s", e)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
