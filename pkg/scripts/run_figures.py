"""Reproduce every figure preset with one config and print a summary."""

import argparse
import json
import logging
from pathlib import Path

from weighted_tv.cli.commands import cmd_reproduce
from weighted_tv.cli.config import load_config
from weighted_tv.cli.figures import FIGURES

logger = logging.getLogger(__name__)

logging.basicConfig(
    level=logging.INFO,
    format="%(asctime)s %(name)s %(levelname)-8s %(message)s",
)


if __name__ == "__main__":
    parser = argparse.ArgumentParser()
    parser.add_argument("config", nargs="?")
    parser.add_argument("--figures", nargs="+", default=list(FIGURES))
    args, overrides = parser.parse_known_args()

    config = load_config(args.config, overrides)
    codes = {}
    for figure in args.figures:
        codes[figure] = cmd_reproduce(config, figure)
    directory = Path(config.output.directory)
    (directory / "figures_summary.json").write_text(
        json.dumps(codes, indent=2)
    )
    for figure, code in codes.items():
        logger.info("%-8s exit code %d", figure, code)
