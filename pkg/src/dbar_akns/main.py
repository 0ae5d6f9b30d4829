import argparse

from pathlib import Path
from typing import List, Optional

from dbar_akns.errors import ConfigError
from dbar_akns.globals import OUT_DIR
from dbar_akns.logger import error, info, init_logger
from dbar_akns.models.config import parse_config
from dbar_akns.pipeline.commands import COMMANDS, run_pipeline


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dbar-akns",
        description="Dbar problem for the AKNS system: Cauchy transforms, Neumann solves, potential reconstruction",
    )
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", type=Path, required=True, help="JSON run configuration")
    parser.add_argument("--deterministic", action="store_true",
                        help="single worker, no timestamps: byte-identical artifacts across runs")
    parser.add_argument("--out", type=Path, default=OUT_DIR, help=f"artifact directory (default {OUT_DIR})")
    parser.add_argument("--debug", action="store_true")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    init_logger(args.debug)
    info("Logger initialized")

    try:
        config = parse_config(args.config)
    except ConfigError as e:
        error(f"config error: {e}")
        return e.exit_code

    if args.deterministic:
        config = config.model_copy(update={"deterministic": True})

    exit_code = run_pipeline(config, args.command, args.out)
    info(f"{args.command} finished with exit code {exit_code}")
    return exit_code


def entry():
    exit(main())


if __name__ == "__main__":
    exit_code = main()
    exit(exit_code)
