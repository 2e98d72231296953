"""
Command-line entry point

    ftbal <command> [--config FILE] [--seed N] [--out DIR] [--log-level LEVEL]
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from pydantic import ValidationError

from .config import dump_config, load_config
from .errors import FtbalError
from .harness import COMMANDS, RunDirectory, cmd_report

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ftbal", description="Forecast-driven load balancing for a fat-tree SDN")
    parser.add_argument("command", choices=[*COMMANDS, "report"], help="Pipeline stage to run")
    parser.add_argument("--config", "-c", type=str, default=None, help="YAML experiment config")
    parser.add_argument("--seed", type=int, default=None, help="Override the global seed")
    parser.add_argument("--out", type=str, default=None, help="Run directory (default runs/<name>)")
    parser.add_argument(
        "--log-level",
        type=str,
        default="INFO",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        help="Logging level",
    )
    return parser


def run(argv: Optional[List[str]] = None) -> int:
    """Execute one command; returns the process exit code"""
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level), format=LOG_FORMAT)

    handler: Optional[logging.Handler] = None
    try:
        config = load_config(args.config).effective(args.seed)
        run_dir = RunDirectory(args.out or Path("runs") / config.name).create()

        handler = logging.FileHandler(run_dir.logs / f"{args.command}.log", encoding="utf-8")
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
        logging.getLogger().addHandler(handler)

        print("=" * 60)
        print(f"ftbal {args.command}")
        print(f"Run directory: {run_dir.root}")
        print(f"Seed: {config.seed}  Rate profile: {config.rate_profile}")
        print("=" * 60)

        if args.command == "report":
            gaps = cmd_report(run_dir)
            if gaps:
                print(f"Partial report: {len(gaps)} gap(s), see {run_dir.reports / 'gaps.txt'}")
        else:
            dump_config(config, run_dir.config_echo)
            COMMANDS[args.command](config, run_dir)
        logger.info("Main: %s finished", args.command)
        return 0
    except FtbalError as e:
        logger.error("Main: %s failed: %s", args.command, e)
        return e.exit_code
    except ValidationError as e:
        logger.error("Main: invalid configuration: %s", e)
        return 2
    except Exception:
        logger.exception("Main: %s failed with an unexpected error", args.command)
        return 1
    finally:
        if handler is not None:
            logging.getLogger().removeHandler(handler)
            handler.close()


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
