"""
proxaddr command line: run scenario sweeps and report on their metrics.

Usage:
  proxaddr run CONFIG [--seed N] [--out DIR] [--jobs N]
  proxaddr report METRICS.csv [METRICS.csv ...] [--format text|csv]

Exit codes:
  0  Success
  1  Unexpected error
  2  Invalid configuration or arguments
  3  A scenario did not reach quiescence within its event budget
  4  Nothing to report
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from proxaddr import __version__, settings
from proxaddr.cli.models import ConfigError
from proxaddr.cli.report import EmptyInput, compare, load_rows, render_csv, render_text
from proxaddr.cli.runner import load_config, override_seed, run_config, write_outputs
from proxaddr.simnet.engine import NonQuiescent

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CONFIG = 2
EXIT_NON_QUIESCENT = 3
EXIT_EMPTY = 4

ANSI = {
    "reset": "\033[0m",
    "green": "\033[32m",
}


def style(text: str, *styles: str) -> str:
    if not sys.stdout.isatty():
        return text
    return "".join(ANSI[s] for s in styles) + text + ANSI["reset"]


def cmd_run(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    if args.seed is not None:
        config = override_seed(config, args.seed)
    out_dir = Path(args.out or config.output or settings.OUTPUT_DIR)
    jobs = args.jobs if args.jobs is not None else settings.JOBS
    if jobs < 1:
        raise ConfigError(f"--jobs must be at least 1, got {jobs}")

    rows = run_config(config, jobs=jobs)
    summary = write_outputs(rows, out_dir)

    print(style(f"{summary.points} sweep points written to {out_dir}", "green"))
    print(render_text(summary.comparison), end="")
    return EXIT_OK


def cmd_report(args: argparse.Namespace) -> int:
    entries = compare(load_rows(args.metrics))
    if args.format == "csv":
        sys.stdout.write(render_csv(entries))
    else:
        sys.stdout.write(render_text(entries))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="proxaddr",
        description="Simulate and compare IPv6 address allocation schemes",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument(
        "--log-level",
        default=None,
        choices=["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"],
        help=f"Logging level (default: PROXADDR_LOG_LEVEL or {settings.LOG_LEVEL})",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    run = subparsers.add_parser("run", help="Run every scenario of a config file")
    run.add_argument("config", help="Path to a JSON config file")
    run.add_argument("--seed", type=int, help="Seed for every scenario that does not sweep seeds")
    run.add_argument("--out", help="Output directory for metrics.csv and summary.json")
    run.add_argument("--jobs", type=int, help="Parallel worker processes (default: PROXADDR_JOBS)")
    run.set_defaults(func=cmd_run)

    report = subparsers.add_parser("report", help="Compare schemes across metrics files")
    report.add_argument("metrics", nargs="*", help="metrics.csv files")
    report.add_argument("--format", choices=["text", "csv"], default="text", help="Output format")
    report.set_defaults(func=cmd_report)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=args.log_level or settings.LOG_LEVEL,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )

    try:
        return args.func(args)
    except ConfigError as e:
        logger.error(f"configuration error: {e}")
        return EXIT_CONFIG
    except NonQuiescent as e:
        logger.critical(f"simulation did not quiesce: {e}")
        return EXIT_NON_QUIESCENT
    except EmptyInput as e:
        logger.error(f"nothing to report: {e}")
        return EXIT_EMPTY
    except Exception as e:
        logger.exception(f"unexpected error: {e}")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
