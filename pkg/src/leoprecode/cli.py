"""``simulate`` command-line entry point."""

from __future__ import annotations

import argparse
import logging
import sys

from .config import ConfigError, load_config
from .experiment import emit_csv, run_experiment

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_IO = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="simulate",
        description="Run downlink precoder designs over a power sweep and "
                    "write sum rates to CSV.")
    parser.add_argument("--config", required=True, help="scenario file (key = value)")
    parser.add_argument("--out", required=True, help="output CSV path")
    parser.add_argument("--trace-dir", help="directory for per-solve convergence traces")
    parser.add_argument("--threads", type=int, default=1,
                        help="worker threads over (seed, power, algorithm) cells")
    parser.add_argument("--no-timing", action="store_true",
                        help="write wall_ms as 0 so repeated runs are byte-identical")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        rows = run_experiment(cfg, threads=args.threads, trace_dir=args.trace_dir,
                              timing=not args.no_timing)
        emit_csv(rows, args.out)
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
