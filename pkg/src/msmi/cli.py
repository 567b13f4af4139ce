"""Command-line entry point.

Each subcommand runs one study kind from a JSON config, writes the CSV
when an output path is configured, prints the report, and exits with:
0 all checks passed, 1 a configured threshold failed, 2 usage or config
error, 3 a budget refusal (the run declined work rather than degrade).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace

from msmi.core import BudgetExceededError
from msmi.entropy import QuadratureError
from msmi.harness import emit_report, load_config, run_study, write_csv

__all__ = ["main", "SUBCOMMAND_KINDS"]

# subcommand names are frozen interface; study kinds are internal ids
SUBCOMMAND_KINDS = {
    "types-count": "typical-count",
    "msym-bounds": "discrete-bounds",
    "msym-mc": "discrete-mc",
    "msym-brute": "discrete-brute",
    "cont-mc": "continuous-mc",
    "bgvol-mc": "bg-volume",
    "study": None,
    "verify": "verify-suite",
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="msmi",
        description="rate studies for permutation-symbol sets",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMAND_KINDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON study config")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--out", help="override the config CSV path")
        p.add_argument(
            "--threads", type=int, help="worker threads (default 1)"
        )
    return parser


def _resolve_threads(cli_threads) -> int:
    env = os.environ.get("MSMI_THREADS")
    if env is not None:
        threads = int(env)
    elif cli_threads is not None:
        threads = int(cli_threads)
    else:
        threads = 1
    if threads < 1:
        raise ValueError("threads must be >= 1")
    return threads


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        config = load_config(args.config)
        expected = SUBCOMMAND_KINDS[args.command]
        if expected is not None and config.study != expected:
            raise ValueError(
                f"subcommand {args.command} runs {expected} studies, "
                f"but the config says {config.study!r}"
            )
        if args.seed is not None:
            config = replace(config, seed=args.seed)
        if args.out is not None:
            config = replace(config, out=args.out)
        threads = _resolve_threads(args.threads)
    except (OSError, ValueError, KeyError, TypeError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    try:
        rows = run_study(config, threads=threads)
    except (BudgetExceededError, QuadratureError) as exc:
        print(f"budget refusal: {exc}", file=sys.stderr)
        return 3

    if config.out:
        write_csv(rows, config.out)
    code = emit_report(rows, config)
    if any(r.status == "skipped" for r in rows):
        # partial runs report refusal even when the surviving checks pass
        return 3
    return code


if __name__ == "__main__":
    sys.exit(main())
