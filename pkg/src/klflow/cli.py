"""Command line front end: run configs, run suites, list the corpus.

Exit codes: 0 when everything passed, 1 when a run finished but a
certificate or gate failed, 2 for usage or configuration errors.
"""
from __future__ import annotations

import argparse
import sys
import time
from typing import List, Optional

import yaml

from .corpus import list_corpus
from .experiment import ExperimentConfig, run_experiment, run_suite

_CONFIG_ERRORS = (
    FileNotFoundError,
    IsADirectoryError,
    PermissionError,
    KeyError,
    TypeError,
    ValueError,
    yaml.YAMLError,
)


def _print_report(report) -> None:
    line = f"{report.run_id}: {report.verdict.upper()} ({report.mode})"
    print(line)
    for note in report.notes:
        print(f"  {note}")


def _cmd_run(args) -> int:
    configs = ExperimentConfig.from_file(args.config).expand()
    t0 = time.perf_counter()
    reports = [run_experiment(cfg, output_root=args.output) for cfg in configs]
    elapsed = time.perf_counter() - t0
    for report in reports:
        _print_report(report)
    print(f"elapsed: {elapsed:.2f}s")
    return 0 if all(r.verdict == "pass" for r in reports) else 1


def _cmd_suite(args) -> int:
    t0 = time.perf_counter()
    suite = run_suite(args.manifest, output_root=args.output)
    elapsed = time.perf_counter() - t0
    for report in suite.reports:
        _print_report(report)
    print(
        f"suite: {suite.verdict.upper()} "
        f"({len(suite.reports)} runs, {len(suite.failing)} failing)"
    )
    if suite.failing:
        print("failing runs: " + ", ".join(suite.failing))
    print(f"elapsed: {elapsed:.2f}s")
    return 0 if suite.verdict == "pass" else 1


def _cmd_list_corpus(_args) -> int:
    for line in list_corpus():
        print(line)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="klflow",
        description=(
            "Slope conditions, descent trajectories, and proximal sequences "
            "with empirical decay-rate certificates."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute one experiment config")
    p_run.add_argument("config", help="YAML or JSON config file")
    p_run.add_argument("--output", default=None, help="output root directory")
    p_run.set_defaults(handler=_cmd_run)

    p_suite = sub.add_parser("suite", help="execute every run in a manifest")
    p_suite.add_argument("manifest", help="YAML or JSON manifest file")
    p_suite.add_argument("--output", default=None, help="output root directory")
    p_suite.set_defaults(handler=_cmd_suite)

    p_list = sub.add_parser("list-corpus", help="list benchmark functional ids")
    p_list.set_defaults(handler=_cmd_list_corpus)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except _CONFIG_ERRORS as exc:
        print(f"klflow: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
