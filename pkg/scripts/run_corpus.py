#!/usr/bin/env python3
"""Run every shipped experiment config and print a comparison table."""

import argparse
from pathlib import Path

from carleman.cli import compare_runs, format_table, run_batch

ROOT = Path(__file__).resolve().parents[1]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--experiments", default=ROOT / "experiments", type=Path)
    ap.add_argument("-o", "--output", default=ROOT / "runs", type=Path)
    ap.add_argument("-j", "--jobs", type=int, default=1)
    ap.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE")
    args = ap.parse_args()
    reports = run_batch(args.experiments, args.output, args.overrides, args.jobs)
    print(format_table(compare_runs(sorted(reports), args.output)))


if __name__ == "__main__":
    main()
