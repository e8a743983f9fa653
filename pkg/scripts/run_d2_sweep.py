#!/usr/bin/env python3
"""Tolerance sweep of the eccentric two-body problem with simulated
per-stage roundoff, for the order-12 extrapolation pair in both
implementations and for the five-stage reference pair.

Writes one CSV per method/form into the output directory and prints a
short summary per run.
"""

import argparse
import pathlib
import sys

from rkistab.cli import main as cli_main

RUNS = [
    ("ee:12", "natural", "ee12_natural.csv"),
    ("ee:12", "butcher", "ee12_butcher.csv"),
    ("classic:fehlberg54", "natural", "fehlberg54.csv"),
]


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out-dir", default="results")
    ap.add_argument("--tols", default="1e-4..1e-12")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    out = pathlib.Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for method, form, fname in RUNS:
        print(f"== {method} ({form}) ==")
        rc = cli_main(["experiment", "d2", "--method", method,
                       "--form", form, "--tols", args.tols,
                       "--seed", str(args.seed),
                       "--out", str(out / fname)])
        if rc != 0:
            return rc
    return 0


if __name__ == "__main__":
    sys.exit(main())
