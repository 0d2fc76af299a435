#!/usr/bin/env python3
"""Generate plot-ready bouquet data: one stem, several drifted branches,
and the fragmentation-time table, all as CSV.

Feed the output to any plotting tool; branches overlay the stem exactly
up to their fragmentation times and mirror it across the drift lines
afterwards.

Usage:
    python scripts/bouquet_demo.py --out bouquet_data --seed 42
"""

import argparse
import sys

from germsim.cli import main as cli_main


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="bouquet_data")
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--steps", type=int, default=5_000)
    ap.add_argument("--horizon", type=float, default=10.0)
    ap.add_argument("--thetas", default="0.5,1.0,2.0,4.0")
    args = ap.parse_args()
    return cli_main([
        "bouquet",
        "--seed", str(args.seed),
        "--paths", "1",
        "--steps", str(args.steps),
        "--horizon", str(args.horizon),
        "--thetas", args.thetas,
        "--out", args.out,
    ])


if __name__ == "__main__":
    sys.exit(main())
