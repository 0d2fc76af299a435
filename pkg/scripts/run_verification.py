#!/usr/bin/env python3
"""Run the full verification suite and write the JSON report.

Exit status 0 iff every check passes.  Equivalent to `germsim verify`,
kept as a script for experiment workflows.

Usage:
    python scripts/run_verification.py --seed 0 --out report.json
"""

import argparse
import sys
from pathlib import Path

from germsim.stats import reports_to_json
from germsim.verify import VerifyConfig, format_report_lines, run_verification


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--alpha", type=float, default=0.001)
    ap.add_argument("--scale", type=float, default=1.0)
    ap.add_argument("--out", default=None, help="report path (default: stdout)")
    args = ap.parse_args()

    reports = run_verification(VerifyConfig(seed=args.seed, alpha=args.alpha,
                                            scale=args.scale))
    text = reports_to_json(reports)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    for line in format_report_lines(reports):
        print(line, file=sys.stderr)
    return 0 if all(r.passed for r in reports) else 1


if __name__ == "__main__":
    sys.exit(main())
