"""Run every experiment with default settings and write results/ with plot data.

    python3 scripts/run_all.py [--out-dir results] [--trials 2000]
"""

import argparse
import sys
from pathlib import Path

from qmcar import cli


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out-dir", type=Path, default=Path("results"))
    ap.add_argument("--trials", type=int, default=2000, help="isotropic trials per net-audit row")
    args = ap.parse_args()
    worst = 0
    for name in ("example1", "example2", "example3", "net-audit"):
        out = args.out_dir / f"{name}.csv"
        extra = ["--trials", str(args.trials)] if name == "net-audit" else []
        rc = cli.main([name, "--out", str(out), "--plot-data", *extra])
        print(f"{name}: exit {rc}")
        print((args.out_dir / f"{name}.csv.slopes.txt").read_text())
        worst = max(worst, rc)
    return worst


if __name__ == "__main__":
    sys.exit(main())
