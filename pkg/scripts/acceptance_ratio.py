"""Acceptance ratio N/M of deterministic AR against C/L as the net grows.

    python3 scripts/acceptance_ratio.py [--m-range 8..16]
"""

import argparse

from qmcar import densities, samplers
from qmcar.cli import parse_m_range


def main() -> None:
    ap = argparse.ArgumentParser(description="DAR acceptance ratio convergence")
    ap.add_argument("--m-range", type=parse_m_range, default=tuple(range(8, 17)))
    args = ap.parse_args()
    ex1 = densities.example1_density()
    ex2, _ = densities.example2_density_and_proposal()
    print(f"{'m':>3} {'ex1 N/M':>10} {'|err|':>9} {'ex2 N/M':>10} {'|err|':>9}")
    for m in args.m_range:
        a = samplers.dar_cube(ex1, 0, m=m)
        b = samplers.dar_real(ex2, 0, m=m)
        ra, rb = a.N / a.M, b.N / b.M
        ea = abs(ra - ex1.total_mass / ex1.bound_L)
        eb = abs(rb - ex2.total_mass / ex2.bound_L)
        print(f"{m:>3} {ra:>10.6f} {ea:>9.2e} {rb:>10.6f} {eb:>9.2e}")


if __name__ == "__main__":
    main()
