"""Measured DAR discrepancy on example 1 against the explicit upper bound.

The bound 8 L s 2^(t/s) (2p - q) M^(-1/s) / C needs the covering counts
(p, q) of the acceptance region, which must be supplied by hand.  The
script prints the delta-cover upper bound next to the theoretical one and
the two fitted exponents.

    python3 scripts/bound_comparison.py --p 2 --q 1 --m-range 9..14
"""

import argparse

from qmcar import densities, discrepancy, nets, samplers
from qmcar.cli import parse_m_range


def main() -> None:
    ap = argparse.ArgumentParser(description="DAR discrepancy versus the explicit bound")
    ap.add_argument("--p", type=int, default=1)
    ap.add_argument("--q", type=int, default=1)
    ap.add_argument("--m-range", type=parse_m_range, default=tuple(range(9, 15)))
    ap.add_argument("--grid", type=int, default=5)
    args = ap.parse_args()

    target = densities.example1_density()
    s = target.dimension + 1
    top = args.m_range[-1]
    t = nets.audit_t_value(nets.sobol_integer_points(min(top, 12), s), min(top, 12), s)
    params = densities.BoundParameters(args.p, args.q, t, target.bound_L, target.total_mass)
    print(f"audited t = {t} (s = {s}, m = {min(top, 12)})")
    print(f"{'m':>3} {'N':>7} {'upper':>10} {'bound':>10}")
    measured, theory = [], []
    for m in args.m_range:
        sample = samplers.dar_cube(target, 0, m=m)
        rep = discrepancy.star_discrepancy_delta_cover(sample.points, target, args.grid)
        b = params.upper_bound(s, sample.M)
        print(f"{m:>3} {sample.N:>7} {rep.upper_bound:>10.5f} {b:>10.5f}")
        measured.append((sample.N, rep.lower_bound))
        theory.append((sample.N, b))
    if len(measured) >= 3:
        print(f"fitted slope (grid max): {discrepancy.fit_rate(measured).slope:.3f}")
        print(f"bound slope:             {discrepancy.fit_rate(theory).slope:.3f}")


if __name__ == "__main__":
    main()
