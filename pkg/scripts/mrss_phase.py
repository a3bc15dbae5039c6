#!/usr/bin/env python3
"""Success-rate surface of the fixed-cardinality multidimensional solver.

Empirical constant-hunting: the theory promises a constant success
probability once n is large enough, but never names the constant, so the
numbers here are recorded, not asserted. Group boosting can be switched on to
see the first-hit-among-disjoint-groups improvement.

Usage: python3 scripts/mrss_phase.py [d] [k] [out.csv]
"""

import sys

from subsetprune import SeedSpec, scan_mrss_phase
from subsetprune.harness import write_csv


def main() -> int:
    d = int(sys.argv[1]) if len(sys.argv) > 1 else 2
    k = int(sys.argv[2]) if len(sys.argv) > 2 else 3
    out = sys.argv[3] if len(sys.argv) > 3 else "mrss_phase.csv"
    rows = scan_mrss_phase(
        d=d,
        k=k,
        n_values=[k, 2 * k, 4 * k, 8 * k, 16 * k],
        epsilon=0.25,
        trials=200,
        seed=SeedSpec(20240801, 2),
        target_radius=1.0,
    )
    for row in rows:
        print(f"n={row['n']:>4}  rate={row['rate']:.3f}  "
              f"wilson=[{row['wilson_low']:.3f}, {row['wilson_high']:.3f}]")
    write_csv(out, rows)
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
