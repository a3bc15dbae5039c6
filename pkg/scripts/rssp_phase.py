#!/usr/bin/env python3
"""Sweep the 1-D cover success rate over the ensemble size.

Each trial draws max(n) uniforms once and reuses prefixes, so the success
indicator is monotone in n trial by trial and the curve is a clean phase
picture. Writes a CSV next to printing the rates.

Usage: python3 scripts/rssp_phase.py [epsilon] [out.csv]
"""

import sys

from subsetprune import SeedSpec, scan_rssp_phase
from subsetprune.harness import write_csv


def main() -> int:
    epsilon = float(sys.argv[1]) if len(sys.argv) > 1 else 0.05
    out = sys.argv[2] if len(sys.argv) > 2 else "rssp_phase.csv"
    rows = scan_rssp_phase(
        epsilon=epsilon,
        n_values=[5, 10, 15, 20, 25, 30, 40, 50, 60],
        grid_size=41,
        trials=200,
        seed=SeedSpec(20240801, 1),
    )
    for row in rows:
        print(f"n={row['n']:>3}  rate={row['rate']:.3f}  "
              f"wilson=[{row['wilson_low']:.3f}, {row['wilson_high']:.3f}]")
    write_csv(out, rows)
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
