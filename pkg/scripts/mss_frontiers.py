#!/usr/bin/env python3
"""Crossover-BER frontier curves: where short MSS starts beating long MSS.

Emits one curve per attempt-limit value (alpha = 0) and, with
--family alpha, one per redundancy ratio (at a single attempt, where FEC
is the only protection). Above a curve prefer the short MSS, below it the
long one.

    python scripts/mss_frontiers.py > frontier_r.csv
    python scripts/mss_frontiers.py --family alpha > frontier_alpha.csv
"""

import argparse
import csv
import sys

from lln_energy.config import RunConfig
from lln_energy.explorer import frontier


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--family", choices=("r", "alpha"), default="r")
    ap.add_argument("--h-max", type=int, default=9)
    args = ap.parse_args()

    if args.family == "r":
        cfg = RunConfig()
        values = [1, 2, 3, 4, 5, 7]
    else:
        cfg = RunConfig(retries=1, fragments="fit")
        values = [1e-3, 1e-2, 1e-1]

    points = frontier(cfg.scenario(), args.family, values,
                      range(1, args.h_max + 1), energy=cfg.energy())
    w = csv.DictWriter(sys.stdout, fieldnames=[
        "family", "family_value", "h", "crossover_ber", "ber_lo", "ber_hi",
        "flags",
    ])
    w.writeheader()
    for p in points:
        w.writerow({k: ("" if v is None else v) for k, v in p.to_record().items()})


if __name__ == "__main__":
    main()
