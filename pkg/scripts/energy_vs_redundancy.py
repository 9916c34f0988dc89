#!/usr/bin/env python3
"""Transfer energy vs FEC redundancy ratio (MTU-fitting fragment mode).

Below the sweet spot extra redundancy slashes loss-driven retransmission;
above it the redundancy overhead itself dominates. Fragment counts follow
the MTU stairstep, hence the jumps.

    python scripts/energy_vs_redundancy.py --retries 1 > alpha_sweep.csv
"""

import argparse
import csv
import sys

import numpy as np

from lln_energy.config import RunConfig
from lln_energy.explorer import SweepSpec, sweep


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--ber", type=float, default=3e-4)
    ap.add_argument("--retries", type=int, default=1)
    ap.add_argument("--alpha-min", type=float, default=1e-3)
    ap.add_argument("--alpha-max", type=float, default=1.0)
    ap.add_argument("--points", type=int, default=40)
    args = ap.parse_args()

    cfg = RunConfig(ber=args.ber, retries=args.retries, fragments="fit")
    grid = tuple(np.geomspace(args.alpha_min, args.alpha_max, args.points))
    rows = sweep(SweepSpec(scenario=cfg.scenario(), axis="alpha", grid=grid,
                           energy=cfg.energy()))
    fields = ["axis", "value", "mss_bytes", "m", "d_data_bits", "c_data_bits",
              "total_bits", "total_joules", "p_s", "flags"]
    w = csv.DictWriter(sys.stdout, fieldnames=fields, extrasaction="ignore",
                       restval="")
    w.writeheader()
    for row in rows:
        w.writerow({k: ("" if v is None else v) for k, v in row.items()})


if __name__ == "__main__":
    main()
