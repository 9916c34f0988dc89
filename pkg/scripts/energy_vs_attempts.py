#!/usr/bin/env python3
"""Transfer energy vs link-layer attempt limit at a fixed (high) BER.

More attempts suppress end-to-end retransmissions, which matters most for
fragmented (long-MSS) transfers; past a few attempts the extra link-layer
retries stop paying for themselves.

    python scripts/energy_vs_attempts.py --ber 5e-4 > r_sweep.csv
"""

import argparse
import csv
import sys

from lln_energy.config import RunConfig
from lln_energy.explorer import SweepSpec, sweep


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--ber", type=float, default=5e-4)
    ap.add_argument("--r-min", type=int, default=1)
    ap.add_argument("--r-max", type=int, default=7)
    args = ap.parse_args()

    cfg = RunConfig(ber=args.ber)
    rows = sweep(SweepSpec(
        scenario=cfg.scenario(), axis="r",
        grid=tuple(range(args.r_min, args.r_max + 1)),
        energy=cfg.energy(),
    ))
    fields = ["axis", "value", "mss_bytes", "total_bits", "total_joules",
              "p_s", "m", "flags"]
    w = csv.DictWriter(sys.stdout, fieldnames=fields, extrasaction="ignore",
                       restval="")
    w.writeheader()
    for row in rows:
        w.writerow({k: ("" if v is None else v) for k, v in row.items()})


if __name__ == "__main__":
    main()
