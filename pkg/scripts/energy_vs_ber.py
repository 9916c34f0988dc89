#!/usr/bin/env python3
"""Transfer energy vs bit error rate for short and long segments.

Sweeps the model over a log BER grid at the default five-hop scenario and
optionally adds Monte Carlo estimates next to the model rows. CSV to
stdout; plot total_joules against value per mss_bytes to see the curves
cross.

    python scripts/energy_vs_ber.py > ber_sweep.csv
    python scripts/energy_vs_ber.py --simulate --reps 500 > both.csv
"""

import argparse
import csv
import sys

from lln_energy.config import RunConfig
from lln_energy.explorer import SweepSpec, sweep
from lln_energy.simulator import SimConfig, simulate


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--points", type=int, default=25)
    ap.add_argument("--ber-min", type=float, default=1e-6)
    ap.add_argument("--ber-max", type=float, default=1e-3)
    ap.add_argument("--retries", type=int, default=3)
    ap.add_argument("--simulate", action="store_true",
                    help="add Monte Carlo rows (source=sim)")
    ap.add_argument("--reps", type=int, default=300)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()

    cfg = RunConfig(retries=args.retries)
    n = args.points
    grid = tuple(
        args.ber_min * (args.ber_max / args.ber_min) ** (i / (n - 1))
        for i in range(n)
    )
    rows = []
    for row in sweep(SweepSpec(scenario=cfg.scenario(), axis="ber", grid=grid,
                               energy=cfg.energy())):
        row["source"] = "model"
        rows.append(row)
        if args.simulate:
            sim_cfg = RunConfig(
                ber=row["value"], retries=args.retries, mss_bytes=row["mss_bytes"]
            )
            rep = simulate(SimConfig(
                scenario=sim_cfg.scenario(), energy=cfg.energy(),
                replications=args.reps, master_seed=args.seed, round_cap=10**15,
            ))
            rows.append({
                "source": "sim", "axis": "ber", "value": row["value"],
                "mss_bytes": row["mss_bytes"],
                "total_bits": rep.mean_total_bits,
                "total_joules": rep.mean_total_joules,
                "stderr_total_bits": rep.stderr_total_bits,
                "flags": ";".join(rep.flags),
            })

    fields = ["source", "axis", "value", "mss_bytes", "total_bits",
              "total_joules", "stderr_total_bits", "p_s", "m", "flags"]
    w = csv.DictWriter(sys.stdout, fieldnames=fields, extrasaction="ignore",
                       restval="")
    w.writeheader()
    for row in rows:
        w.writerow({k: ("" if v is None else v) for k, v in row.items()})


if __name__ == "__main__":
    main()
