#!/usr/bin/env python3
"""Latency, energy and power of the four dataflow points for every builtin model.

Writes one CSV (default ``dataflow_sweep.csv``) and prints a table. Speedups
and energy reductions are relative to layer_NP of the same model.
"""
import argparse
import csv
import sys

from artemis_sim.config import RunConfig
from artemis_sim.runner import DATAFLOW_POINTS, sweep
from artemis_sim.workloads import BUILTIN, builtin


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="dataflow_sweep.csv")
    ap.add_argument("--models", nargs="*", default=list(BUILTIN))
    args = ap.parse_args()

    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["model", "point", "latency_us", "energy_uj", "avg_power_w", "speedup", "energy_reduction"])
        for name in args.models:
            for r in sweep(RunConfig(model=builtin(name)), "dataflow", DATAFLOW_POINTS):
                row = [name, r.point, r.report.latency_ns / 1e3, r.report.energy_pj / 1e6,
                       r.report.avg_power_w, r.speedup, r.energy_ratio]
                w.writerow(row)
                print(f"{name:18s} {r.point:9s} {row[2]:12.1f} us {row[3]:10.1f} uJ "
                      f"{row[4]:6.2f} W  x{row[5]:6.2f}  E/{row[6]:5.2f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
