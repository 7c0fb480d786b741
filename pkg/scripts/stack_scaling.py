#!/usr/bin/env python3
"""Token-based pipelined latency of one model over 1, 2 and 4 HBM stacks.

Also sweeps the sequence length, since the ring exchange stops shrinking
once every bank holds a single token.
"""
import argparse
import sys
from dataclasses import replace

from artemis_sim.config import RunConfig
from artemis_sim.runner import sweep
from artemis_sim.workloads import builtin


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--model", default="OPT-350")
    ap.add_argument("--seq-lens", type=int, nargs="*", default=[1024, 2048, 4096])
    ap.add_argument("--stacks", type=int, nargs="*", default=[1, 2, 4])
    args = ap.parse_args()

    base = builtin(args.model)
    print("seq_len  stacks  latency_us  speedup  of_linear")
    for n in args.seq_lens:
        cfg = RunConfig(model=replace(base, seq_len=n))
        for r in sweep(cfg, "stacks", args.stacks):
            ideal = r.stacks / args.stacks[0]
            print(f"{n:7d}  {r.stacks:6d}  {r.report.latency_ns / 1e3:10.1f}  {r.speedup:7.3f}  {r.speedup / ideal:9.3f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
