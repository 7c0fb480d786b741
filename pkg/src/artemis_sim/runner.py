"""Simulation and sweep drivers shared by the CLI and the experiment scripts."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, replace

from .config import RunConfig, RunConfigError
from .cost import CostReport, power_check, simulate_timeline
from .dataflow import Mode, Timeline, plan_model

SWEEP_AXES = ("dataflow", "stacks", "seq_len")
DATAFLOW_POINTS = ("layer_NP", "layer_PP", "token_NP", "token_PP")


def simulate(cfg: RunConfig) -> tuple[Timeline, CostReport]:
    tl = plan_model(cfg.model, cfg.hbm, cfg.mode, cfg.pipelined, cfg.momcap.capacity)
    return simulate_timeline(tl, cfg.latency, cfg.energy, cfg.hbm)


def report_json(cfg: RunConfig, report: CostReport) -> str:
    pc = power_check(report, cfg.energy)
    doc = {
        "config": cfg.describe(),
        "report": report.as_dict(),
        "power_check": {"ok": pc.ok, "avg_power_w": pc.avg_power_w, "budget_w": pc.budget_w,
                        "margin_w": pc.margin_w},
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _point_config(cfg: RunConfig, axis: str, value) -> tuple[str, RunConfig]:
    if axis == "dataflow":
        if value not in DATAFLOW_POINTS:
            raise RunConfigError("BAD_VALUE", f"dataflow point {value!r} not in {DATAFLOW_POINTS}", "sweep.values")
        mode, pp = value.split("_")
        return value, replace(cfg, mode=Mode(mode), pipelined=pp == "PP")
    if axis == "stacks":
        return f"stacks={int(value)}", replace(cfg, hbm=replace(cfg.hbm, stacks=int(value)))
    if axis == "seq_len":
        return f"seq_len={int(value)}", replace(cfg, model=replace(cfg.model, seq_len=int(value)))
    raise RunConfigError("BAD_VALUE", f"unknown sweep axis {axis!r}; choose from {SWEEP_AXES}", "sweep.axis")


@dataclass(frozen=True)
class SweepRow:
    point: str
    mode: str
    pipelined: bool
    stacks: int
    seq_len: int
    report: CostReport
    speedup: float = 1.0
    energy_ratio: float = 1.0


def sweep(cfg: RunConfig, axis: str, values) -> list[SweepRow]:
    """One row per point; speedups are relative to layer_NP for the dataflow
    axis and to the first point otherwise."""
    values = list(values)
    if not values:
        raise RunConfigError("EMPTY_AXIS", f"sweep axis {axis!r} has no values", "sweep.values")
    rows = []
    for v in values:
        name, pc = _point_config(cfg, axis, v)
        _, rep = simulate(pc)
        rows.append(SweepRow(name, pc.mode.value, pc.pipelined, pc.hbm.stacks, pc.model.seq_len, rep))
    if axis == "dataflow" and "layer_NP" in values:
        base = rows[values.index("layer_NP")].report
    elif axis == "dataflow":
        _, base = simulate(_point_config(cfg, axis, "layer_NP")[1])
    else:
        base = rows[0].report
    return [replace(r, speedup=base.latency_ns / r.report.latency_ns,
                    energy_ratio=base.energy_pj / r.report.energy_pj) for r in rows]


def sweep_csv(rows: list[SweepRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["point", "mode", "pipelined", "stacks", "seq_len", "latency_ns", "energy_pj",
                "avg_power_w", "gops_per_w", "speedup", "energy_reduction"])
    for r in rows:
        w.writerow([r.point, r.mode, int(r.pipelined), r.stacks, r.seq_len, repr(r.report.latency_ns),
                    repr(r.report.energy_pj), repr(r.report.avg_power_w), repr(r.report.gops_per_w),
                    repr(r.speedup), repr(r.energy_ratio)])
    return buf.getvalue()
