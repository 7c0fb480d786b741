"""Latency scheduling and energy accounting over an event timeline."""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field, replace
from typing import Optional

from .dataflow import Event, Timeline
from .hbm import HbmConfig
from .params import FS_PER_NS, EnergyParams, LatencyParams


class SchedulingError(ValueError):
    pass


class DomainError(ValueError):
    pass


ENERGY_CLASSES = ("array", "write", "s2b", "nsc", "latch", "transfer", "host_io")


def _op_latencies(lat: LatencyParams) -> dict[str, int]:
    return {
        "mac_batch": lat.t_mac_batch,
        "moc": lat.t_moc,
        "s2b": lat.t_s2b,
        "add": lat.t_adder,
        "lut": lat.t_lut,
        "cmp": lat.t_comparator,
        "b2tcu": lat.t_b2tcu,
        "hop": lat.t_latch_hop,
        "beat": lat.t_link_beat,
        "row": 0,
    }


def _stacks_touched(banks: tuple[int, int], hbm: HbmConfig) -> tuple[int, ...]:
    per = hbm.channels_per_stack * hbm.banks_per_channel
    return tuple(range(banks[0] // per, (banks[1] - 1) // per + 1))


def event_duration(e: Event, lat: LatencyParams, hbm: HbmConfig) -> int:
    table = _op_latencies(lat)
    total = 0
    for op, n in e.ops.items():
        if op == "bus_bits":
            rate = lat.host_bytes_per_s * len(_stacks_touched(e.banks, hbm))
            total += round(n / 8 / rate * 1e15)
        else:
            total += n * table[op]
    return total


def _unit(e: Event) -> int:
    """Latency of one pipeline chunk of ``e``."""
    n = e.grain or sum(v for k, v in e.ops.items() if k not in ("row", "bus_bits"))
    return e.duration // n if n else e.duration


def _place_group(members: list[Event], ready: int) -> None:
    """Pipeline-flow placement of a group's stages.

    A stage starts one chunk after its predecessor starts, once its resource
    is free, and cannot finish earlier than one of its own chunks after the
    predecessor finishes. The slowest stage therefore sets the pace.
    """
    free: dict[str, int] = {}
    prev: Optional[Event] = None
    for m in members:
        s = max(ready, free.get(m.resource, 0))
        if prev is not None:
            s = max(s, prev.start + _unit(prev), prev.end + _unit(m) - m.duration)
        m.start = s
        free[m.resource] = m.end
        prev = m


def _topo_order(tl: Timeline) -> list[int]:
    n = len(tl.events)
    indeg = [0] * n
    users: list[list[int]] = [[] for _ in range(n)]
    for e in tl.events:
        for d in e.deps:
            if not 0 <= d < n:
                raise SchedulingError(f"event {e.id} depends on unknown event {d}")
            indeg[e.id] += 1
            users[d].append(e.id)
    # group members are scheduled as one unit: merge their dependency edges
    heap = [i for i in range(n) if indeg[i] == 0]
    heapq.heapify(heap)
    out = []
    while heap:
        i = heapq.heappop(heap)
        out.append(i)
        for u in users[i]:
            indeg[u] -= 1
            if indeg[u] == 0:
                heapq.heappush(heap, u)
    if len(out) != n:
        raise SchedulingError("cyclic dependencies in timeline")
    return out


def _resource_keys(e: Event, hbm: HbmConfig) -> list[tuple]:
    if e.resource == "bus":
        return [("bus", s) for s in _stacks_touched(e.banks, hbm)]
    return [(e.resource, b) for b in range(e.banks[0], e.banks[1])]


def assign_latencies(tl: Timeline, lat: LatencyParams = LatencyParams(), hbm: HbmConfig = HbmConfig(),
                     pipelined: Optional[bool] = None) -> Timeline:
    """Return a copy of ``tl`` with start/duration set (femtoseconds).

    Non-pipelined runs execute every event back to back in dependency order.
    Pipelined runs list-schedule against dependencies and per-bank exclusive
    resources; a pipeline group starts once all its members' resources are
    free and its stages then overlap chunk by chunk. Bypassable landing
    writes take no time when pipelined.
    """
    pp = tl.pipelined if pipelined is None else pipelined
    order = _topo_order(tl)
    events = [replace(e) for e in tl.events]
    out = Timeline(events, {k: list(v) for k, v in tl.groups.items()}, pp, tl.mode, tl.macs, dict(tl.meta))
    dur = [event_duration(e, lat, hbm) for e in events]
    for e, d in zip(events, dur):
        e.duration = 0 if (pp and e.bypassable) else d

    if not pp:
        t = 0
        done = set()
        for i in order:
            e = events[i]
            if e.group is not None and i in done:
                continue
            members = tl.groups[e.group] if e.group is not None else [i]
            for m in members:
                events[m].start = t
                t += events[m].duration
                done.add(m)
        return out

    free: dict[tuple, int] = {}
    scheduled: set[int] = set()
    for i in order:
        if i in scheduled:
            continue
        e = events[i]
        members = tl.groups[e.group] if e.group is not None else [i]
        member_set = set(members)
        ready = 0
        for m in members:
            for d in events[m].deps:
                if d in member_set:
                    continue
                if d not in scheduled:
                    raise SchedulingError(f"group of event {i} depends on unscheduled event {d}")
                ready = max(ready, events[d].end)
            if events[m].duration:
                for k in _resource_keys(events[m], hbm):
                    ready = max(ready, free.get(k, 0))
        if len(members) == 1:
            e.start = ready
        else:
            _place_group([events[m] for m in members], ready)
        for m in members:
            em = events[m]
            if em.duration:
                for k in _resource_keys(em, hbm):
                    free[k] = max(free.get(k, 0), em.end)
            scheduled.add(m)
    return out


def total_latency_fs(tl: Timeline) -> int:
    return max((e.end for e in tl.events), default=0)


@dataclass
class CostReport:
    latency_ns: float
    energy_pj_by_class: dict[str, float]
    avg_power_w: float
    gops: float
    gops_per_w: float
    eliminated_write_pj: float
    saturation_count: int = 0
    macs: int = 0
    latency_fs: int = 0
    meta: dict = field(default_factory=dict)

    @property
    def energy_pj(self) -> float:
        return math.fsum(self.energy_pj_by_class.values())

    def as_dict(self) -> dict:
        return {
            "latency_ns": self.latency_ns,
            "energy_pj_by_class": dict(sorted(self.energy_pj_by_class.items())),
            "energy_pj": self.energy_pj,
            "avg_power_w": self.avg_power_w,
            "gops": self.gops,
            "gops_per_w": self.gops_per_w,
            "eliminated_write_pj": self.eliminated_write_pj,
            "saturation_count": self.saturation_count,
            "macs": self.macs,
            **({"meta": self.meta} if self.meta else {}),
        }


def event_energy(e: Event, en: EnergyParams, lat: LatencyParams) -> dict[str, float]:
    """Energy of one event summed over all its banks, split by class (pJ)."""
    n = e.n_banks
    out: dict[str, float] = {}

    def add(cls: str, pj: float) -> None:
        out[cls] = out.get(cls, 0.0) + pj * n

    comp = {
        "s2b": ("s2b", en.p_s2b, lat.t_s2b_circuit),
        "add": ("nsc", en.p_adder, lat.t_adder),
        "lut": ("nsc", en.p_lut, lat.t_lut),
        "cmp": ("nsc", en.p_comparator, lat.t_comparator),
        "b2tcu": ("nsc", en.p_b2tcu, lat.t_b2tcu),
        "hop": ("latch", en.p_latch, lat.t_latch_hop),
    }
    for op, cnt in e.ops.items():
        if op in comp:
            cls, p, t = comp[op]
            add(cls, cnt * e.units * en.component_pj(p, t))
        elif op == "mac_batch":
            # two operand copies (AAP) and one sense, issued bank-wide
            add("array", cnt * 3 * en.e_act)
    if e.kind == "ArrayWrite":
        if e.path == "datapath":
            pj = e.ops.get("row", 0) * en.e_act + e.bits * en.e_pre_gsa
            add("write", pj * (2 if e.bypassable else 1))
        else:
            add("array", e.ops.get("moc", 0) * en.e_act)
    elif e.kind == "RingBroadcastStep":
        add("transfer", e.bits * (en.e_pre_gsa + en.e_post_gsa))
    elif e.kind == "InterBankTransfer":
        if e.path == "host":
            add("host_io", e.bits * (en.e_pre_gsa + en.e_post_gsa + en.e_io))
        else:
            add("transfer", e.bits * (en.e_pre_gsa + en.e_post_gsa))
    return out


def assign_energies(tl: Timeline, en: EnergyParams = EnergyParams(), lat: LatencyParams = LatencyParams(),
                    saturation_count: int = 0) -> CostReport:
    by_class = {c: 0.0 for c in ENERGY_CLASSES}
    eliminated = 0.0
    for e in tl.events:
        parts = event_energy(e, en, lat)
        if tl.pipelined and e.bypassable:
            eliminated += math.fsum(parts.values())
            continue
        for c, v in parts.items():
            by_class[c] += v
    lat_fs = total_latency_fs(tl)
    energy = math.fsum(by_class.values())
    power = energy * 1e-12 / (lat_fs * 1e-15) if lat_fs else 0.0
    rep = CostReport(lat_fs / FS_PER_NS, by_class, power, 0.0, 0.0, eliminated,
                     saturation_count, tl.macs, lat_fs, dict(tl.meta))
    if lat_fs:
        rep.gops, rep.gops_per_w = efficiency(rep, tl.macs)
    return rep


@dataclass(frozen=True)
class PowerCheck:
    ok: bool
    avg_power_w: float
    budget_w: float

    @property
    def margin_w(self) -> float:
        """Positive when over budget."""
        return self.avg_power_w - self.budget_w


def power_check(report: CostReport, en: EnergyParams = EnergyParams()) -> PowerCheck:
    if report.latency_ns <= 0:
        return PowerCheck(True, 0.0, en.power_budget_w)
    p = report.energy_pj * 1e-12 / (report.latency_ns * 1e-9)
    return PowerCheck(p <= en.power_budget_w * (1 + 1e-12), p, en.power_budget_w)


def efficiency(report: CostReport, macs: int) -> tuple[float, float]:
    if report.latency_ns <= 0:
        raise DomainError("efficiency of a zero-latency run is undefined")
    gops = 2 * macs / report.latency_ns
    power = report.energy_pj * 1e-3 / report.latency_ns
    return gops, (gops / power if power > 0 else math.inf)


def simulate_timeline(tl: Timeline, lat: LatencyParams = LatencyParams(), en: EnergyParams = EnergyParams(),
                      hbm: HbmConfig = HbmConfig(), pipelined: Optional[bool] = None) -> tuple[Timeline, CostReport]:
    timed = assign_latencies(tl, lat, hbm, pipelined)
    return timed, assign_energies(timed, en, lat)
