"""Mapping of transformer operations onto banks and the resulting event timeline.

Events are replicated over a contiguous bank range: every bank in
``Event.banks`` performs the same work on its own token shard at the same
time. This keeps BERT- and OPT-sized timelines to a few thousand events while
the exclusivity checks still expand ranges to individual banks.
"""
from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .hbm import HbmConfig
from .momcap import ConfigError
from .workloads import Arch, ModelConfig, Op, decompose

KINDS = (
    "MacBatch",
    "AtoB",
    "NscReduce",
    "Softmax",
    "BtoTcu",
    "IntraBankLatchMove",
    "InterBankTransfer",
    "RingBroadcastStep",
    "ArrayWrite",
)

STOCH_BITS = 129  # 128-bit stream plus sign
BIN_BITS = 8


class Mode(enum.Enum):
    TOKEN = "token"
    LAYER = "layer"


@dataclass(frozen=True)
class ShardPlan:
    mode: Mode
    n_tokens: int
    n_banks: int
    tokens_per_bank: int
    ranges: tuple[tuple[int, int], ...]  # per bank of one group, [start, stop)
    group_size: int
    layer_groups: tuple[tuple[int, int], ...] = ()  # layer mode: bank range per layer

    @property
    def busy_banks(self) -> int:
        return sum(1 for a, b in self.ranges if b > a)

    def classes(self) -> list[tuple[int, int, int, int]]:
        """Runs of banks with equal shard size: (lo, hi, tokens, first_token)."""
        out: list[tuple[int, int, int, int]] = []
        for b, (s, e) in enumerate(self.ranges):
            n = e - s
            if n == 0:
                continue
            if out and out[-1][2] == n and out[-1][1] == b:
                lo, _, _, t0 = out[-1]
                out[-1] = (lo, b + 1, n, t0)
            else:
                out.append((b, b + 1, n, s))
        return out


def shard_tokens(n_tokens: int, n_banks: int, mode: Mode | str = Mode.TOKEN, layers: int = 1) -> ShardPlan:
    if n_tokens < 1 or n_banks < 1:
        raise ConfigError("need at least one token and one bank")
    mode = Mode(mode)
    if mode is Mode.TOKEN:
        group = n_banks
        groups: tuple[tuple[int, int], ...] = ()
    else:
        group = max(1, n_banks // max(layers, 1))
        groups = tuple(
            ((l * group) % n_banks, (l * group) % n_banks + group) for l in range(layers)
        )
    nb = math.ceil(n_tokens / group)
    ranges = tuple((min(b * nb, n_tokens), min((b + 1) * nb, n_tokens)) for b in range(group))
    return ShardPlan(mode, n_tokens, n_banks, nb, ranges, group, groups)


@dataclass(frozen=True)
class RingStep:
    step: int
    transfers: tuple[tuple[int, int, int], ...]  # (src bank, dst bank, shard origin)
    payload_bits: int


def ring_broadcast(n_banks: int, payload_bits: int) -> list[RingStep]:
    if n_banks < 1:
        raise ConfigError("ring needs at least one bank")
    steps = []
    for t in range(1, n_banks):
        steps.append(RingStep(t, tuple(
            (b, (b + 1) % n_banks, (b - t + 1) % n_banks) for b in range(n_banks)
        ), payload_bits))
    return steps


@dataclass
class Event:
    id: int
    kind: str
    resource: str
    banks: tuple[int, int]
    ops: dict[str, int]
    units: int = 1  # parallel hardware units per bank doing ops
    bits: int = 0  # payload per bank
    path: str = ""
    bypassable: bool = False
    deps: tuple[int, ...] = ()
    group: Optional[int] = None
    label: str = ""
    op: str = ""
    block: str = ""
    layer: int = -1
    step: int = 0
    tokens: tuple[int, int] = (0, 0)  # first token of bank ``banks[0]``, tokens per bank
    ring: tuple[int, int] = (0, 0)  # bank range of the ring this event belongs to
    grain: int = 0  # pipeline chunks; 0 means one per primitive op
    start: Optional[int] = None
    duration: Optional[int] = None

    @property
    def n_banks(self) -> int:
        return self.banks[1] - self.banks[0]

    @property
    def end(self) -> int:
        return (self.start or 0) + (self.duration or 0)

    def key(self) -> tuple:
        return (self.kind, self.resource, self.banks, tuple(sorted(self.ops.items())),
                self.units, self.bits, self.path, self.bypassable, self.label)


@dataclass
class Timeline:
    events: list[Event] = field(default_factory=list)
    groups: dict[int, list[int]] = field(default_factory=dict)
    pipelined: bool = True
    mode: Mode = Mode.TOKEN
    macs: int = 0
    meta: dict = field(default_factory=dict)

    def add(self, kind: str, resource: str, banks: tuple[int, int], ops: dict[str, int],
            deps: Iterable[int] = (), group: Optional[int] = None, **kw) -> int:
        if kind not in KINDS:
            raise ValueError(f"unknown event kind {kind}")
        e = Event(len(self.events), kind, resource, banks, dict(ops),
                  deps=tuple(sorted({d for d in deps if d is not None})), group=group, **kw)
        self.events.append(e)
        if group is not None:
            self.groups.setdefault(group, []).append(e.id)
        return e.id

    def new_group(self) -> int:
        g = len(self.groups)
        self.groups[g] = []
        return g

    def multiset(self) -> list[tuple]:
        return sorted(e.key() for e in self.events)

    def count(self, kind: str) -> int:
        return sum(1 for e in self.events if e.kind == kind)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["id", "kind", "label", "bank_lo", "bank_hi", "resource", "ops",
                    "bits", "start_ns", "duration_ns"])
        for e in self.events:
            ops = ";".join(f"{k}={v}" for k, v in sorted(e.ops.items()))
            start = "" if e.start is None else f"{e.start / 1e6:.6f}"
            dur = "" if e.duration is None else f"{e.duration / 1e6:.6f}"
            w.writerow([e.id, e.kind, e.label, e.banks[0], e.banks[1], e.resource, ops,
                        e.bits, start, dur])
        return buf.getvalue()


def _ceil(a: int, b: int) -> int:
    return -(-a // b)


class Planner:
    """Emits events for a model under one sharding plan.

    All emitted events are identical for pipelined and non-pipelined runs; the
    cost model decides which overlaps are admissible.
    """

    def __init__(self, model: ModelConfig, hbm: HbmConfig = HbmConfig(), momcap_capacity: int = 20,
                 mode: Mode | str = Mode.TOKEN, pipelined: bool = True):
        self.model = model
        self.hbm = hbm
        self.cap = momcap_capacity
        self.mode = Mode(mode)
        n_layers = model.layers * (2 if model.arch is Arch.ENCODER_DECODER else 1)
        self.shard = shard_tokens(model.seq_len, hbm.banks, self.mode, n_layers)
        self.tl = Timeline(pipelined=pipelined, mode=self.mode)
        self.tl.meta.update(model=model.name, banks=hbm.banks, mode=self.mode.value)
        self.A = hbm.active_subarrays
        self.T = hbm.tiles_per_subarray

    # -- primitives ---------------------------------------------------------
    def matmul(self, cls, label: str, inner: int, cols: int, heads: int, deps, op: Op | None = None,
               step: int = 0, rows: int | None = None, compare: bool = False, ring=(0, 0)) -> int:
        """One MatMul stage on every bank of ``cls``; returns the id of its last event."""
        lo, hi, ntok, t0 = cls
        rows = ntok if rows is None else rows
        macs = heads * rows * inner * cols
        self.tl.macs += macs * (hi - lo)
        A, T = self.A, self.T
        steps = _ceil(macs, A * 2 * T)
        rounds = 2 * _ceil(steps, 2 * self.cap)
        chain = T + A - 1
        g = self.tl.new_group()
        common = dict(group=g, label=label, op=op.name if op else label,
                      block=op.block if op else "", layer=op.layer if op else -1,
                      step=step, tokens=(t0, ntok), ring=ring)
        b = (lo, hi)
        self.tl.add("BtoTcu", "nsc", b, {"b2tcu": _ceil(heads * rows * inner, A)}, deps, units=A, **common)
        self.tl.add("ArrayWrite", "stage", b, {"moc": steps}, units=1, path="latch", **common)
        self.tl.add("MacBatch", "array", b, {"mac_batch": steps}, units=1, **common)
        self.tl.add("AtoB", "array", b, {"s2b": rounds}, units=A, **common)
        self.tl.add("IntraBankLatchMove", "latch", b, {"hop": rounds * chain}, units=A,
                    grain=rounds, **common)
        last = self.tl.add("NscReduce", "nsc", b, {"add": rounds * chain}, units=A,
                           grain=rounds, **common)
        if compare:
            last = self.tl.add("Softmax", "nsc", b, {"cmp": _ceil(heads * rows * cols, A)},
                               units=A, **common)
        return last

    def nsc_op(self, cls, kind: str, label: str, ops: dict[str, int], deps, op: Op | None = None) -> int:
        lo, hi, ntok, t0 = cls
        return self.tl.add(kind, "nsc", (lo, hi), ops, deps, units=self.A, label=label,
                           op=op.name if op else label, block=op.block if op else "",
                           layer=op.layer if op else -1, tokens=(t0, ntok))

    def datapath_write(self, banks, bits: int, label: str, deps, bypassable: bool) -> int:
        rows = _ceil(bits, self.hbm.subarray_row_bits)
        mocs = _ceil(rows, self.A)
        # a landing write is later read back: twice the array traffic
        if bypassable:
            mocs *= 2
        return self.tl.add("ArrayWrite", "array", banks, {"moc": mocs, "row": rows}, deps,
                           bits=bits, path="datapath", bypassable=bypassable, label=label)

    def host_transfer(self, banks, bits_per_bank: int, label: str, deps, path: str = "host") -> int:
        n = banks[1] - banks[0]
        return self.tl.add("InterBankTransfer", "bus", banks, {"bus_bits": bits_per_bank * n}, deps,
                           bits=bits_per_bank, path=path, label=label)

    def ring_exchange(self, ring_banks, shard_tokens_: int, width: int, label: str, deps) -> list[int]:
        """K-1 ring steps over ``ring_banks``; returns the arrival event id per step."""
        k = ring_banks[1] - ring_banks[0]
        bits = shard_tokens_ * width * BIN_BITS
        beats = _ceil(bits, self.hbm.interbank_link_bits)
        ids, prev = [], list(deps)
        for st in ring_broadcast(k, bits):
            tid = self.tl.add("RingBroadcastStep", "link", ring_banks, {"beat": beats}, prev,
                              bits=bits, path="ring", label=f"{label}.ring{st.step}", step=st.step,
                              ring=ring_banks)
            wid = self.datapath_write(ring_banks, bits, f"{label}.land{st.step}", [tid], True)
            ids.append(wid)
            prev = [tid]
        return ids

    # -- transformer blocks -------------------------------------------------
    def attention(self, ops: list[Op], x_dep: dict, kv_dep: dict, ring_banks, classes) -> dict:
        m = self.model
        d, h, hd = m.d_model, m.heads, m.head_dim
        byname = {o.name.split("_")[-1] if "_" in o.name and not o.name.endswith("norm") else o.name: o
                  for o in ops}
        q_op, k_op, v_op = byname["q"], byname["k"], byname["v"]
        sc_op, sm_op, sv_op, out_op = byname["scores"], byname["softmax"], byname["sv"], byname["out"]
        norm_op = next(o for o in ops if o.kind == "norm")
        k_ids, v_ids, q_ids, local_sc = {}, {}, {}, {}
        # K and V first so the ring exchange overlaps the Q projection
        for c in classes:
            k_ids[c] = self.matmul(c, f"{k_op.block}.L{k_op.layer}.{k_op.name}", d, d, 1, [kv_dep[c]], k_op)
            v_ids[c] = self.matmul(c, f"{v_op.block}.L{v_op.layer}.{v_op.name}", d, d, 1, [kv_dep[c]], v_op)
            q_ids[c] = self.matmul(c, f"{q_op.block}.L{q_op.layer}.{q_op.name}", d, d, 1, [x_dep[c]], q_op)
        tag = f"{sc_op.block}.L{sc_op.layer}.{sc_op.name}"
        shard = self.shard.tokens_per_bank
        score_ids = {c: [] for c in classes}
        for c in classes:
            score_ids[c].append(self.matmul(c, tag, hd, c[2], h, [q_ids[c], k_ids[c]], sc_op,
                                            compare=True, ring=ring_banks))
        k_arrivals = self.ring_exchange(ring_banks, shard, d, f"{tag}.K", list(k_ids.values()))
        for t, arr in enumerate(k_arrivals, start=1):
            for c in classes:
                score_ids[c].append(self.matmul(c, tag, hd, shard, h, [arr, q_ids[c]], sc_op, step=t,
                                                compare=True, ring=ring_banks))
        sm_ids = {}
        for c in classes:
            e = h * c[2] * m.seq_len
            per = _ceil(e, self.A)
            rows = _ceil(h * c[2], self.A)
            sm_ids[c] = self.nsc_op(c, "Softmax", f"{sm_op.block}.L{sm_op.layer}.{sm_op.name}",
                                    {"lut": 3 * per + rows, "add": 2 * per}, score_ids[c], sm_op)
        sv_tag = f"{sv_op.block}.L{sv_op.layer}.{sv_op.name}"
        v_arrivals = self.ring_exchange(ring_banks, shard, d, f"{sv_tag}.V", list(v_ids.values()))
        sv_ids = {c: [] for c in classes}
        for c in classes:
            sv_ids[c].append(self.matmul(c, sv_tag, c[2], hd, h, [sm_ids[c], v_ids[c]], sv_op,
                                         ring=ring_banks))
        for t, arr in enumerate(v_arrivals, start=1):
            for c in classes:
                sv_ids[c].append(self.matmul(c, sv_tag, shard, hd, h, [arr, sm_ids[c]], sv_op, step=t,
                                             ring=ring_banks))
        out = {}
        for c in classes:
            o = self.matmul(c, f"{out_op.block}.L{out_op.layer}.{out_op.name}", d, d, 1, sv_ids[c], out_op)
            per = _ceil(c[2] * d, self.A)
            out[c] = self.nsc_op(c, "NscReduce", f"{norm_op.block}.L{norm_op.layer}.{norm_op.name}",
                                 {"add": per, "lut": per}, [o], norm_op)
        return out

    def ffn(self, ops: list[Op], x_dep: dict, classes) -> dict:
        m = self.model
        f1 = next(o for o in ops if o.name == "ffn1")
        act = next(o for o in ops if o.kind == "activation")
        f2 = next(o for o in ops if o.name == "ffn2")
        nrm = next(o for o in ops if o.name == "ffn_norm")
        out = {}
        for c in classes:
            a = self.matmul(c, f"{f1.block}.L{f1.layer}.ffn1", m.d_model, m.d_ff, 1, [x_dep[c]], f1)
            per = _ceil(c[2] * m.d_ff, self.A)
            a = self.nsc_op(c, "NscReduce", f"{act.block}.L{act.layer}.{act.fn}", {"lut": per}, [a], act)
            a = self.matmul(c, f"{f2.block}.L{f2.layer}.ffn2", m.d_ff, m.d_model, 1, [a], f2)
            per = _ceil(c[2] * m.d_model, self.A)
            out[c] = self.nsc_op(c, "NscReduce", f"{nrm.block}.L{nrm.layer}.ffn_norm",
                                 {"add": per, "lut": per}, [a], nrm)
        return out

    # -- whole model ----------------------------------------------------------
    def _layer_list(self):
        graph = decompose(self.model)
        out = []
        for block in ("encoder", "decoder"):
            for l in range(self.model.layers):
                ops = graph.layer_ops(block, l)
                if ops:
                    out.append((block, l, ops))
        return out

    def _classes(self, offset: int):
        return [(lo + offset, hi + offset, n, t0) for lo, hi, n, t0 in self.shard.classes()]

    def _layer_weights(self, ops: list[Op]) -> int:
        return sum(o.inner * o.cols for o in ops if o.kind == "matmul" and o.heads == 1)

    def _run_layer(self, block, ops, x_dep, mem_dep, classes, ring_banks):
        if block == "encoder":
            att = [o for o in ops if o.kind != "matmul" or o.name in ("q", "k", "v", "scores", "sv", "out")]
            att = [o for o in att if o.name in ("q", "k", "v", "scores", "softmax", "sv", "out", "norm")]
            x = self.attention(att, x_dep, x_dep, ring_banks, classes)
        else:
            self_ops = [o for o in ops if o.name.startswith("self_")]
            cross_ops = [o for o in ops if o.name.startswith("cross_")]
            x = self.attention(self_ops, x_dep, x_dep, ring_banks, classes)
            x = self.attention(cross_ops, x, mem_dep, ring_banks, classes)
        ffn_ops = [o for o in ops if o.name in ("ffn1", "act", "ffn2", "ffn_norm")]
        return self.ffn(ffn_ops, x, classes)

    def plan(self) -> Timeline:
        m = self.model
        layers = self._layer_list()
        in_bits = m.d_model * BIN_BITS
        if self.mode is Mode.TOKEN:
            classes = self._classes(0)
            busy = (0, self.shard.busy_banks)
            ld = self.host_transfer(busy, self.shard.tokens_per_bank * in_bits, "input.load", [])
            ld = self.datapath_write(busy, self.shard.tokens_per_bank * in_bits, "input.store", [ld], True)
            x = {c: ld for c in classes}
            mem = None
            for block, l, ops in layers:
                if block == "decoder" and mem is None:
                    mem = x
                x = self._run_layer(block, ops, x, mem, classes, busy)
            self.host_transfer(busy, self.shard.tokens_per_bank * in_bits, "output.store", list(x.values()))
        else:
            prev_classes = None
            x = None
            mem = None
            enc_out = None
            for i, (block, l, ops) in enumerate(layers):
                lo, hi = self.shard.layer_groups[i]
                classes = self._classes(lo)
                grp = (lo, self.shard.busy_banks + lo)
                wbits = self._layer_weights(ops) * STOCH_BITS
                n = grp[1] - grp[0]
                wl = self.host_transfer(grp, _ceil(wbits, n), f"{block}.L{l}.weights.load", [])
                wl = self.datapath_write(grp, _ceil(wbits, n), f"{block}.L{l}.weights.store", [wl], False)
                src = [] if x is None else list(x.values())
                path = "host" if x is None else "bus"
                label = "input.load" if x is None else f"{block}.L{l}.act.load"
                tr = self.host_transfer(grp, self.shard.tokens_per_bank * in_bits, label, src, path)
                tr = self.datapath_write(grp, self.shard.tokens_per_bank * in_bits,
                                         f"{block}.L{l}.act.store", [tr, wl], True)
                xin = {c: tr for c in classes}
                if block == "decoder":
                    if enc_out is None:
                        enc_out = x
                    mtr = self.host_transfer(grp, self.shard.tokens_per_bank * in_bits,
                                             f"{block}.L{l}.mem.load", list(enc_out.values()), "bus")
                    mtr = self.datapath_write(grp, self.shard.tokens_per_bank * in_bits,
                                              f"{block}.L{l}.mem.store", [mtr, wl], True)
                    mem = {c: mtr for c in classes}
                x = self._run_layer(block, ops, xin, mem, classes, grp)
                prev_classes = classes
            self.host_transfer((prev_classes[0][0], prev_classes[-1][1]),
                               self.shard.tokens_per_bank * in_bits, "output.store",
                               list(x.values()))
        return self.tl


def plan_model(model: ModelConfig, hbm: HbmConfig = HbmConfig(), mode: Mode | str = Mode.TOKEN,
               pipelined: bool = True, momcap_capacity: int = 20) -> Timeline:
    return Planner(model, hbm, momcap_capacity, mode, pipelined).plan()


def _single_layer(model: ModelConfig) -> ModelConfig:
    from dataclasses import replace
    return replace(model, layers=1, arch=Arch.ENCODER_ONLY)


def plan_mha(model: ModelConfig, shard: ShardPlan, pipelined: bool = True,
             hbm: HbmConfig | None = None, momcap_capacity: int = 20) -> Timeline:
    """Events of the first encoder MHA layer under ``shard``."""
    hbm = hbm or _hbm_with_banks(shard.n_banks)
    p = Planner(_single_layer(model), hbm, momcap_capacity, shard.mode, pipelined)
    p.shard = shard
    classes = p._classes(0)
    busy = (0, shard.busy_banks)
    ops = [o for o in decompose(p.model).layer_ops("encoder", 0) if o.name in
           ("q", "k", "v", "scores", "softmax", "sv", "out", "norm")]
    x = {c: None for c in classes}
    p.attention(ops, x, x, busy, classes)
    return p.tl


def plan_ffn(model: ModelConfig, shard: ShardPlan, pipelined: bool = True,
             hbm: HbmConfig | None = None, momcap_capacity: int = 20) -> Timeline:
    hbm = hbm or _hbm_with_banks(shard.n_banks)
    p = Planner(_single_layer(model), hbm, momcap_capacity, shard.mode, pipelined)
    p.shard = shard
    classes = p._classes(0)
    ops = [o for o in decompose(p.model).layer_ops("encoder", 0)
           if o.name in ("ffn1", "act", "ffn2", "ffn_norm")]
    x = {c: None for c in classes}
    p.ffn(ops, x, classes)
    return p.tl


def _hbm_with_banks(k: int) -> HbmConfig:
    return HbmConfig(stacks=1, channels_per_stack=k, banks_per_channel=1)


# -- intra-bank vector product ------------------------------------------------

@dataclass(frozen=True)
class VectorSchedule:
    length: int
    tiles: int = 2  # operational tiles used per active subarray
    active_subarrays: int = 1
    capacity: int = 20  # per MOMCAP
    negative_products: bool = False


def intra_bank_reduce(s: VectorSchedule, tl: Timeline | None = None, deps=()) -> Timeline:
    """Fine-grained events for one vector product inside one bank.

    Products are dealt to tiles in blocks of ``2*capacity``; within a tile the
    first ``capacity`` products charge its own MOMCAP and the rest charge the
    partner subarray's MOMCAP. Each accumulation round ends with an A_to_B,
    latch moves into the NSCs, per-subarray adds, then forwarding down the
    NSC chain. The negative pass repeats this and is subtracted at the head.
    """
    tl = tl or Timeline(pipelined=False)
    per_round = 2 * s.capacity * s.tiles * s.active_subarrays
    passes = 2 if s.negative_products else 1
    prev = list(deps)
    for p in range(passes):
        remaining = s.length
        group = 0
        while remaining > 0:
            n = min(remaining, per_round)
            remaining -= n
            per_tile = [min(2 * s.capacity, max(0, n - i * 2 * s.capacity))
                        for i in range(s.tiles * s.active_subarrays)]
            used = [x for x in per_tile if x > 0]
            steps = max(_ceil(x, 2) for x in used)
            # MOMCAP values: own (first half of a tile's block) and partner (second half)
            own = [min(x, s.capacity) for x in used]
            partner = [max(0, x - s.capacity) for x in used]
            nsc_vals = []  # values per NSC, own and partner subarrays alternate
            for sa in range(s.active_subarrays):
                tiles_here = range(sa * s.tiles, min((sa + 1) * s.tiles, len(used)))
                o = [i for i in tiles_here if own[i] > 0]
                q = [i for i in tiles_here if partner[i] > 0]
                nsc_vals.append((len(o), (max(o) - sa * s.tiles + 1) if o else 0))
                nsc_vals.append((len(q), (max(q) - sa * s.tiles + 1) if q else 0))
            live = [(v, h) for v, h in nsc_vals if v > 0]
            e = tl.add("MacBatch", "array", (0, 1), {"mac_batch": steps}, prev, label=f"pass{p}.mac")
            e = tl.add("AtoB", "array", (0, 1), {"s2b": 1}, [e], label=f"pass{p}.atob")
            hops = max(h for _, h in live)
            e = tl.add("IntraBankLatchMove", "latch", (0, 1), {"hop": hops}, [e], label=f"pass{p}.latch")
            adds = max(v - 1 for v, _ in live)
            if adds:
                e = tl.add("NscReduce", "nsc", (0, 1), {"add": adds}, [e], label=f"pass{p}.reduce")
            if len(live) > 1:
                fwd = len(live) - 1
                e = tl.add("IntraBankLatchMove", "latch", (0, 1), {"hop": fwd}, [e], label=f"pass{p}.chain")
                e = tl.add("NscReduce", "nsc", (0, 1), {"add": fwd}, [e], label=f"pass{p}.chain_add")
            if group:
                # fold into the running sum of earlier accumulation groups
                e = tl.add("NscReduce", "nsc", (0, 1), {"add": 1}, [e], label=f"pass{p}.accumulate")
            group += 1
            prev = [e]
    if passes == 2:
        tl.add("NscReduce", "nsc", (0, 1), {"add": 1}, prev, label="sign.subtract")
    return tl
