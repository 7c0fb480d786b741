"""Numeric execution through the stochastic multiply, MOMCAP and NSC path.

Real-valued tensors are normalized per tensor (scale ``max|x| * 128/127``) and
quantized to sign-magnitude 8-bit values. A MatMul then:

1. multiplies every operand pair with the bit-exact AND-popcount rule,
2. charges products onto MOMCAPs in index order, ``capacity`` products per
   capacitor, positive- and negative-sign products in separate passes,
3. reads each used capacitor out through the 128-level A_to_B,
4. adds the readouts in the NSC adder and subtracts the negative pass.

Each output element depends only on its own row and column, so the bank a
token is mapped to cannot change its value.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

from . import sc
from .dataflow import Mode, Timeline, ring_broadcast, shard_tokens
from .momcap import MomcapConfig
from .nsc import NscUnit


@lru_cache(maxsize=1)
def popcount_table() -> np.ndarray:
    t = np.zeros((sc.WORD_BITS, sc.WORD_BITS), dtype=np.int64)
    for a in range(sc.WORD_BITS):
        for b in range(sc.WORD_BITS):
            t[a, b] = sc.product_popcount(a, b)
    t.setflags(write=False)
    return t


def tensor_scale(x: np.ndarray) -> float:
    m = float(np.max(np.abs(x))) if x.size else 0.0
    return m * sc.WORD_BITS / sc.MAX_MAG if m > 0 else 1.0


def quantize_tensor(x: np.ndarray, scale: Optional[float] = None) -> tuple[np.ndarray, float]:
    """Signed integer magnitudes in [-127, 127] and the scale they refer to."""
    s = tensor_scale(x) if scale is None else scale
    r = np.asarray(x, dtype=float) / s * sc.WORD_BITS
    q = np.sign(r) * np.floor(np.abs(r) + 0.5)
    return np.clip(q, -sc.MAX_MAG, sc.MAX_MAG).astype(np.int64), s


@dataclass
class ExecStats:
    saturations: int = 0
    momcap_reads: int = 0
    matmuls: int = 0


@dataclass
class FunctionalEngine:
    momcap: MomcapConfig = field(default_factory=MomcapConfig)
    nsc: NscUnit = field(default_factory=NscUnit)
    rng: Optional[np.random.Generator] = None
    stats: ExecStats = field(default_factory=ExecStats)

    def _readout(self, level: np.ndarray, used: np.ndarray) -> np.ndarray:
        cfg = self.momcap
        lv = level.astype(float)
        if cfg.noise_mae > 0:
            if self.rng is None:
                raise ValueError("noise injection needs a seeded generator")
            sigma = cfg.noise_mae * math.sqrt(math.pi / 2) * cfg.full_scale
            lv = lv + self.rng.normal(0.0, sigma, size=lv.shape)
        top = cfg.readout_levels - 1
        code = np.clip(np.floor(lv * top / cfg.full_scale + 0.5), 0, top).astype(np.int64)
        self.stats.momcap_reads += int(used.sum())
        return np.where(used, code, 0)

    def _saturating_sum(self, terms: list[np.ndarray], shape) -> np.ndarray:
        w = self.nsc.adder_width
        hi, lo = (1 << (w - 1)) - 1, -(1 << (w - 1))
        acc = np.zeros(shape, dtype=np.int64)
        for t in terms:
            acc = acc + t
            over = (acc > hi) | (acc < lo)
            self.stats.saturations += int(over.sum())
            acc = np.clip(acc, lo, hi)
        return acc

    def matmul_q(self, qa: np.ndarray, qb: np.ndarray) -> np.ndarray:
        """Product of integer-magnitude operands, in units of (1/128)**2."""
        if qa.shape[1] != qb.shape[0]:
            raise ValueError(f"inner dimensions differ: {qa.shape} x {qb.shape}")
        pop = popcount_table()
        pc = pop[np.abs(qa)[:, :, None], np.abs(qb)[None, :, :]]
        neg = (qa < 0)[:, :, None] ^ (qb < 0)[None, :, :]
        cap = self.momcap.capacity
        lsb = self.nsc.lsb
        scale = cap / (self.momcap.readout_levels - 1)
        raws = {}
        for sign, mask in ((1, ~neg), (-1, neg)):
            slot = np.cumsum(mask, axis=1) - 1
            chunks = -(-qa.shape[1] // cap)
            terms = []
            for ch in range(chunks):
                sel = mask & (slot // cap == ch)
                used = sel.any(axis=1)
                level = np.where(sel, pc, 0).sum(axis=1)
                code = self._readout(level, used)
                terms.append(np.floor(code * scale / lsb + 0.5).astype(np.int64))
            raws[sign] = self._saturating_sum(terms, (qa.shape[0], qb.shape[1]))
        out = self._saturating_sum([raws[1], -raws[-1]], raws[1].shape)
        self.stats.matmuls += 1
        return out * lsb  # product units: sum of (ma/128)(mb/128)

    def matmul(self, a: np.ndarray, b: np.ndarray, sa: Optional[float] = None,
               sb: Optional[float] = None) -> np.ndarray:
        qa, sa = quantize_tensor(a, sa)
        qb, sb = quantize_tensor(b, sb)
        return self.matmul_q(qa, qb) * sa * sb

    def softmax_rows(self, y: np.ndarray) -> np.ndarray:
        return np.array([self.nsc.softmax(list(row)) for row in y], dtype=float)

    def activation(self, x: np.ndarray, kind: str) -> np.ndarray:
        f = np.vectorize(lambda v: self.nsc.activation(float(v), kind), otypes=[float])
        return f(x)


def sc_matmul(a: np.ndarray, b: np.ndarray, momcap: MomcapConfig = MomcapConfig(),
              rng: Optional[np.random.Generator] = None) -> np.ndarray:
    return FunctionalEngine(momcap, rng=rng).matmul(np.asarray(a, float), np.asarray(b, float))


def sc_dot(a: Sequence[float], b: Sequence[float], momcap: MomcapConfig = MomcapConfig(),
           rng: Optional[np.random.Generator] = None) -> float:
    """Dot product of two vectors with entries in (-1, 1), no rescaling."""
    qa = np.array([[sc.quantize_real(x).value * sc.WORD_BITS for x in a]]).round().astype(np.int64)
    qb = np.array([[sc.quantize_real(x).value * sc.WORD_BITS] for x in b]).round().astype(np.int64)
    return float(FunctionalEngine(momcap, rng=rng).matmul_q(qa, qb)[0, 0])


def dot_error_bound(n: int, momcap: MomcapConfig = MomcapConfig(), lsb: float = 2.0**-8) -> float:
    """Worst-case |sc_dot - sum(a_q*b_q)| for length-``n`` quantized vectors.

    Each product loses < 1/128 to the floor rule; each capacitor readout is
    off by at most half a code; each readout is rounded once to the adder LSB.
    """
    cap = momcap.capacity
    reads = 2 * max(1, -(-n // cap))  # both sign passes, worst case split
    code = cap / (momcap.readout_levels - 1)
    return n / sc.WORD_BITS + reads * (code / 2 + lsb / 2)


# -- attention head ---------------------------------------------------------

@dataclass(frozen=True)
class HeadWeights:
    wq: np.ndarray
    wk: np.ndarray
    wv: np.ndarray

    @property
    def dim(self) -> int:
        return self.wq.shape[0]


def float_attention(x: np.ndarray, w: HeadWeights) -> np.ndarray:
    q = x @ w.wq / math.sqrt(w.dim)
    k, v = x @ w.wk, x @ w.wv
    y = q @ k.T
    y = y - y.max(axis=1, keepdims=True)
    s = np.exp(y)
    s /= s.sum(axis=1, keepdims=True)
    return s @ v


def attention_head(x: np.ndarray, w: HeadWeights, n_banks: int = 1, mode: Mode | str = Mode.TOKEN,
                   engine: Optional[FunctionalEngine] = None) -> np.ndarray:
    """One attention head executed bank by bank.

    Tokens are sharded over ``n_banks``; every bank projects its own tokens,
    then receives the other K and V shards through the ring before computing
    its score rows, softmax and weighted sum. Per-tensor scales are global so
    values do not depend on the sharding.
    """
    eng = engine or FunctionalEngine()
    n = x.shape[0]
    shard = shard_tokens(n, n_banks, mode, layers=1)
    ranges = [r for r in shard.ranges if r[1] > r[0]]
    sx = tensor_scale(x)
    wq = w.wq / math.sqrt(w.dim)  # 1/sqrt(D) folded into the query weights
    swq, swk, swv = tensor_scale(wq), tensor_scale(w.wk), tensor_scale(w.wv)
    local = []
    for lo, hi in ranges:
        xb = x[lo:hi]
        local.append((eng.matmul(xb, wq, sx, swq), eng.matmul(xb, w.wk, sx, swk),
                      eng.matmul(xb, w.wv, sx, swv)))
    # scales of the intermediate tensors are recorded once for the whole tensor
    sq = tensor_scale(np.vstack([l[0] for l in local]))
    sk = tensor_scale(np.vstack([l[1] for l in local]))
    sv = tensor_scale(np.vstack([l[2] for l in local]))
    k_banks = len(ranges)
    received = [{b: b} for b in range(k_banks)]  # bank -> shards held
    for st in ring_broadcast(k_banks, 0):
        for src, dst, origin in st.transfers:
            received[dst][origin] = origin
    out = np.zeros((n, w.wv.shape[1]))
    scores = []
    for b, (lo, hi) in enumerate(ranges):
        if sorted(received[b]) != list(range(k_banks)):
            raise RuntimeError(f"bank {b} missed a ring shard")
        k_all = np.vstack([local[o][1] for o in sorted(received[b])])
        y = eng.matmul(local[b][0], k_all.T, sq, sk)
        scores.append(y)
    probs = [eng.softmax_rows(y) for y in scores]
    ss = tensor_scale(np.vstack(probs))
    for b, (lo, hi) in enumerate(ranges):
        v_all = np.vstack([local[o][2] for o in sorted(received[b])])
        out[lo:hi] = eng.matmul(probs[b], v_all, ss, sv)
    return out


def functional_execute(timeline: Timeline, store: dict[str, np.ndarray],
                       engine: Optional[FunctionalEngine] = None) -> dict[str, np.ndarray]:
    """Evaluate the single-head attention described by ``timeline``.

    ``store`` holds ``x``, ``wq``, ``wk`` and ``wv``. The bank count and
    sharding mode come from the timeline, which must contain the attention
    MatMuls of one layer.
    """
    needed = {"x", "wq", "wk", "wv"}
    missing = needed - set(store)
    if missing:
        raise KeyError(f"operand store lacks {sorted(missing)}")
    ops = {e.op for e in timeline.events}
    if not {"q", "k", "v", "scores", "sv"} <= ops:
        raise ValueError("timeline does not describe an attention layer")
    banks = max(e.banks[1] for e in timeline.events if e.op in ("q", "k", "v"))
    w = HeadWeights(store["wq"], store["wk"], store["wv"])
    out = attention_head(store["x"], w, banks, timeline.mode, engine)
    return {"z": out}
