"""Per-component error measurement against exact and float references."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from . import momcap as mc
from . import sc
from .functional import FunctionalEngine, HeadWeights, attention_head, float_attention
from .nsc import Y_FRAC_BITS, Y_MAX_RAW, Y_MIN_RAW, NscUnit, float_softmax

TOY_SEEDS = tuple(range(20))


@dataclass(frozen=True)
class ComponentError:
    component: str
    mae: float
    max_error: float
    samples: int
    calibration_bits: float = math.nan
    extra: dict = field(default_factory=dict)


@dataclass(frozen=True)
class VerifyReport:
    components: tuple[ComponentError, ...]

    def get(self, name: str) -> ComponentError:
        for c in self.components:
            if c.component == name:
                return c
        raise KeyError(name)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["component", "mae", "max_error", "calibration_bits", "samples"])
        for c in self.components:
            cal = "" if math.isnan(c.calibration_bits) else repr(c.calibration_bits)
            w.writerow([c.component, repr(c.mae), repr(c.max_error), cal, c.samples])
        return buf.getvalue()


def verify_multiplier() -> ComponentError:
    mae, mx, inexact = sc.mul_error_sweep()
    return ComponentError("stochastic_mul", mae, mx, sc.WORD_BITS**2, sc.calibration_bits(),
                          {"inexact_pairs": inexact})


def verify_accumulator(rng: np.random.Generator, sequences: int = 100_000,
                       cfg: mc.MomcapConfig = mc.MomcapConfig()) -> ComponentError:
    """Additivity of the charge level and readout error of accumulated sums.

    Errors are normalized to the capacitor full scale.
    """
    lengths = rng.integers(1, cfg.capacity + 1, size=sequences)
    pops = rng.integers(0, sc.WORD_BITS + 1, size=(sequences, cfg.capacity))
    errs = np.empty(sequences)
    additive = True
    for i in range(sequences):
        seq = pops[i, : lengths[i]]
        st = mc.MomcapState()
        for p in seq:
            st = mc.accumulate(st, int(p), cfg)
        additive &= st.level == int(seq.sum()) and not st.saturated
        got = mc.read_a_to_b(st, cfg)
        errs[i] = abs(got - st.level / sc.WORD_BITS) / cfg.capacity
    return ComponentError("analog_acc", float(errs.mean()), float(errs.max()), sequences,
                          extra={"additive": bool(additive)})


def verify_readout(cfg: mc.MomcapConfig = mc.MomcapConfig()) -> ComponentError:
    codes = []
    errs = []
    for level in range(cfg.full_scale + 1):
        code = mc.readout_code(mc.MomcapState(level=level), cfg)
        codes.append(code)
        errs.append(abs(mc.code_to_value(code, cfg) - level / sc.WORD_BITS) / cfg.capacity)
    monotone = all(a <= b for a, b in zip(codes, codes[1:]))
    return ComponentError("a_to_b", float(np.mean(errs)), float(np.max(errs)), len(codes),
                          extra={"monotone": monotone})


def softmax_vectors(rng: np.random.Generator, count: int = 10_000, max_len: int = 64) -> list[list[float]]:
    out = []
    for _ in range(count):
        d = int(rng.integers(1, max_len + 1))
        raw = rng.integers(Y_MIN_RAW, Y_MAX_RAW + 1, size=d)
        out.append([float(r) / 2**Y_FRAC_BITS for r in raw])
    return out


def verify_softmax(rng: np.random.Generator, count: int = 10_000, max_len: int = 64) -> ComponentError:
    unit = NscUnit()
    total, n, worst, worst_sum = 0.0, 0, 0.0, 0.0
    for ys in softmax_vectors(rng, count, max_len):
        got = unit.softmax(ys)
        ref = float_softmax(ys)
        e = [abs(a - b) for a, b in zip(got, ref)]
        total += math.fsum(e)
        n += len(e)
        worst = max(worst, max(e))
        worst_sum = max(worst_sum, abs(math.fsum(got) - 1.0) / len(ys))
    return ComponentError("softmax", total / n, worst, count, extra={"max_sum_dev_per_elem": worst_sum})


def toy_head(seed: int, n: int = 8, d: int = 16) -> tuple[np.ndarray, HeadWeights]:
    rng = np.random.default_rng(seed)
    x = rng.uniform(-1, 1, (n, d))
    w = HeadWeights(*(rng.uniform(-1, 1, (d, d)) / math.sqrt(d) for _ in range(3)))
    return x, w


def verify_attention(seeds=TOY_SEEDS, banks: int = 4, cfg: mc.MomcapConfig = mc.MomcapConfig(),
                     noise_seed: int = 0) -> ComponentError:
    errs = []
    for s in seeds:
        x, w = toy_head(s)
        eng = FunctionalEngine(cfg, rng=np.random.default_rng([noise_seed, s]))
        z = attention_head(x, w, banks, engine=eng)
        errs.append(np.abs(z - float_attention(x, w)))
    allerr = np.concatenate([e.ravel() for e in errs])
    return ComponentError("toy_attention", float(allerr.mean()), float(allerr.max()), len(seeds))


def verify(seed: int = 0, softmax_vectors_count: int = 10_000, acc_sequences: int = 100_000,
           cfg: mc.MomcapConfig = mc.MomcapConfig()) -> VerifyReport:
    rng = np.random.default_rng(seed)
    return VerifyReport((
        verify_multiplier(),
        verify_accumulator(rng, acc_sequences, cfg),
        verify_readout(cfg),
        verify_softmax(rng, softmax_vectors_count),
        verify_attention(cfg=cfg, noise_seed=seed),
    ))
