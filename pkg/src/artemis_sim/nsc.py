"""Near-subarray compute unit: reduction, LUT softmax, activations, B_to_TCU.

Number formats used inside the unit (all two's complement integers scaled by
a power of two unless noted):

* partial sums: ``adder_width``-bit signed, one LSB = ``lsb`` (default 2**-8)
* softmax input ``y``: 8-bit signed, LSB 1/16, range [-8, 7.9375]
* softmax running sum: ``SOFTMAX_ACC_BITS``-bit unsigned, LSB 2**-15
* log-domain values (lse, exponent arguments): integers in units of ln(2)/256
* probabilities: 16-bit unsigned, LSB 2**-16

The final exponent uses range reduction by ln(2): an argument of ``t`` log
units splits into ``t >> 8`` (a right shift) and ``t & 255`` (a 256-entry
``2**(-r/256)`` table), so no multiplier or divider is needed.
"""
from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

from . import sc

Y_FRAC_BITS = 4
Y_MIN_RAW, Y_MAX_RAW = -128, 127
SUM_FRAC_BITS = 15
SOFTMAX_ACC_BITS = 24
LOG_UNITS_PER_OCTAVE = 256
PROB_FRAC_BITS = 16
GELU_IN_FRAC_BITS = 5
GELU_OUT_FRAC_BITS = 7


class Mode(enum.Enum):
    ADD = "add"
    SUBTRACT = "subtract"


class Role(enum.Enum):
    FIRST = "first"
    SECOND = "second"


@dataclass(frozen=True)
class LutTable:
    """256-entry table; ``inputs[i]`` documents the real input of entry ``i``."""

    name: str
    inputs: tuple[float, ...]
    outputs: tuple[int, ...]
    out_scale: float

    def __post_init__(self):
        if len(self.inputs) != 256 or len(self.outputs) != 256:
            raise ValueError(f"LUT {self.name} must have 256 entries")

    def __getitem__(self, index: int) -> int:
        return self.outputs[index]

    def value(self, index: int) -> float:
        return self.outputs[index] * self.out_scale

    def dump_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["index", "input", "output"])
            for i, (x, y) in enumerate(zip(self.inputs, self.outputs)):
                w.writerow([i, repr(x), y])

    @classmethod
    def load_csv(cls, path: str | Path, name: str, out_scale: float) -> "LutTable":
        inputs, outputs = [], []
        with open(path, newline="") as fh:
            for i, row in enumerate(csv.DictReader(fh)):
                if int(row["index"]) != i:
                    raise ValueError(f"{path}: row {i + 2} has index {row['index']}")
                inputs.append(float(row["input"]))
                outputs.append(int(row["output"]))
        return cls(name, tuple(inputs), tuple(outputs), out_scale)


def _build(name: str, xs: Sequence[float], f: Callable[[float], float], out_frac_bits: int) -> LutTable:
    scale = 2.0**-out_frac_bits
    outs = tuple(int(math.floor(f(x) / scale + 0.5)) for x in xs)
    return LutTable(name, tuple(xs), outs, scale)


def make_exp_lut() -> LutTable:
    # entry i holds exp(-i/16): every difference y_i - y_max lands on this grid
    xs = [-i / 2**Y_FRAC_BITS for i in range(256)]
    return _build("exp", xs, math.exp, SUM_FRAC_BITS)


def make_log_conv_lut() -> LutTable:
    # (y_max - y_i) in log units of ln2/256
    xs = [-i / 2**Y_FRAC_BITS for i in range(256)]
    return _build("diff_to_log2", xs, lambda x: -x / math.log(2), 8)


def make_ln_lut() -> LutTable:
    # mantissa m = 1 + j/256 -> log2(m), in 1/256 octave units
    xs = [1 + j / 256 for j in range(256)]
    return _build("ln_mantissa", xs, math.log2, 8)


def make_exp2_lut() -> LutTable:
    xs = [-r / 256 for r in range(256)]
    return _build("exp2_frac", xs, lambda x: 2.0**x, PROB_FRAC_BITS)


def gelu(x: float) -> float:
    return 0.5 * x * (1.0 + math.erf(x / math.sqrt(2.0)))


def make_gelu_lut() -> LutTable:
    xs = [(i - 128) / 2**GELU_IN_FRAC_BITS for i in range(256)]
    return _build("gelu", xs, gelu, GELU_OUT_FRAC_BITS)


def quantize_y(y: float) -> int:
    raw = math.floor(y * 2**Y_FRAC_BITS + 0.5)
    return min(max(raw, Y_MIN_RAW), Y_MAX_RAW)


@dataclass
class NscUnit:
    adder_width: int = 16
    lsb: float = 2.0**-8
    position_in_chain: int = 0
    exp_lut: LutTable = field(default_factory=make_exp_lut)
    log_conv_lut: LutTable = field(default_factory=make_log_conv_lut)
    ln_lut: LutTable = field(default_factory=make_ln_lut)
    exp2_lut: LutTable = field(default_factory=make_exp2_lut)
    gelu_lut: LutTable = field(default_factory=make_gelu_lut)
    ymax_raw: int = Y_MIN_RAW
    lse_units: int | None = None
    saturation_count: int = 0

    # -- reduction -------------------------------------------------------
    def _saturate(self, raw: int) -> int:
        hi = (1 << (self.adder_width - 1)) - 1
        lo = -(1 << (self.adder_width - 1))
        if raw > hi or raw < lo:
            self.saturation_count += 1
            return hi if raw > hi else lo
        return raw

    def to_raw(self, x: float) -> int:
        return self._saturate(math.floor(x / self.lsb + 0.5))

    def reduce_raw(self, acc: int, incoming: int, mode: Mode = Mode.ADD) -> int:
        return self._saturate(acc + incoming if mode is Mode.ADD else acc - incoming)

    def reduce(self, acc: float, incoming: float, mode: Mode | str = Mode.ADD) -> float:
        mode = Mode(mode)
        return self.reduce_raw(self.to_raw(acc), self.to_raw(incoming), mode) * self.lsb

    # -- softmax ---------------------------------------------------------
    def reset_softmax(self) -> None:
        self.ymax_raw = Y_MIN_RAW
        self.lse_units = None

    def softmax_stream_max(self, y: float) -> "NscUnit":
        self.ymax_raw = max(self.ymax_raw, quantize_y(y))
        return self

    def _diff_index(self, y_raw: int) -> int:
        # y_max - y_i in input LSBs, clamped to the table (exp(-15.9) ~ 1e-7)
        return min(self.ymax_raw - y_raw, 255)

    def softmax_lse_units(self, ys: Sequence[float]) -> int:
        if len(ys) == 0:
            raise ValueError("softmax over an empty vector")
        acc = 0
        for y in ys:
            idx = self._diff_index(quantize_y(y))
            if idx < 0:
                raise ValueError("ymax register is below an input; stream the max first")
            acc += self.exp_lut[idx]
        if acc >= 1 << SOFTMAX_ACC_BITS:
            self.saturation_count += 1
            acc = (1 << SOFTMAX_ACC_BITS) - 1
        # priority encoder + 8-bit mantissa, rounded
        e = acc.bit_length() - 1
        j = (((acc << 9) >> e) + 1) >> 1  # round(acc * 256 / 2**e)
        if j >= 512:
            j, e = 256, e + 1
        octave = e - SUM_FRAC_BITS
        self.lse_units = octave * LOG_UNITS_PER_OCTAVE + self.ln_lut[j - 256]
        return self.lse_units

    def softmax_lse(self, ys: Sequence[float]) -> float:
        """ln(sum_j exp(y_j - y_max)), in nats."""
        return self.softmax_lse_units(ys) * math.log(2) / LOG_UNITS_PER_OCTAVE

    def softmax_finalize(self, y: float) -> float:
        if self.lse_units is None:
            raise ValueError("lse register empty; run softmax_lse first")
        idx = self._diff_index(quantize_y(y))
        t = self.log_conv_lut[idx] + self.lse_units
        if t < 0:
            t = 0
        k, r = t >> 8, t & 255
        return (self.exp2_lut[r] >> k) * 2.0**-PROB_FRAC_BITS if k < 32 else 0.0

    def softmax(self, ys: Sequence[float]) -> list[float]:
        self.reset_softmax()
        for y in ys:
            self.softmax_stream_max(y)
        self.softmax_lse_units(ys)
        return [self.softmax_finalize(y) for y in ys]

    # -- activations / conversion ----------------------------------------
    def activation(self, x: float, kind: str) -> float:
        if kind == "relu":
            return x if x > 0 else 0.0
        if kind == "gelu":
            raw = math.floor(x * 2**GELU_IN_FRAC_BITS + 0.5)
            idx = min(max(raw, -128), 127) + 128
            return self.gelu_lut.value(idx)
        raise ValueError(f"unknown activation {kind!r}")

    def b_to_tcu(self, v: sc.Fixed8, role: Role | str) -> sc.StochWord:
        role = Role(role)
        return sc.encode_spread(v) if role is Role.FIRST else sc.encode_tcu(v)


def float_softmax(ys: Sequence[float]) -> list[float]:
    m = max(ys)
    ex = [math.exp(y - m) for y in ys]
    s = sum(ex)
    return [e / s for e in ex]
