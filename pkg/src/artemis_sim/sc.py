"""Bit-exact stochastic-computing arithmetic on 128-bit words.

Operands are signed 8-bit values stored as a sign plus a 7-bit magnitude
(0..127). A magnitude ``m`` becomes a 128-bit unary stream with exactly ``m``
set bits. Two layouts exist:

* TCU (transition-coded unary): bits ``0..m-1`` set, one contiguous run.
* spread: the set bits are distributed evenly over the word so that ANDing
  with any TCU word keeps ``floor(m_a * m_b / 128)`` bits.

Bit vectors are held as Python ints (bit ``i`` of the int is position ``i``).
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

WORD_BITS = 128
MAX_MAG = WORD_BITS - 1
_MASK = (1 << WORD_BITS) - 1


class EncodingError(ValueError):
    """Operands reached the multiplier with the wrong stream layout."""


class Encoding(enum.Enum):
    TCU = "tcu"
    SPREAD = "spread"
    PRODUCT = "product"


@dataclass(frozen=True)
class Fixed8:
    """Signed fraction ``sign * magnitude / 128``."""

    sign: int
    magnitude: int

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise ValueError(f"sign must be +1 or -1, got {self.sign}")
        if not 0 <= self.magnitude <= MAX_MAG:
            raise ValueError(f"magnitude must lie in [0, {MAX_MAG}], got {self.magnitude}")

    @property
    def value(self) -> float:
        return self.sign * self.magnitude / WORD_BITS

    def __float__(self):
        return self.value


@dataclass(frozen=True)
class StochWord:
    bits: int
    sign: int
    encoding: Encoding

    def __post_init__(self):
        if self.bits < 0 or self.bits > _MASK:
            raise ValueError("bits must fit in 128 positions")
        if self.sign not in (1, -1):
            raise ValueError(f"sign must be +1 or -1, got {self.sign}")

    @property
    def popcount(self) -> int:
        return self.bits.bit_count()

    def bit(self, i: int) -> int:
        return (self.bits >> i) & 1

    def to_list(self) -> list[int]:
        return [(self.bits >> i) & 1 for i in range(WORD_BITS)]


def quantize_real(x: float) -> Fixed8:
    """Round ``x`` in (-1, 1) to the nearest Fixed8, halves away from zero."""
    if not math.isfinite(x) or abs(x) >= 1.0:
        raise ValueError(f"value {x!r} outside the open interval (-1, 1)")
    mag = math.floor(abs(x) * WORD_BITS + 0.5)
    return Fixed8(-1 if x < 0 else 1, min(mag, MAX_MAG))


def _tcu_bits(m: int) -> int:
    return (1 << m) - 1


def _spread_bits(m: int) -> int:
    # bit i set iff floor((i+1)m/128) > floor(i*m/128)
    bits = 0
    for i in range(WORD_BITS):
        if ((i + 1) * m) // WORD_BITS > (i * m) // WORD_BITS:
            bits |= 1 << i
    return bits


_TCU_TABLE = tuple(_tcu_bits(m) for m in range(WORD_BITS))
_SPREAD_TABLE = tuple(_spread_bits(m) for m in range(WORD_BITS))


def encode_tcu(v: Fixed8) -> StochWord:
    return StochWord(_TCU_TABLE[v.magnitude], v.sign, Encoding.TCU)


def encode_spread(v: Fixed8) -> StochWord:
    return StochWord(_SPREAD_TABLE[v.magnitude], v.sign, Encoding.SPREAD)


def decode(w: StochWord) -> Fixed8:
    # A full 128-one word has no Fixed8 image; callers never build one from
    # encoders, and Fixed8 validation rejects it.
    return Fixed8(w.sign, w.popcount)


def stoch_mul(a: StochWord, b: StochWord) -> StochWord:
    """AND of a spread word with a TCU word."""
    if a.encoding is not Encoding.SPREAD or b.encoding is not Encoding.TCU:
        raise EncodingError(
            f"stoch_mul expects (spread, tcu) operands, got ({a.encoding.value}, {b.encoding.value})"
        )
    return StochWord(a.bits & b.bits, a.sign * b.sign, Encoding.PRODUCT)


def product_popcount(mag_a: int, mag_b: int) -> int:
    """Popcount of the AND product, read from the encoder tables."""
    return (_SPREAD_TABLE[mag_a] & _TCU_TABLE[mag_b]).bit_count()


def mul_error_sweep() -> tuple[float, float, int]:
    """Exhaustive 128x128 sweep of the multiplier.

    Returns (normalized MAE, normalized max error, number of inexact pairs),
    with errors measured against the exact product ``a*b/128`` in units of
    the 128-bit full scale.
    """
    total = 0.0
    worst = 0.0
    inexact = 0
    for a in range(WORD_BITS):
        sa = _SPREAD_TABLE[a]
        for b in range(WORD_BITS):
            got = (sa & _TCU_TABLE[b]).bit_count()
            err = abs(got - a * b / WORD_BITS) / WORD_BITS
            total += err
            worst = max(worst, err)
            if a * b % WORD_BITS:
                inexact += 1
    return total / WORD_BITS**2, worst, inexact


def calibration_bits() -> float:
    """Operand width (bits) below which every product is as exact as the output allows.

    "Exact" means the product popcount equals ``a*b/128`` rounded to the
    nearest count, i.e. the best any 128-bit output stream can do. We find the
    largest magnitude bound ``m`` such that every pair in ``[0, m)`` meets
    this, and report ``log2(m)``.
    """
    best = 1
    for m in range(2, WORD_BITS + 1):
        top = m - 1
        ok = all(
            product_popcount(top, b) == math.floor(top * b / WORD_BITS + 0.5) for b in range(m)
        )
        if not ok:
            break
        best = m
    return math.log2(best)
