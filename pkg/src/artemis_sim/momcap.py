"""Abstract MOMCAP temporal accumulator with a quantizing readout.

Charge is counted in integer units: one unit per bit-line holding a '1' at
the moment the tile connects to the capacitor. A readout maps the level onto
``readout_levels`` codes spanning the full capacity.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Mapping, Optional

import numpy as np

from .sc import WORD_BITS

CAPACITANCE_RANGE_PF = (4.0, 40.0)
DEFAULT_CAPACITY_TABLE: dict[float, int] = {8.0: 20}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class MomcapConfig:
    capacitance_pf: float = 8.0
    capacity: int = 20
    readout_levels: int = 128
    noise_mae: float = 0.0
    charge_step_ns: float = 1.0

    def __post_init__(self):
        if self.capacity < 1:
            raise ConfigError("momcap capacity must be >= 1")
        if self.readout_levels < 2:
            raise ConfigError("readout_levels must be >= 2")
        if self.noise_mae < 0:
            raise ConfigError("noise_mae must be >= 0")
        if self.charge_step_ns <= 0:
            raise ConfigError("charge_step_ns must be positive")

    @property
    def full_scale(self) -> int:
        return self.capacity * WORD_BITS


@dataclass(frozen=True)
class MomcapState:
    level: int = 0
    count: int = 0
    saturated: bool = False


def accumulate(state: MomcapState, popcount: int, cfg: MomcapConfig = MomcapConfig()) -> MomcapState:
    if not 0 <= popcount <= WORD_BITS:
        raise ValueError(f"popcount {popcount} outside [0, {WORD_BITS}]")
    if state.saturated or state.count >= cfg.capacity:
        return replace(state, saturated=True)
    return MomcapState(state.level + popcount, state.count + 1, False)


def reset(state: MomcapState | None = None) -> MomcapState:
    return MomcapState()


def readout_code(
    state: MomcapState,
    cfg: MomcapConfig = MomcapConfig(),
    rng: Optional[np.random.Generator] = None,
) -> int:
    """A_to_U + U_to_B: the TCU comparator code for the stored level."""
    level = float(state.level)
    if cfg.noise_mae > 0:
        if rng is None:
            raise ValueError("noise injection needs a seeded generator")
        # mean |N(0, s)| = s * sqrt(2/pi)
        sigma = cfg.noise_mae * math.sqrt(math.pi / 2) * cfg.full_scale
        level += float(rng.normal(0.0, sigma))
    top = cfg.readout_levels - 1
    code = math.floor(level * top / cfg.full_scale + 0.5)
    return min(max(code, 0), top)


def code_to_value(code: int, cfg: MomcapConfig = MomcapConfig()) -> float:
    """Rescale a code to the accumulated dot-product value (sum of a*b fractions)."""
    return code * cfg.capacity / (cfg.readout_levels - 1)


def read_a_to_b(
    state: MomcapState,
    cfg: MomcapConfig = MomcapConfig(),
    rng: Optional[np.random.Generator] = None,
) -> float:
    return code_to_value(readout_code(state, cfg, rng), cfg)


def capacity_for(capacitance_pf: float, table: Mapping[float, int] | None = None) -> int:
    lo, hi = CAPACITANCE_RANGE_PF
    if not lo <= capacitance_pf <= hi:
        raise ConfigError(f"capacitance {capacitance_pf} pF outside the characterised {lo}-{hi} pF sweep")
    merged = dict(DEFAULT_CAPACITY_TABLE)
    if table:
        merged.update({float(k): int(v) for k, v in table.items()})
    try:
        return merged[float(capacitance_pf)]
    except KeyError:
        raise ConfigError(f"no MOMCAP capacity entry for {capacitance_pf} pF; supply one") from None
