"""Latency and energy constants of the modelled hardware.

Times are integer femtoseconds so that composed latencies add exactly.
"""
from __future__ import annotations

from dataclasses import dataclass

from .momcap import ConfigError

FS_PER_NS = 1_000_000
FS_PER_PS = 1_000


def ps(x: float) -> int:
    return round(x * FS_PER_PS)


def ns(x: float) -> int:
    return round(x * FS_PER_NS)


@dataclass(frozen=True)
class LatencyParams:
    t_moc: int = ns(17)
    t_mac_batch: int = ns(48)
    t_mul: int = ns(34)
    t_s2b: int = ns(31)
    t_s2b_circuit: int = ps(20000)
    t_comparator: int = ps(623.7)
    t_adder: int = ps(719.95)
    t_lut: int = ps(222.5)
    t_b2tcu: int = ps(530.2)
    t_latch_hop: int = ps(77.7)
    t_charge: int = ns(1)
    # one 256-bit ring beat per MOC
    t_link_beat: int = ns(17)
    # HBM stack I/O bandwidth, bytes per second per stack
    host_bytes_per_s: float = 256e9

    def __post_init__(self):
        for name, v in vars(self).items():
            if v <= 0:
                raise ConfigError(f"latency.{name} must be positive")


@dataclass(frozen=True)
class EnergyParams:
    e_act: float = 909.0  # pJ per row activation
    e_pre_gsa: float = 1.51  # pJ/bit
    e_post_gsa: float = 1.17
    e_io: float = 0.80
    # per-subarray component power, mW
    p_s2b: float = 0.053
    p_comparator: float = 0.055
    p_adder: float = 0.0028
    p_lut: float = 4.21
    p_b2tcu: float = 0.021
    p_latch: float = 0.028
    power_budget_w: float = 60.0

    def __post_init__(self):
        for name, v in vars(self).items():
            if v < 0:
                raise ConfigError(f"energy.{name} must be non-negative")

    def component_pj(self, power_mw: float, latency_fs: int) -> float:
        # mW * fs = 1e-3 J/s * 1e-15 s = 1e-18 J = 1e-6 pJ
        return power_mw * latency_fs * 1e-6
