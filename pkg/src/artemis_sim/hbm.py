"""HBM hierarchy, open-bitline subarray pairing and MOC-level primitives."""
from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Iterator, Sequence

from .momcap import ConfigError

COMPUTE_ROWS = (0, 1)


@dataclass(frozen=True)
class HbmConfig:
    stacks: int = 1
    channels_per_stack: int = 8
    banks_per_channel: int = 4
    subarrays_per_bank: int = 128
    tiles_per_subarray: int = 32
    rows_per_tile: int = 256
    bits_per_row: int = 256
    interbank_link_bits: int = 256

    def __post_init__(self):
        for f in fields(self):
            if getattr(self, f.name) < 1:
                raise ConfigError(f"hbm.{f.name} must be >= 1")

    @property
    def banks(self) -> int:
        return self.stacks * self.channels_per_stack * self.banks_per_channel

    @property
    def active_subarrays(self) -> int:
        # open bitline: one subarray of each pair operates at a time
        return max(1, self.subarrays_per_bank // 2)

    @property
    def macs_per_subarray_step(self) -> int:
        return 2 * self.tiles_per_subarray

    @property
    def subarray_row_bits(self) -> int:
        return self.tiles_per_subarray * self.bits_per_row


@dataclass(frozen=True)
class Placement:
    bank: int
    subarray: int
    tile: int
    row: int


@dataclass(frozen=True)
class TilePairing:
    operational: Placement
    partner: Placement


@dataclass(frozen=True)
class PrimitiveEvent:
    kind: str
    mocs: int
    activations: int
    senses: int = 0
    charge_steps: int = 0
    multiply_slots: int = 0


class Topology:
    def __init__(self, cfg: HbmConfig):
        self.cfg = cfg

    @property
    def banks(self) -> int:
        return self.cfg.banks

    @property
    def active_pairs(self) -> int:
        return self.cfg.subarrays_per_bank // 2

    def partner_subarray(self, subarray: int) -> int:
        return subarray ^ 1

    def pairings(self, bank: int) -> Iterator[TilePairing]:
        c = self.cfg
        for s in range(0, c.subarrays_per_bank - 1, 2):
            for t in range(c.tiles_per_subarray):
                yield TilePairing(Placement(bank, s, t, 0), Placement(bank, s + 1, t, 0))

    def check_placement(self, p: Placement) -> None:
        c = self.cfg
        bounds = (
            ("bank", p.bank, c.banks),
            ("subarray", p.subarray, c.subarrays_per_bank),
            ("tile", p.tile, c.tiles_per_subarray),
            ("row", p.row, c.rows_per_tile),
        )
        for name, v, hi in bounds:
            if not 0 <= v < hi:
                raise ConfigError(f"placement {name}={v} outside [0, {hi})")

    def check_operand_row(self, p: Placement, signs: Sequence[int]) -> None:
        """Reject operand storage in compute rows or with mixed signs in one row."""
        self.check_placement(p)
        if p.row in COMPUTE_ROWS:
            raise ConfigError(f"row {p.row} is a reserved computational row")
        if len(set(signs)) > 1:
            raise ConfigError("a tile row must hold operands of a single sign")

    def check_active(self, active: Sequence[int]) -> None:
        """At most one subarray of each pair computes at a time."""
        pairs = [s // 2 for s in active]
        if len(pairs) != len(set(pairs)):
            raise ConfigError("both subarrays of an open-bitline pair are active")


def build(cfg: HbmConfig) -> Topology:
    return Topology(cfg)


def tile_multiply_event(pair: TilePairing | None = None, tiles: int = 1) -> PrimitiveEvent:
    """Two operand copies into the compute rows, one sense, one charge step."""
    return PrimitiveEvent("tile_multiply", mocs=2, activations=3, senses=1,
                          charge_steps=1, multiply_slots=2 * tiles)


def mac_capacity(pair: TilePairing | None, momcap_capacity: int) -> int:
    return 2 * momcap_capacity


def row_copy_event(src: Placement, dst: Placement) -> PrimitiveEvent:
    if src.bank != dst.bank:
        raise ConfigError("row copy across banks must use the inter-bank transfer path")
    return PrimitiveEvent("row_copy", mocs=1, activations=1)
