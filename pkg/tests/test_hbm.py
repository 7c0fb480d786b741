import pytest
from hypothesis import given
from hypothesis import strategies as st

from artemis_sim import hbm
from artemis_sim.hbm import HbmConfig, Placement
from artemis_sim.momcap import ConfigError


def test_table_defaults():
    c = HbmConfig()
    assert (c.stacks, c.channels_per_stack, c.banks_per_channel) == (1, 8, 4)
    assert (c.subarrays_per_bank, c.tiles_per_subarray, c.rows_per_tile, c.bits_per_row) == (128, 32, 256, 256)
    assert hbm.build(c).banks == 32
    assert hbm.build(HbmConfig(stacks=2)).banks == 64
    assert hbm.build(HbmConfig(subarrays_per_bank=2)).active_pairs == 1


def test_zero_counts_rejected():
    with pytest.raises(ConfigError):
        HbmConfig(stacks=0)


def test_multiply_slots():
    assert hbm.tile_multiply_event(None).multiply_slots == 2
    assert hbm.tile_multiply_event(None, tiles=32).multiply_slots == 64
    assert hbm.tile_multiply_event(None, tiles=0).multiply_slots == 0
    assert hbm.tile_multiply_event(None).mocs == 2


@pytest.mark.parametrize("cap,expected", [(20, 40), (1, 2), (18, 36)])
def test_mac_capacity(cap, expected):
    assert hbm.mac_capacity(None, cap) == expected


def test_row_copy():
    a, b = Placement(0, 0, 0, 5), Placement(0, 3, 1, 7)
    assert hbm.row_copy_event(a, b).mocs == 1
    assert hbm.row_copy_event(a, a).mocs == 1
    with pytest.raises(ConfigError):
        hbm.row_copy_event(a, Placement(1, 0, 0, 5))


@given(st.integers(0, 127))
def test_pairing_is_involution(s):
    t = hbm.build(HbmConfig())
    assert t.partner_subarray(t.partner_subarray(s)) == s
    assert t.partner_subarray(s) // 2 == s // 2


def test_pairings_cover_bank_once():
    t = hbm.build(HbmConfig(subarrays_per_bank=4, tiles_per_subarray=2))
    ps = list(t.pairings(0))
    subs = sorted({p.operational.subarray for p in ps} | {p.partner.subarray for p in ps})
    assert subs == [0, 1, 2, 3] and len(ps) == 4


def test_active_pair_rule():
    t = hbm.build(HbmConfig())
    t.check_active([0, 2, 5])
    with pytest.raises(ConfigError):
        t.check_active([4, 5])


def test_operand_rows():
    t = hbm.build(HbmConfig())
    t.check_operand_row(Placement(0, 0, 0, 2), [1, 1])
    with pytest.raises(ConfigError):
        t.check_operand_row(Placement(0, 0, 0, 1), [1])
    with pytest.raises(ConfigError):
        t.check_operand_row(Placement(0, 0, 0, 9), [1, -1])
    with pytest.raises(ConfigError):
        t.check_placement(Placement(32, 0, 0, 9))
