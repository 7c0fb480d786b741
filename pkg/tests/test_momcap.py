import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from artemis_sim import momcap as mc
from artemis_sim.momcap import ConfigError, MomcapConfig, MomcapState


def run(pops, cfg=MomcapConfig()):
    s = MomcapState()
    for p in pops:
        s = mc.accumulate(s, p, cfg)
    return s


def test_fresh_zero_popcount():
    s = mc.accumulate(MomcapState(), 0)
    assert (s.level, s.count, s.saturated) == (0, 1, False)


def test_capacity_twenty():
    s = run([128] * 20)
    assert (s.level, s.count, s.saturated) == (2560, 20, False)
    s = mc.accumulate(s, 128)
    assert s.saturated and s.level == 2560


def test_saturation_is_absorbing():
    s = run([1] * 25)
    assert s.saturated and s.level == 20


def test_additive_example():
    assert run([32, 10]).level == 42


@pytest.mark.parametrize("p", [-1, 129])
def test_popcount_range(p):
    with pytest.raises(ValueError):
        mc.accumulate(MomcapState(), p)


@given(st.lists(st.integers(0, 128), max_size=20))
def test_additivity(pops):
    s = run(pops)
    assert s.level == sum(pops) and s.count == len(pops) and not s.saturated


def test_readout_examples():
    cfg = MomcapConfig()
    assert mc.readout_code(MomcapState(level=0)) == 0
    assert mc.read_a_to_b(MomcapState(level=0)) == 0
    assert mc.readout_code(MomcapState(level=2560)) == 127
    assert mc.read_a_to_b(MomcapState(level=2560)) == pytest.approx(cfg.capacity)
    assert mc.readout_code(MomcapState(level=1280)) == 64


def test_readout_bound_and_monotone():
    cfg = MomcapConfig()
    codes = [mc.readout_code(MomcapState(level=l)) for l in range(cfg.full_scale + 1)]
    assert codes == sorted(codes)
    for l, c in enumerate(codes):
        err = abs(mc.code_to_value(c) - l / 128) / cfg.capacity
        assert err <= 1 / (2 * 127) + 1e-12


def test_noise_is_seeded():
    cfg = MomcapConfig(noise_mae=0.01)
    st_ = MomcapState(level=1000)
    a = [mc.readout_code(st_, cfg, np.random.default_rng(5)) for _ in range(3)]
    b = [mc.readout_code(st_, cfg, np.random.default_rng(5)) for _ in range(3)]
    assert a == b
    with pytest.raises(ValueError):
        mc.readout_code(st_, cfg)


def test_noise_magnitude_matches_mae():
    cfg = MomcapConfig(noise_mae=0.02, readout_levels=4097)
    rng = np.random.default_rng(0)
    st_ = MomcapState(level=1280)
    errs = [abs(mc.read_a_to_b(st_, cfg, rng) - 10.0) / cfg.capacity for _ in range(4000)]
    assert np.mean(errs) == pytest.approx(0.02, rel=0.1)


@pytest.mark.parametrize("state", [MomcapState(5, 21, True), MomcapState(), MomcapState(42, 2)])
def test_reset(state):
    assert mc.reset(state) == MomcapState()


def test_capacity_for():
    assert mc.capacity_for(8) == 20
    assert mc.capacity_for(8, {8: 18}) == 18
    assert mc.capacity_for(16, {16: 35}) == 35
    with pytest.raises(ConfigError):
        mc.capacity_for(16)
    with pytest.raises(ConfigError):
        mc.capacity_for(2)


@pytest.mark.parametrize("kw", [{"capacity": 0}, {"readout_levels": 1}, {"noise_mae": -1}])
def test_config_validation(kw):
    with pytest.raises(ConfigError):
        MomcapConfig(**kw)


def test_full_scale_value():
    assert MomcapConfig().full_scale == 2560
    assert math.isclose(mc.code_to_value(127), 20.0)
