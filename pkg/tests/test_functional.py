import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from artemis_sim import sc
from artemis_sim.dataflow import Mode, plan_mha, shard_tokens
from artemis_sim.functional import (
    FunctionalEngine,
    HeadWeights,
    attention_head,
    dot_error_bound,
    float_attention,
    functional_execute,
    popcount_table,
    quantize_tensor,
    sc_dot,
    sc_matmul,
)
from artemis_sim.momcap import MomcapConfig
from artemis_sim.verify import toy_head
from artemis_sim.workloads import ModelConfig

frac = st.floats(-0.99, 0.99, allow_nan=False)


def test_popcount_table_is_floor_rule():
    a, b = np.meshgrid(np.arange(128), np.arange(128), indexing="ij")
    assert (popcount_table() == (a * b) // 128).all()


def test_one_by_one_quarter():
    got = sc_matmul(np.array([[0.5]]), np.array([[0.5]]))[0, 0]
    assert got == pytest.approx(0.25, abs=dot_error_bound(1) * 0.51 ** 2)


def test_zero_inputs_give_zero():
    assert (sc_matmul(np.zeros((3, 4)), np.zeros((4, 2))) == 0).all()
    x, w = np.zeros((8, 16)), HeadWeights(*(np.zeros((16, 16)),) * 3)
    assert (attention_head(x, w, 4) == 0).all()


def test_quantize_tensor_scale():
    q, s = quantize_tensor(np.array([0.5, -1.0, 0.25]))
    assert q.tolist() == [64, -127, 32]
    assert s == pytest.approx(128 / 127)


@given(st.lists(st.tuples(frac, frac), min_size=1, max_size=40))
def test_dot_within_composed_bound(pairs):
    a, b = zip(*pairs)
    qa = [sc.quantize_real(x).value for x in a]
    qb = [sc.quantize_real(x).value for x in b]
    exact = sum(x * y for x, y in zip(qa, qb))
    assert abs(sc_dot(a, b) - exact) <= dot_error_bound(len(pairs)) + 1e-12


def test_noise_is_reproducible():
    cfg = MomcapConfig(noise_mae=0.005)
    a = np.random.default_rng(1).uniform(-1, 1, (4, 30))
    b = np.random.default_rng(2).uniform(-1, 1, (30, 3))
    r1 = sc_matmul(a, b, cfg, np.random.default_rng(9))
    r2 = sc_matmul(a, b, cfg, np.random.default_rng(9))
    assert (r1 == r2).all()


def test_saturations_recorded_not_fatal():
    eng = FunctionalEngine()
    out = eng.matmul(np.ones((1, 2000)) * 0.9, np.ones((2000, 1)) * 0.9)
    assert eng.stats.saturations > 0 and np.isfinite(out).all()


def test_small_head_matches_float():
    rng = np.random.default_rng(4)
    x = rng.uniform(-1, 1, (4, 8))
    w = HeadWeights(*(rng.uniform(-1, 1, (8, 8)) / np.sqrt(8) for _ in range(3)))
    assert np.abs(attention_head(x, w, 2) - float_attention(x, w)).max() <= 0.05


@given(st.integers(0, 50), st.integers(1, 10), st.integers(1, 10))
def test_dataflow_equivalence(seed, k1, k2):
    x, w = toy_head(seed)
    a = attention_head(x, w, k1, Mode.TOKEN)
    b = attention_head(x, w, k2, Mode.LAYER)
    assert (a == b).all()


def test_functional_execute_binds_timeline():
    toy = ModelConfig("toy", "-", 1, 8, 1, 16, 32)
    x, w = toy_head(0)
    store = {"x": x, "wq": w.wq, "wk": w.wk, "wv": w.wv}
    tok = functional_execute(plan_mha(toy, shard_tokens(8, 4)), store)["z"]
    lay = functional_execute(plan_mha(toy, shard_tokens(8, 4, "layer")), store)["z"]
    assert (tok == lay).all()
    with pytest.raises(KeyError):
        functional_execute(plan_mha(toy, shard_tokens(8, 4)), {"x": x})


def test_activation_elementwise():
    eng = FunctionalEngine()
    out = eng.activation(np.array([-1.0, 0.0, 0.5]), "relu")
    assert out.tolist() == [0.0, 0.0, 0.5]
