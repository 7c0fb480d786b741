"""Acceptance criteria, one test each.

Every test records a ``PASS``/``FAIL`` line; the lines are printed in the
pytest terminal summary and when this file is run as a script.
"""
import itertools
import math
import time
from dataclasses import replace

import numpy as np
import pytest

from artemis_sim import momcap as mc
from artemis_sim import sc
from artemis_sim.cli import main
from artemis_sim.config import RunConfig
from artemis_sim.cost import assign_latencies, power_check, total_latency_fs
from artemis_sim.dataflow import Mode, VectorSchedule, intra_bank_reduce
from artemis_sim.functional import attention_head, dot_error_bound, sc_dot
from artemis_sim.hbm import HbmConfig
from artemis_sim.nsc import NscUnit, Y_MAX_RAW, Y_MIN_RAW, float_softmax
from artemis_sim.params import EnergyParams, LatencyParams
from artemis_sim.runner import simulate
from artemis_sim.verify import TOY_SEEDS, softmax_vectors, toy_head, verify_accumulator, verify_attention, verify_readout
from artemis_sim.workloads import BUILTIN, builtin

RESULTS: dict[int, str] = {}


def record(n: int, ok: bool, detail: str) -> None:
    RESULTS[n] = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    print(RESULTS[n])
    assert ok, RESULTS[n]


def test_c01_multiplier():
    t0 = time.perf_counter()
    exact = all(sc.product_popcount(a, b) == a * b // 128 for a, b in itertools.product(range(128), repeat=2))
    mae, mx, _ = sc.mul_error_sweep()
    dt = time.perf_counter() - t0
    record(1, exact and mae <= 0.039 and dt < 1.0, f"floor rule exact={exact} mae={mae:.5f} runtime={dt:.3f}s")


def test_c02_momcap_capacity():
    s = mc.MomcapState()
    for _ in range(20):
        s = mc.accumulate(s, 128)
    twenty_ok = not s.saturated and s.count == 20
    s = mc.accumulate(s, 1)
    acc = verify_accumulator(np.random.default_rng(2), 100_000)
    ok = twenty_ok and s.saturated and acc.extra["additive"]
    record(2, ok, f"20 accepted={twenty_ok} 21st saturates={s.saturated} additive(1e5)={acc.extra['additive']}")


def test_c03_readout():
    r = verify_readout()
    bound = 1 / (2 * 127)
    ok = r.samples == 2561 and r.max_error <= bound + 1e-15 and r.mae < 0.0085 and r.extra["monotone"]
    record(3, ok, f"levels={r.samples} max={r.max_error:.6f} (bound {bound:.6f}) mae={r.mae:.5f} monotone={r.extra['monotone']}")


def test_c04_softmax():
    rng = np.random.default_rng(4)
    vecs = softmax_vectors(rng, 10_000, 64)
    unit = NscUnit()
    total, n, worst, sums_ok, shift_ok = 0.0, 0, 0.0, True, True
    for ys in vecs:
        got = unit.softmax(ys)
        err = np.abs(np.subtract(got, float_softmax(ys)))
        total += err.sum()
        n += len(ys)
        worst = max(worst, err.max())
        sums_ok &= abs(sum(got) - 1) <= len(ys) * 0.002
        raw = [round(y * 16) for y in ys]
        k = int(rng.integers(Y_MIN_RAW - min(raw), Y_MAX_RAW - max(raw) + 1))
        shift_ok &= NscUnit().softmax([(r + k) / 16 for r in raw]) == got
    mae = total / n
    ok = mae <= 0.0020 and worst <= 0.0078 and sums_ok and shift_ok
    record(4, ok, f"mae={mae:.2e} max={worst:.5f} sums_ok={sums_ok} shift_invariant={shift_ok}")


def test_c05_functional_pipeline():
    att = verify_attention(TOY_SEEDS)
    rng = np.random.default_rng(5)
    dots_ok = True
    for _ in range(2000):
        n = int(rng.integers(1, 41))
        a, b = rng.uniform(-0.99, 0.99, n), rng.uniform(-0.99, 0.99, n)
        exact = sum(sc.quantize_real(x).value * sc.quantize_real(y).value for x, y in zip(a, b))
        dots_ok &= abs(sc_dot(a, b) - exact) <= dot_error_bound(n)
    equiv = all((attention_head(*toy_head(s), 8, Mode.TOKEN) == attention_head(*toy_head(s), 2, Mode.LAYER)).all()
                for s in TOY_SEEDS)
    ok = att.max_error <= 0.05 and dots_ok and equiv
    record(5, ok, f"toy head max_err={att.max_error:.4f} over {len(TOY_SEEDS)} seeds, dots<=40 in bound={dots_ok}, "
                  f"token==layer={equiv}")


def test_c06_latency():
    lat = LatencyParams()
    consts = (lat.t_mac_batch, lat.t_mul, lat.t_moc) == (48_000_000, 34_000_000, 17_000_000)
    # hand count: 20 x 48 ns MAC steps, one 31 ns A_to_B, two latch hops into the
    # NSC, one add, one hop along the NSC chain, one add
    hand = 20 * 48_000_000 + 31_000_000 + 2 * 77_700 + 719_950 + 77_700 + 719_950
    t = assign_latencies(intra_bank_reduce(VectorSchedule(80, tiles=2, active_subarrays=1)), pipelined=False)
    got = total_latency_fs(t)
    record(6, consts and got == hand, f"constants={consts} dot80={got / 1e6:.4f} ns hand={hand / 1e6:.4f} ns")


def _bert(mode, pp):
    t0 = time.perf_counter()
    _, rep = simulate(replace(RunConfig(model=builtin("BERT-base")), mode=Mode(mode), pipelined=pp))
    return rep, time.perf_counter() - t0


def test_c07_dataflow_sensitivity():
    r = {(m, p): _bert(m, p) for m in ("layer", "token") for p in (False, True)}
    lat = {k: v[0].latency_ns for k, v in r.items()}
    en = {k: v[0].energy_pj for k, v in r.items()}
    speedup = lat[("layer", False)] / lat[("token", False)]
    gain_l = lat[("layer", False)] / lat[("layer", True)] - 1
    gain_t = lat[("token", False)] / lat[("token", True)] - 1
    e_np = en[("layer", False)] / en[("token", False)]
    e_pp = en[("layer", True)] / en[("token", True)]
    slowest = max(v[1] for v in r.values())
    ok = 5 <= speedup <= 20 and 0.3 <= gain_l <= 0.6 and 0.3 <= gain_t <= 0.6 and min(e_np, e_pp) >= 2 and slowest < 60
    record(7, ok, f"speedup={speedup:.2f} pp_gain layer={gain_l:.1%} token={gain_t:.1%} "
                  f"energy_reduction np={e_np:.2f} pp={e_pp:.2f} slowest_point={slowest:.1f}s")


def test_c08_scalability():
    lats = []
    for s in (1, 2, 4):
        _, rep = simulate(RunConfig(model=builtin("OPT-350"), hbm=HbmConfig(stacks=s)))
        lats.append(rep.latency_ns)
    sp = [lats[0] / x for x in lats]
    frac = sp[-1] / 4
    ok = all(a <= b for a, b in zip(sp, sp[1:])) and frac >= 0.7
    record(8, ok, f"speedups={[round(x, 3) for x in sp]} fraction_of_linear@4={frac:.3f}")


def test_c09_power_budget():
    worst = 0.0
    for name in BUILTIN:
        _, rep = simulate(RunConfig(model=builtin(name)))
        worst = max(worst, rep.avg_power_w)
        all_ok = power_check(rep).ok
        if not all_ok:
            break
    hot = EnergyParams(e_act=909.0 * 1e3)
    _, rep = simulate(RunConfig(model=builtin("BERT-base"), energy=hot))
    over = power_check(rep, hot)
    ok = all_ok and worst <= 60 and not over.ok
    record(9, ok, f"max avg power={worst:.2f} W over 5 workloads; overloaded config power={over.avg_power_w:.0f} W "
                  f"violation={not over.ok} margin={over.margin_w:.0f} W")


def test_c10_determinism(tmp_path):
    same = True
    for argv, files in (
        (["simulate", "--model", "BERT-base"], ("report.json", "timeline.csv")),
        (["simulate", "--model", "Transformer-base", "--mode", "layer", "--pipeline", "off"], ("report.json", "timeline.csv")),
        (["sweep", "--model", "BERT-base", "--axis", "dataflow"], ("sweep.csv",)),
        (["verify", "--seed", "7", "--softmax-vectors", "2000"], ("verify.csv",)),
    ):
        outs = []
        for run in ("a", "b"):
            d = tmp_path / f"{argv[0]}_{len(outs)}_{run}_{hash(tuple(argv)) & 0xffff}"
            assert main(argv + ["--out", str(d)]) == 0
            outs.append([(d / f).read_bytes() for f in files])
        same &= outs[0] == outs[1]
    record(10, same, f"byte-identical reports across repeated runs={same}")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
