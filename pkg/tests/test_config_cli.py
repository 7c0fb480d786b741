import csv
import json
import re

import pytest

from artemis_sim.cli import main
from artemis_sim.config import RunConfigError, parse_config
from artemis_sim.dataflow import Mode
from artemis_sim.hbm import HbmConfig

ERR = re.compile(r'^error=[A-Z_]+( field=\S+)?( line=\d+)? message=".*"$')


def test_minimal_config_uses_defaults():
    cfg = parse_config('{"model": "BERT-base"}')
    assert cfg.hbm == HbmConfig() and cfg.mode is Mode.TOKEN and cfg.pipelined


def test_missing_model():
    with pytest.raises(RunConfigError) as e:
        parse_config("{}")
    assert e.value.code == "MISSING_FIELD"


def test_inline_model_accepted():
    cfg = parse_config(json.dumps({"model": {"name": "tiny", "layers": 1, "seq_len": 8, "heads": 2,
                                             "d_model": 16, "d_ff": 32}}))
    assert cfg.model.d_model == 16 and cfg.model.head_dim == 8


def test_model_override_of_builtin():
    cfg = parse_config('{"model": {"base": "OPT-350", "seq_len": 4096}}')
    assert cfg.model.seq_len == 4096 and cfg.model.d_model == 768


@pytest.mark.parametrize("text,code,field,line", [
    ('{"model": "BERT-base",\n "colour": 1}', "UNKNOWN_FIELD", "colour", 2),
    ('{"model": "BERT-base",\n "hbm": {\n  "stackz": 2}}', "UNKNOWN_FIELD", "hbm.stackz", 3),
    ('{"model": "BERT-base",\n "hbm": {"stacks": 0}}', "BAD_VALUE", "hbm", 2),
    ('{"model": "BERT-base", "mode": "diagonal"}', "BAD_VALUE", "mode", 1),
    ('{"model": "BERT",\n}', "PARSE", "", 2),
    ('{"model": {"name": "x", "layers": 1, "seq_len": 4, "heads": 3, "d_model": 16, "d_ff": 8}}',
     "BAD_VALUE", "model", 1),
    ('{"model": "BERT-base", "seed": -4}', "BAD_VALUE", "seed", 1),
])
def test_diagnostics(text, code, field, line):
    with pytest.raises(RunConfigError) as e:
        parse_config(text)
    assert (e.value.code, e.value.field, e.value.line) == (code, field, line)
    assert ERR.match(e.value.one_line())


def test_latency_override_in_ns():
    cfg = parse_config('{"model": "BERT-base", "latency": {"t_link_beat": 8.5}}')
    assert cfg.latency.t_link_beat == 8_500_000


def test_simulate_writes_deterministic_files(tmp_path):
    cfgp = tmp_path / "c.json"
    cfgp.write_text('{"model": {"name": "t", "layers": 2, "seq_len": 16, "heads": 2, "d_model": 32, "d_ff": 64}}')
    for run in ("a", "b"):
        assert main(["simulate", "--config", str(cfgp), "--out", str(tmp_path / run), "--stacks", "1"]) == 0
    for name in ("report.json", "timeline.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    rep = json.loads((tmp_path / "a" / "report.json").read_text())
    assert rep["report"]["latency_ns"] > 0 and rep["report"]["energy_pj"] > 0


def test_sweep_dataflow_rows(tmp_path):
    assert main(["sweep", "--model", "BERT-base", "--out", str(tmp_path), "--axis", "dataflow"]) == 0
    rows = list(csv.DictReader(open(tmp_path / "sweep.csv")))
    assert [r["point"] for r in rows] == ["layer_NP", "layer_PP", "token_NP", "token_PP"]
    assert float(rows[0]["speedup"]) == 1.0
    assert float(rows[2]["latency_ns"]) < float(rows[0]["latency_ns"])


def test_single_point_sweep(tmp_path):
    assert main(["sweep", "--model", "BERT-base", "--out", str(tmp_path), "--axis", "stacks", "--values", "2"]) == 0
    rows = list(csv.DictReader(open(tmp_path / "sweep.csv")))
    assert len(rows) == 1 and float(rows[0]["speedup"]) == 1.0


@pytest.mark.parametrize("argv", [
    ["simulate", "--model", "nope"],
    ["simulate", "--config", "/nonexistent/c.json"],
    ["sweep", "--model", "BERT-base", "--axis", "stacks", "--values", ","],
    ["sweep", "--model", "BERT-base", "--axis", "stacks", "--values", "two"],
    ["simulate", "--stacks", "0"],
    ["frobnicate"],
    ["simulate", "--seed", "-1"],
])
def test_failures_are_single_line(argv, tmp_path, capsys):
    rc = main(argv + ["--out", str(tmp_path)] if argv[0] != "frobnicate" else argv)
    err = capsys.readouterr().err.strip().splitlines()
    assert rc != 0 and len(err) == 1 and ERR.match(err[0])


def test_verify_writes_csv(tmp_path):
    assert main(["verify", "--out", str(tmp_path), "--softmax-vectors", "200"]) == 0
    rows = {r["component"]: r for r in csv.DictReader(open(tmp_path / "verify.csv"))}
    assert set(rows) == {"stochastic_mul", "analog_acc", "a_to_b", "softmax", "toy_attention"}
    assert float(rows["stochastic_mul"]["calibration_bits"]) > 0
