"""Run configuration: JSON schema, validation and diagnostics."""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Optional

from .dataflow import Mode
from .hbm import HbmConfig
from .momcap import ConfigError, MomcapConfig
from .params import EnergyParams, LatencyParams
from .workloads import Arch, ModelConfig, builtin

MAX_SEED = 2**64 - 1


class RunConfigError(ConfigError):
    """Configuration problem with a machine-readable code and location."""

    def __init__(self, code: str, message: str, field_name: str = "", line: Optional[int] = None):
        super().__init__(message)
        self.code = code
        self.field = field_name
        self.line = line

    def one_line(self) -> str:
        parts = [f"error={self.code}"]
        if self.field:
            parts.append(f"field={self.field}")
        if self.line is not None:
            parts.append(f"line={self.line}")
        parts.append("message=" + json.dumps(str(self)))
        return " ".join(parts)


@dataclass(frozen=True)
class SweepSpec:
    axis: str = "dataflow"
    values: tuple = ()


@dataclass(frozen=True)
class RunConfig:
    model: ModelConfig = field(default_factory=lambda: builtin("BERT-base"))
    hbm: HbmConfig = field(default_factory=HbmConfig)
    mode: Mode = Mode.TOKEN
    pipelined: bool = True
    momcap: MomcapConfig = field(default_factory=MomcapConfig)
    latency: LatencyParams = field(default_factory=LatencyParams)
    energy: EnergyParams = field(default_factory=EnergyParams)
    seed: int = 0
    out: str = "out"
    sweep: SweepSpec = field(default_factory=SweepSpec)

    def __post_init__(self):
        if not 0 <= self.seed <= MAX_SEED:
            raise RunConfigError("BAD_VALUE", f"seed {self.seed} is not a 64-bit unsigned integer", "seed")

    def describe(self) -> dict:
        m = self.model
        return {
            "model": {f.name: (getattr(m, f.name).value if isinstance(getattr(m, f.name), Arch)
                               else getattr(m, f.name)) for f in fields(m)},
            "hbm": {f.name: getattr(self.hbm, f.name) for f in fields(self.hbm)},
            "mode": self.mode.value,
            "pipelined": self.pipelined,
            "momcap": {f.name: getattr(self.momcap, f.name) for f in fields(self.momcap)},
            "seed": self.seed,
        }


_TOP = {"model", "hbm", "mode", "pipelined", "momcap", "latency", "energy", "seed", "out", "sweep"}


def _line_of(text: str, key: str) -> Optional[int]:
    m = re.search(r'"' + re.escape(key) + r'"\s*:', text)
    return text.count("\n", 0, m.start()) + 1 if m else None


def _section(cls, data: Any, name: str, text: str, convert=None):
    if not isinstance(data, dict):
        raise RunConfigError("BAD_TYPE", f"{name} must be an object", name, _line_of(text, name))
    known = {f.name: f for f in fields(cls)}
    for k in data:
        if k not in known:
            raise RunConfigError("UNKNOWN_FIELD", f"unknown field {name}.{k}", f"{name}.{k}", _line_of(text, k))
    kwargs = {}
    for k, v in data.items():
        if isinstance(v, bool) or not isinstance(v, (int, float, str)):
            raise RunConfigError("BAD_TYPE", f"{name}.{k} must be a number or string", f"{name}.{k}",
                                 _line_of(text, k))
        kwargs[k] = convert(k, v) if convert else v
    try:
        return cls(**kwargs)
    except RunConfigError:
        raise
    except (ConfigError, TypeError, ValueError) as exc:
        raise RunConfigError("BAD_VALUE", f"{name}: {exc}", name, _line_of(text, name)) from None


def _latency_convert(k: str, v):
    # the file gives times in ns; internal unit is fs
    if k == "host_bytes_per_s":
        return float(v)
    return round(float(v) * 1_000_000)


def _model(data: Any, text: str) -> ModelConfig:
    if isinstance(data, str):
        try:
            return builtin(data)
        except ConfigError as exc:
            raise RunConfigError("UNKNOWN_MODEL", str(exc), "model", _line_of(text, "model")) from None
    if isinstance(data, dict):
        d = dict(data)
        if "base" in d:
            base = _model(d.pop("base"), text)
            for k in d:
                if k not in {f.name for f in fields(ModelConfig)}:
                    raise RunConfigError("UNKNOWN_FIELD", f"unknown field model.{k}", f"model.{k}",
                                         _line_of(text, k))
            if "arch" in d:
                d["arch"] = _arch(d["arch"], text)
            try:
                return replace(base, **d)
            except (ConfigError, TypeError) as exc:
                raise RunConfigError("BAD_VALUE", f"model: {exc}", "model", _line_of(text, "model")) from None
        for req in ("name", "layers", "seq_len", "heads", "d_model", "d_ff"):
            if req not in d:
                raise RunConfigError("MISSING_FIELD", f"inline model needs {req}", f"model.{req}",
                                     _line_of(text, "model"))
        d.setdefault("params", "custom")
        return _section(ModelConfig, d, "model", text,
                        lambda k, v: _arch(v, text) if k == "arch" else v)
    raise RunConfigError("BAD_TYPE", "model must be a builtin name or an object", "model",
                         _line_of(text, "model"))


def _arch(v, text) -> Arch:
    try:
        return Arch(v)
    except ValueError:
        raise RunConfigError("BAD_VALUE", f"model.arch must be one of {[a.value for a in Arch]}",
                             "model.arch", _line_of(text, "arch")) from None


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise RunConfigError("PARSE", f"{source}: {exc.msg}", "", exc.lineno) from None
    if not isinstance(data, dict):
        raise RunConfigError("BAD_TYPE", "configuration must be a JSON object", "", 1)
    for k in data:
        if k not in _TOP:
            raise RunConfigError("UNKNOWN_FIELD", f"unknown field {k}", k, _line_of(text, k))
    if "model" not in data:
        raise RunConfigError("MISSING_FIELD", "configuration needs a model", "model", None)
    kw: dict[str, Any] = {"model": _model(data["model"], text)}
    if "hbm" in data:
        kw["hbm"] = _section(HbmConfig, data["hbm"], "hbm", text)
    if "momcap" in data:
        kw["momcap"] = _section(MomcapConfig, data["momcap"], "momcap", text)
    if "latency" in data:
        kw["latency"] = _section(LatencyParams, data["latency"], "latency", text, _latency_convert)
    if "energy" in data:
        kw["energy"] = _section(EnergyParams, data["energy"], "energy", text)
    if "mode" in data:
        try:
            kw["mode"] = Mode(data["mode"])
        except ValueError:
            raise RunConfigError("BAD_VALUE", "mode must be token or layer", "mode",
                                 _line_of(text, "mode")) from None
    if "pipelined" in data:
        if not isinstance(data["pipelined"], bool):
            raise RunConfigError("BAD_TYPE", "pipelined must be true or false", "pipelined",
                                 _line_of(text, "pipelined"))
        kw["pipelined"] = data["pipelined"]
    if "seed" in data:
        s = data["seed"]
        if isinstance(s, bool) or not isinstance(s, int):
            raise RunConfigError("BAD_TYPE", "seed must be an integer", "seed", _line_of(text, "seed"))
        kw["seed"] = s
    if "out" in data:
        if not isinstance(data["out"], str):
            raise RunConfigError("BAD_TYPE", "out must be a path string", "out", _line_of(text, "out"))
        kw["out"] = data["out"]
    if "sweep" in data:
        sw = data["sweep"]
        if not isinstance(sw, dict) or set(sw) - {"axis", "values"}:
            raise RunConfigError("UNKNOWN_FIELD", "sweep takes only axis and values", "sweep",
                                 _line_of(text, "sweep"))
        kw["sweep"] = SweepSpec(sw.get("axis", "dataflow"), tuple(sw.get("values", ())))
    try:
        return RunConfig(**kw)
    except ConfigError as exc:
        if isinstance(exc, RunConfigError):
            exc.line = exc.line or _line_of(text, exc.field)
            raise
        raise RunConfigError("BAD_VALUE", str(exc)) from None


def load_config(path: str | Path) -> RunConfig:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise RunConfigError("IO", f"cannot read {p}: {exc.strerror}", "config") from None
    return parse_config(text, str(p))
