"""Command-line entry point: ``simulate``, ``sweep`` and ``verify``.

Failures print one line ``error=<CODE> [field=..] [line=..] message="..."``
to stderr and exit nonzero.
"""
from __future__ import annotations

import argparse
import os
import sys
import tempfile
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence

from .config import MAX_SEED, RunConfig, RunConfigError, load_config
from .dataflow import Mode
from .momcap import ConfigError
from .runner import DATAFLOW_POINTS, SWEEP_AXES, report_json, simulate, sweep, sweep_csv
from .workloads import builtin

EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_RUNTIME = 4

DEFAULT_VALUES = {
    "dataflow": DATAFLOW_POINTS,
    "stacks": (1, 2, 4),
    "seq_len": (128, 256, 512, 1024, 2048),
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise RunConfigError("USAGE", message)


def _seed(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v <= MAX_SEED:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="artemis-sim", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in ("simulate", "sweep", "verify"):
        s = sub.add_parser(name)
        s.add_argument("--config", help="JSON run configuration")
        s.add_argument("--out", help="output directory")
        s.add_argument("--seed", type=_seed)
        s.add_argument("--mode", choices=("token", "layer"))
        s.add_argument("--pipeline", choices=("on", "off"))
        s.add_argument("--stacks", type=int)
        s.add_argument("--model")
        if name == "sweep":
            s.add_argument("--axis", choices=SWEEP_AXES)
            s.add_argument("--values", help="comma-separated axis values")
        if name == "verify":
            s.add_argument("--softmax-vectors", type=int, default=10_000)
    return p


def resolve(args: argparse.Namespace) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    if args.model:
        try:
            cfg = replace(cfg, model=builtin(args.model))
        except ConfigError as exc:
            raise RunConfigError("UNKNOWN_MODEL", str(exc), "model") from None
    if args.mode:
        cfg = replace(cfg, mode=Mode(args.mode))
    if args.pipeline:
        cfg = replace(cfg, pipelined=args.pipeline == "on")
    if args.stacks is not None:
        try:
            cfg = replace(cfg, hbm=replace(cfg.hbm, stacks=args.stacks))
        except ConfigError as exc:
            raise RunConfigError("BAD_VALUE", str(exc), "stacks") from None
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    if args.out:
        cfg = replace(cfg, out=args.out)
    return cfg


def _write(out: Path, name: str, text: str) -> None:
    out.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=out, prefix=f".{name}.")
    with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    os.replace(tmp, out / name)


def _parse_values(axis: str, text: Optional[str], cfg: RunConfig):
    if text is not None:
        vals = [v.strip() for v in text.split(",") if v.strip()]
    elif cfg.sweep.values:
        vals = list(cfg.sweep.values)
    else:
        vals = list(DEFAULT_VALUES[axis])
    if axis != "dataflow":
        try:
            vals = [int(v) for v in vals]
        except ValueError:
            raise RunConfigError("BAD_VALUE", f"{axis} values must be integers", "sweep.values") from None
    return vals


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        cfg = resolve(args)
        out = Path(cfg.out)
        if args.command == "simulate":
            tl, rep = simulate(cfg)
            _write(out, "report.json", report_json(cfg, rep))
            _write(out, "timeline.csv", tl.to_csv())
            print(f"latency_ns={rep.latency_ns:.3f} energy_pj={rep.energy_pj:.1f} "
                  f"avg_power_w={rep.avg_power_w:.4f} out={out}")
        elif args.command == "sweep":
            axis = args.axis or cfg.sweep.axis
            rows = sweep(cfg, axis, _parse_values(axis, args.values, cfg))
            _write(out, "sweep.csv", sweep_csv(rows))
            for r in rows:
                print(f"{r.point} latency_ns={r.report.latency_ns:.3f} speedup={r.speedup:.3f}")
        else:
            from .verify import verify
            rep = verify(cfg.seed, args.softmax_vectors, cfg=cfg.momcap)
            _write(out, "verify.csv", rep.to_csv())
            for c in rep.components:
                print(f"{c.component} mae={c.mae:.6g} max={c.max_error:.6g}")
        return 0
    except RunConfigError as exc:
        print(exc.one_line(), file=sys.stderr)
        return EXIT_IO if exc.code == "IO" else EXIT_CONFIG
    except ConfigError as exc:
        print(RunConfigError("BAD_VALUE", str(exc)).one_line(), file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(RunConfigError("IO", f"{exc.strerror}: {exc.filename}").one_line(), file=sys.stderr)
        return EXIT_IO
    except Exception as exc:  # noqa: BLE001 - last-resort single-line report
        print(RunConfigError("RUNTIME", f"{type(exc).__name__}: {exc}").one_line(), file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
