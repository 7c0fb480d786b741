"""Transformer workload definitions and their operation graphs."""
from __future__ import annotations

import enum
from dataclasses import dataclass

from .momcap import ConfigError


class Arch(enum.Enum):
    ENCODER_ONLY = "encoder_only"
    ENCODER_DECODER = "encoder_decoder"


@dataclass(frozen=True)
class ModelConfig:
    name: str
    params: str
    layers: int
    seq_len: int
    heads: int
    d_model: int
    d_ff: int
    arch: Arch = Arch.ENCODER_ONLY
    activation: str = "gelu"

    def __post_init__(self):
        for attr in ("layers", "seq_len", "heads", "d_model", "d_ff"):
            if getattr(self, attr) < 1:
                raise ConfigError(f"model.{attr} must be >= 1")
        if self.d_model % self.heads:
            raise ConfigError(f"d_model {self.d_model} not divisible by heads {self.heads}")
        if self.activation not in ("relu", "gelu"):
            raise ConfigError(f"model.activation must be relu or gelu, got {self.activation!r}")

    @property
    def head_dim(self) -> int:
        return self.d_model // self.heads


BUILTIN = {
    "Transformer-base": ModelConfig("Transformer-base", "52M", 2, 128, 8, 512, 2048,
                                    Arch.ENCODER_DECODER, "relu"),
    "BERT-base": ModelConfig("BERT-base", "108M", 12, 128, 12, 768, 3072),
    "ALBERT-base": ModelConfig("ALBERT-base", "12M", 12, 128, 12, 768, 3072),
    "ViT-base": ModelConfig("ViT-base", "86M", 12, 256, 12, 768, 3072),
    "OPT-350": ModelConfig("OPT-350", "350M", 12, 2048, 12, 768, 3072),
}
_ALIASES = {k.lower(): k for k in BUILTIN}
_ALIASES["albert-base"] = "ALBERT-base"


def builtin(name: str) -> ModelConfig:
    key = _ALIASES.get(name.lower())
    if key is None:
        raise ConfigError(f"unknown model {name!r}; choose from {', '.join(BUILTIN)}")
    return BUILTIN[key]


@dataclass(frozen=True)
class Op:
    """One operation of a layer.

    MatMuls are ``heads`` independent products of ``rows x inner`` by
    ``inner x cols``. ``a``/``b``/``out`` name the tensors for shape chaining.
    """

    kind: str  # matmul | softmax | activation | norm
    name: str
    layer: int
    block: str  # encoder | decoder
    rows: int
    inner: int
    cols: int
    heads: int = 1
    a: str = ""
    b: str = ""
    out: str = ""
    fn: str = ""

    @property
    def macs(self) -> int:
        return self.heads * self.rows * self.inner * self.cols if self.kind == "matmul" else 0


@dataclass(frozen=True)
class OpGraph:
    model: ModelConfig
    ops: tuple[Op, ...]

    def layer_ops(self, block: str, layer: int) -> list[Op]:
        return [o for o in self.ops if o.block == block and o.layer == layer]

    @property
    def macs(self) -> int:
        return sum(o.macs for o in self.ops)


def _attention(cfg: ModelConfig, layer: int, block: str, prefix: str, kv_src: str, x: str) -> list[Op]:
    n, d, h, hd = cfg.seq_len, cfg.d_model, cfg.heads, cfg.head_dim
    p = f"{prefix}"
    return [
        Op("matmul", f"{p}q", layer, block, n, d, d, a=x, b="Wq", out=f"{p}Q"),
        Op("matmul", f"{p}k", layer, block, n, d, d, a=kv_src, b="Wk", out=f"{p}K"),
        Op("matmul", f"{p}v", layer, block, n, d, d, a=kv_src, b="Wv", out=f"{p}V"),
        # 1/sqrt(D) is folded into the query weights
        Op("matmul", f"{p}scores", layer, block, n, hd, n, heads=h, a=f"{p}Q", b=f"{p}K^T", out=f"{p}Y"),
        Op("softmax", f"{p}softmax", layer, block, n, 1, n, heads=h, a=f"{p}Y", out=f"{p}S"),
        Op("matmul", f"{p}sv", layer, block, n, n, hd, heads=h, a=f"{p}S", b=f"{p}V", out=f"{p}Z"),
        Op("matmul", f"{p}out", layer, block, n, d, d, a=f"{p}Z", b="Wo", out=f"{p}O"),
        Op("norm", f"{p}norm", layer, block, n, 1, d, a=f"{p}O", out=f"{p}X"),
    ]


def _ffn(cfg: ModelConfig, layer: int, block: str, x: str) -> list[Op]:
    n, d, f = cfg.seq_len, cfg.d_model, cfg.d_ff
    return [
        Op("matmul", "ffn1", layer, block, n, d, f, a=x, b="W1", out="H"),
        Op("activation", "act", layer, block, n, 1, f, a="H", out="A", fn=cfg.activation),
        Op("matmul", "ffn2", layer, block, n, f, d, a="A", b="W2", out="F"),
        Op("norm", "ffn_norm", layer, block, n, 1, d, a="F", out="X"),
    ]


def decompose(cfg: ModelConfig) -> OpGraph:
    ops: list[Op] = []
    for layer in range(cfg.layers):
        ops += _attention(cfg, layer, "encoder", "", "X", "X")
        ops += _ffn(cfg, layer, "encoder", "X")
    if cfg.arch is Arch.ENCODER_DECODER:
        for layer in range(cfg.layers):
            ops += _attention(cfg, layer, "decoder", "self_", "X", "X")
            ops += _attention(cfg, layer, "decoder", "cross_", "M", "self_X")
            ops += _ffn(cfg, layer, "decoder", "cross_X")
    return OpGraph(cfg, tuple(ops))


def mac_count(cfg: ModelConfig) -> int:
    n, d, f = cfg.seq_len, cfg.d_model, cfg.d_ff
    attn = 4 * n * d * d + 2 * cfg.heads * n * n * cfg.head_dim
    ffn = 2 * n * d * f
    total = cfg.layers * (attn + ffn)
    if cfg.arch is Arch.ENCODER_DECODER:
        total += cfg.layers * (2 * attn + ffn)
    return total


def check_shapes(graph: OpGraph) -> None:
    """Verify that every MatMul/softmax chains with its producers."""
    cfg = graph.model
    n, d = cfg.seq_len, cfg.d_model
    for o in graph.ops:
        if o.kind == "matmul":
            if o.heads == 1:
                if o.rows != n or o.inner not in (d, cfg.d_ff) or o.cols not in (d, cfg.d_ff):
                    raise ConfigError(f"bad linear shape in {o.name}")
            elif o.heads * (o.inner if o.name.endswith("scores") else o.cols) != d:
                raise ConfigError(f"head split mismatch in {o.name}")
            elif o.name.endswith("scores") and (o.rows, o.cols) != (n, n):
                raise ConfigError(f"score matrix of {o.name} is not N x N")
        elif o.kind == "softmax" and (o.rows, o.cols) != (n, n):
            raise ConfigError(f"softmax {o.name} is not over N x N scores")
