"""Shared-weight two-layer graph encoder and the projection head."""
from __future__ import annotations

import enum
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .filters import FilterKind, apply_filter
from .graph import CsrGraph

CHECKPOINT_MAGIC = b"HLP1"
_CKPT_HEADER = struct.Struct("<4sQQQQ")

PARAM_NAMES = ("W0", "W1", "P0", "P1")


class OutputMode(enum.Enum):
    LP = "lp"
    HP = "hp"
    CONCAT = "concat"
    AGGREGATE = "aggregate"

    @classmethod
    def parse(cls, s) -> "OutputMode":
        if isinstance(s, cls):
            return s
        try:
            return cls(str(s).strip().lower())
        except ValueError:
            raise ValueError(f"unknown output mode {s!r}; expected one of lp, hp, concat, aggregate") from None


@dataclass(eq=False)
class EncoderParams:
    """Encoder weights W0 (m x d1), W1 (d1 x d2) and head weights
    P0 (d2 x dp), P1 (dp x dp).

    One instance backs both filter channels; optimizers update the arrays
    in place.
    """

    W0: np.ndarray
    W1: np.ndarray
    P0: np.ndarray
    P1: np.ndarray

    def __post_init__(self):
        for name in PARAM_NAMES:
            setattr(self, name, np.ascontiguousarray(getattr(self, name), dtype=np.float64))
        m, d1 = self.W0.shape
        if self.W1.shape[0] != d1 or self.P0.shape[0] != self.W1.shape[1] or self.P1.shape != (self.P0.shape[1],) * 2:
            raise ValueError(f"parameter shapes do not chain: {self.shapes()}")
        for name, a in self.items():
            if not np.all(np.isfinite(a)):
                raise ValueError(f"{name} has non-finite entries")

    @property
    def dims(self) -> tuple[int, int, int, int]:
        return self.W0.shape[0], self.W0.shape[1], self.W1.shape[1], self.P0.shape[1]

    def shapes(self):
        return {n: a.shape for n, a in self.items()}

    def items(self):
        return [(n, getattr(self, n)) for n in PARAM_NAMES]

    def arrays(self) -> list[np.ndarray]:
        return [getattr(self, n) for n in PARAM_NAMES]

    def copy(self) -> "EncoderParams":
        return EncoderParams(*(a.copy() for a in self.arrays()))

    def assign(self, other: "EncoderParams") -> None:
        for a, b in zip(self.arrays(), other.arrays()):
            a[...] = b

    def equal(self, other: "EncoderParams") -> bool:
        return all(np.array_equal(a, b) for a, b in zip(self.arrays(), other.arrays()))


def glorot_bound(fan_in: int, fan_out: int) -> float:
    return float(np.sqrt(6.0 / (fan_in + fan_out)))


def init_params(m: int, d1: int = 128, d2: int = 128, dp: int = 128, seed: int = 0) -> EncoderParams:
    if min(m, d1, d2, dp) < 1:
        raise ValueError(f"all dimensions must be >= 1, got {(m, d1, d2, dp)}")
    rng = np.random.default_rng(seed)
    shapes = [(m, d1), (d1, d2), (d2, dp), (dp, dp)]
    return EncoderParams(*(rng.uniform(-glorot_bound(*s), glorot_bound(*s), size=s) for s in shapes))


def relu(x):
    return np.maximum(x, 0)


@dataclass
class ForwardTrace:
    """Intermediates of one channel's forward pass, kept for backprop."""

    graph: CsrGraph
    kind: FilterKind
    fx: np.ndarray  # F X
    a1: np.ndarray  # F X W0
    h1: np.ndarray
    fh1: np.ndarray  # F H1
    a2: np.ndarray
    h2: np.ndarray
    b: np.ndarray  # H2 P0
    q: np.ndarray
    z: np.ndarray = field(repr=False)


def encode(g: CsrGraph, x, params: EncoderParams, kind: FilterKind) -> np.ndarray:
    """Two filtered layers, ``relu(F relu(F X W0) W1)``."""
    return _encode(g, x, params, FilterKind.parse(kind))[-1]


def _encode(g, x, params, kind, dtype=None):
    w0, w1 = params.W0, params.W1
    if dtype is not None:
        x, w0, w1 = (np.asarray(a, dtype=dtype) for a in (x, w0, w1))
    if x.ndim != 2 or x.shape[1] != w0.shape[0]:
        raise ValueError(f"features of shape {x.shape} do not match W0 {w0.shape}")
    if x.shape[0] != g.n_nodes:
        raise ValueError(f"features have {x.shape[0]} rows, graph has {g.n_nodes} nodes")
    fx = apply_filter(g, kind, x)
    a1 = fx @ w0
    h1 = relu(a1)
    fh1 = apply_filter(g, kind, h1)
    a2 = fh1 @ w1
    return fx, a1, h1, fh1, a2, relu(a2)


def project(params: EncoderParams, h) -> np.ndarray:
    """Projection head ``relu(H P0) P1``; linear output layer."""
    return _project(params, h)[-1]


def _project(params, h, dtype=None):
    p0, p1 = params.P0, params.P1
    if dtype is not None:
        h, p0, p1 = (np.asarray(a, dtype=dtype) for a in (h, p0, p1))
    if h.ndim != 2 or h.shape[1] != p0.shape[0]:
        raise ValueError(f"embeddings of shape {h.shape} do not match P0 {p0.shape}")
    b = h @ p0
    q = relu(b)
    return b, q, q @ p1


def forward(g: CsrGraph, x, params: EncoderParams, kind: FilterKind, dtype=None) -> ForwardTrace:
    """Encode and project one channel, recording what backprop needs."""
    kind = FilterKind.parse(kind)
    fx, a1, h1, fh1, a2, h2 = _encode(g, x, params, kind, dtype)
    b, q, z = _project(params, h2, dtype)
    return ForwardTrace(g, kind, fx, a1, h1, fh1, a2, h2, b, q, z)


def final_embeddings(g: CsrGraph, x, params: EncoderParams, mode=OutputMode.LP) -> np.ndarray:
    """Inference-time representation; the projection head is not used."""
    mode = OutputMode.parse(mode)
    if mode is OutputMode.LP:
        return encode(g, x, params, FilterKind.LOW_PASS)
    if mode is OutputMode.HP:
        return encode(g, x, params, FilterKind.HIGH_PASS)
    lp = encode(g, x, params, FilterKind.LOW_PASS)
    hp = encode(g, x, params, FilterKind.HIGH_PASS)
    if mode is OutputMode.CONCAT:
        return np.concatenate([lp, hp], axis=1)
    return lp + hp


# -- checkpoints --------------------------------------------------------------

def save_params(params: EncoderParams, path) -> None:
    """HLP1: magic, u64 m, d1, d2, dp, then W0, W1, P0, P1 as LE f64."""
    with open(path, "wb") as fh:
        fh.write(_CKPT_HEADER.pack(CHECKPOINT_MAGIC, *params.dims))
        for a in params.arrays():
            fh.write(a.astype("<f8", copy=False).tobytes(order="C"))


def load_params(path) -> EncoderParams:
    raw = Path(path).read_bytes()
    if len(raw) < _CKPT_HEADER.size:
        raise ValueError(f"{path}: truncated checkpoint")
    magic, m, d1, d2, dp = _CKPT_HEADER.unpack_from(raw)
    if magic != CHECKPOINT_MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}")
    shapes = [(m, d1), (d1, d2), (d2, dp), (dp, dp)]
    expected = _CKPT_HEADER.size + 8 * sum(r * c for r, c in shapes)
    if len(raw) != expected:
        raise ValueError(f"{path}: expected {expected} bytes, found {len(raw)}")
    out, pos = [], _CKPT_HEADER.size
    for r, c in shapes:
        out.append(np.frombuffer(raw, dtype="<f8", count=r * c, offset=pos).astype(np.float64).reshape(r, c))
        pos += 8 * r * c
    return EncoderParams(*out)
