"""Explicit topology and feature augmentations applied per channel."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .graph import CsrGraph

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def splitmix64(x: int) -> int:
    z = x & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def sub_seed(seed: int, k: int) -> int:
    """Derived stream ``splitmix64(seed + (k + 1) * 0x9E3779B97F4A7C15 mod 2**64)``.

    k=0 is the low-pass channel, k=1 the high-pass channel.
    """
    return splitmix64((seed + (k + 1) * _GOLDEN) & _MASK64)


class AugKind(enum.Enum):
    NONE = "none"
    EDGE_REMOVE = "er"
    EDGE_ADD = "ea"
    NODE_DROP = "nd"
    FEATURE_MASK = "fm"
    FEATURE_DROP = "fd"


class AugmentationError(ValueError):
    pass


@dataclass(frozen=True)
class AugmentationSpec:
    kind: AugKind = AugKind.NONE
    rate: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.rate <= 1.0:
            raise ValueError(f"augmentation rate must lie in [0, 1], got {self.rate}")

    @classmethod
    def parse(cls, text: str) -> "AugmentationSpec":
        """Parse ``"er:0.3"``-style strings; ``"none"`` disables."""
        s = text.strip().lower()
        if s in ("", "none"):
            return cls()
        name, _, rate = s.partition(":")
        try:
            kind = AugKind(name)
        except ValueError:
            raise ValueError(f"unknown augmentation {name!r}") from None
        if not rate:
            raise ValueError(f"augmentation {text!r} needs a rate, e.g. {name}:0.3")
        return cls(kind, float(rate))

    def __str__(self) -> str:
        return "none" if self.kind is AugKind.NONE else f"{self.kind.value}:{self.rate:g}"


def parse_pipeline(text) -> tuple[AugmentationSpec, ...]:
    """A channel's augmentations, joined with ``+`` (``"er:0.3+fm:0.3"``)."""
    if isinstance(text, AugmentationSpec):
        return (text,)
    if not isinstance(text, str):
        return tuple(text)
    specs = tuple(AugmentationSpec.parse(p) for p in text.split("+"))
    return tuple(s for s in specs if s.kind is not AugKind.NONE)


def format_pipeline(specs) -> str:
    return "+".join(str(s) for s in specs) or "none"


def _count(rate: float, total: int) -> int:
    # ceil that ignores float noise such as 0.3 * 10 = 3.0000000000000004
    return math.ceil(round(rate * total, 9))


def augment(g: CsrGraph, x: np.ndarray, spec: AugmentationSpec, seed: int):
    """Apply one augmentation; returns a new (graph, features) pair.

    Node dropping keeps the node count: dropped nodes become isolated rows
    of zeros, so rows stay aligned across views.
    """
    kind = spec.kind
    if kind is AugKind.NONE or spec.rate == 0.0:
        return g, x
    rng = np.random.default_rng(seed)
    n = g.n_nodes
    if kind is AugKind.EDGE_REMOVE:
        edges = g.edge_array()
        keep = rng.random(len(edges)) >= spec.rate
        return CsrGraph.from_edges(n, edges[keep]), x
    if kind is AugKind.EDGE_ADD:
        return _add_edges(g, _count(spec.rate, g.n_edges), rng), x
    if kind is AugKind.NODE_DROP:
        dropped = rng.random(n) < spec.rate
        edges = g.edge_array()
        keep = ~(dropped[edges[:, 0]] | dropped[edges[:, 1]])
        x = x.copy()
        x[dropped] = 0.0
        return CsrGraph.from_edges(n, edges[keep]), x
    if kind is AugKind.FEATURE_MASK:
        cols = rng.choice(x.shape[1], size=_count(spec.rate, x.shape[1]), replace=False)
        x = x.copy()
        x[:, cols] = 0.0
        return g, x
    if kind is AugKind.FEATURE_DROP:
        return g, np.where(rng.random(x.shape) < spec.rate, 0.0, x)
    raise AssertionError(kind)


def _add_edges(g: CsrGraph, k: int, rng) -> CsrGraph:
    n = g.n_nodes
    free = n * (n - 1) // 2 - g.n_edges
    if k > free:
        raise AugmentationError(f"cannot add {k} edges: only {free} non-edges exist")
    if k == 0:
        return g
    existing = g.edge_array()
    taken = set((existing[:, 0] * n + existing[:, 1]).tolist())
    added = []
    if k <= free // 2:
        chosen = set()
        while len(added) < k:
            u, v = rng.integers(n, size=2)
            if u == v:
                continue
            key = min(u, v) * n + max(u, v)
            if key in taken or key in chosen:
                continue
            chosen.add(key)
            added.append((min(u, v), max(u, v)))
    else:
        iu, ju = np.triu_indices(n, k=1)
        mask = ~np.isin(iu * n + ju, list(taken))
        cand = np.stack([iu[mask], ju[mask]], axis=1)
        added = cand[rng.choice(len(cand), size=k, replace=False)]
    return CsrGraph.from_edges(n, np.concatenate([existing, np.asarray(added, dtype=np.int64).reshape(-1, 2)]))


def augment_pipeline(g, x, specs, seed: int):
    """Apply augmentations in order, each on its own derived stream."""
    for i, spec in enumerate(parse_pipeline(specs)):
        g, x = augment(g, x, spec, sub_seed(seed, 2 + i))
    return g, x


def two_view_augment(g, x, spec_low, spec_high, seed: int):
    """Independently augmented inputs for the low-pass and high-pass channels."""
    low = augment_pipeline(g, x, spec_low, sub_seed(seed, 0))
    high = augment_pipeline(g, x, spec_high, sub_seed(seed, 1))
    return low, high
