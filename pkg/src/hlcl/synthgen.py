"""Homophily-controlled synthetic graphs and the seven-node toy graphs."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .graph import CsrGraph, Labels


class InfeasibleSpecError(ValueError):
    pass


@dataclass(frozen=True)
class SynthSpec:
    n_nodes: int = 500
    n_classes: int = 2
    avg_degree: float = 10.0
    target_beta: float = 0.5
    feature_dim: int = 16
    class_mean_separation: float = 2.0
    feature_std: float = 1.0
    seed: int = 0

    def validate(self) -> None:
        if self.n_classes < 2:
            raise InfeasibleSpecError("need at least two classes")
        if self.n_nodes < 2 * self.n_classes:
            raise InfeasibleSpecError("need at least two nodes per class")
        if self.avg_degree < 1:
            raise InfeasibleSpecError("avg_degree must be >= 1")
        if not 0.0 <= self.target_beta <= 1.0:
            raise InfeasibleSpecError("target_beta must lie in [0, 1]")
        if self.feature_dim < self.n_classes or self.feature_std < 0:
            raise InfeasibleSpecError("feature_dim must be >= n_classes and feature_std >= 0")
        sizes = class_sizes(self.n_nodes, self.n_classes)
        same = sum(s * (s - 1) // 2 for s in sizes)
        total = self.n_nodes * (self.n_nodes - 1) // 2
        want = n_target_edges(self)
        # expected demand must fit with room to spare for rejection sampling
        if self.target_beta > 0 and self.target_beta * want > 0.5 * same:
            raise InfeasibleSpecError(f"{self.target_beta * want:.0f} intra-class edges requested, {same} pairs exist")
        if self.target_beta < 1 and (1 - self.target_beta) * want > 0.5 * (total - same):
            raise InfeasibleSpecError("too many inter-class edges requested for the class sizes")


def class_sizes(n: int, c: int) -> list[int]:
    return [len(b) for b in np.array_split(np.arange(n), c)]


def block_labels(n: int, c: int) -> np.ndarray:
    """Contiguous, nearly equal class blocks."""
    return np.concatenate([np.full(s, k) for k, s in enumerate(class_sizes(n, c))])


def n_target_edges(spec: SynthSpec) -> int:
    return math.ceil(spec.n_nodes * spec.avg_degree / 2)


def mean_grid(n_classes: int, dim: int) -> np.ndarray:
    """Class centres with unit pairwise distance, centred at the origin.

    Class c sits on axis c (a regular simplex), so ``separation`` is the
    Euclidean distance between any two class means. Needs dim >= n_classes.
    """
    if dim < n_classes:
        raise InfeasibleSpecError(f"feature_dim {dim} < n_classes {n_classes}")
    grid = np.eye(n_classes, dim) / np.sqrt(2.0)
    return grid - grid.mean(axis=0)


def generate(spec: SynthSpec):
    """Sample (graph, features, labels) with controlled edge homophily.

    Every edge independently becomes intra-class with probability
    ``target_beta`` and joins a uniformly chosen non-adjacent pair of that
    type. Features are isotropic Gaussians around ``separation * grid[c]``.
    """
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    n, c = spec.n_nodes, spec.n_classes
    labels = block_labels(n, c)
    starts = np.concatenate([[0], np.cumsum(class_sizes(n, c))])
    target = n_target_edges(spec)
    seen: set[int] = set()
    edges = []
    attempts = 0
    max_attempts = 100 * target
    while len(edges) < target:
        intra = rng.random() < spec.target_beta
        while True:
            attempts += 1
            if attempts > max_attempts:
                raise InfeasibleSpecError(f"gave up after {max_attempts} sampling attempts")
            u = int(rng.integers(n))
            cu = labels[u]
            if intra:
                v = int(rng.integers(starts[cu], starts[cu + 1]))
            else:
                # uniform over nodes outside u's class
                r = int(rng.integers(n - (starts[cu + 1] - starts[cu])))
                v = r if r < starts[cu] else r + (starts[cu + 1] - starts[cu])
            if u == v:
                continue
            key = min(u, v) * n + max(u, v)
            if key in seen:
                continue
            seen.add(key)
            edges.append((u, v))
            break
    g = CsrGraph.from_edges(n, edges)
    means = spec.class_mean_separation * mean_grid(c, spec.feature_dim)
    x = means[labels] + spec.feature_std * rng.standard_normal((n, spec.feature_dim))
    return g, x, Labels(labels, c)


# -- toy graphs ----------------------------------------------------------------

class ToyCase(enum.Enum):
    HIGH = "high"
    MIXED = "mixed"
    LOW = "low"

    @classmethod
    def parse(cls, s) -> "ToyCase":
        if isinstance(s, cls):
            return s
        key = str(s).strip().lower()
        aliases = {"high": cls.HIGH, "highhomophily": cls.HIGH, "mixed": cls.MIXED,
                   "low": cls.LOW, "lowhomophily": cls.LOW}
        try:
            return aliases[key.replace("_", "").replace("-", "")]
        except KeyError:
            raise ValueError(f"unknown toy case {s!r}") from None


TOY_LABELS = np.array([0, 0, 0, 0, 1, 1, 1])

# Nodes 0-3 form class 0 (mean -5), nodes 4-6 class 1 (mean +5).
TOY_EDGES = {
    # a 4-cycle and a triangle; no edge crosses classes
    ToyCase.HIGH: [(0, 1), (1, 2), (2, 3), (0, 3), (4, 5), (5, 6), (4, 6)],
    # every edge crosses classes; each class-0 node has exactly two
    # neighbors (uneven degrees inside a class swamp the separation score)
    ToyCase.LOW: [(0, 4), (0, 5), (1, 4), (1, 6), (2, 5), (2, 6), (3, 4), (3, 5)],
    # three intra-class and three cross-class edges
    ToyCase.MIXED: [(0, 1), (2, 3), (5, 6), (1, 4), (2, 5), (3, 6)],
}

TOY_FEATURE_DIM = 200
TOY_CLASS_MEANS = (-5.0, 5.0)
TOY_STD = 1.0


def toy_graph(case, seed: int = 0):
    """Seven-node two-class graph with 200-d Gaussian features."""
    case = ToyCase.parse(case)
    rng = np.random.default_rng(seed)
    means = np.array(TOY_CLASS_MEANS)[TOY_LABELS]
    x = means[:, None] + TOY_STD * rng.standard_normal((len(TOY_LABELS), TOY_FEATURE_DIM))
    g = CsrGraph.from_edges(len(TOY_LABELS), TOY_EDGES[case])
    return g, x, Labels(TOY_LABELS.copy(), 2)


DESK_FEATURE_DIM = 64


def desk_spec(target_beta: float, seed: int = 0) -> SynthSpec:
    """The 500-node two-class benchmark used by the shipped desk configs."""
    return SynthSpec(n_nodes=500, n_classes=2, avg_degree=10.0, target_beta=target_beta,
                     feature_dim=DESK_FEATURE_DIM, class_mean_separation=2.0, feature_std=1.0, seed=seed)
