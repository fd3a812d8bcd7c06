"""Renormalized low-pass / high-pass graph operators.

The low-pass operator is D~^-1/2 (A + I) D~^-1/2 with D~ = D + I, and the
high-pass operator is its complement I - (low-pass). Both are applied either
materialized (``build_operator``) or matrix-free (``apply_filter``); the
matrix-free path is what the encoder uses.
"""
from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .graph import CsrGraph, Labels, check_features


class FilterKind(enum.Enum):
    LOW_PASS = "low"
    HIGH_PASS = "high"

    @classmethod
    def parse(cls, s) -> "FilterKind":
        if isinstance(s, cls):
            return s
        key = str(s).strip().lower()
        aliases = {"low": cls.LOW_PASS, "lp": cls.LOW_PASS, "lowpass": cls.LOW_PASS,
                   "high": cls.HIGH_PASS, "hp": cls.HIGH_PASS, "highpass": cls.HIGH_PASS}
        try:
            return aliases[key.replace("_", "").replace("-", "")]
        except KeyError:
            raise ValueError(f"unknown filter kind {s!r}") from None


class ConvergenceError(ArithmeticError):
    pass


@dataclass(frozen=True)
class SparseOperator:
    """Symmetric CSR matrix including its diagonal."""

    row_offsets: np.ndarray
    col_indices: np.ndarray
    values: np.ndarray

    @property
    def n(self) -> int:
        return len(self.row_offsets) - 1

    def to_scipy(self) -> sp.csr_array:
        return sp.csr_array((self.values, self.col_indices, self.row_offsets), shape=(self.n, self.n))

    def to_dense(self) -> np.ndarray:
        return self.to_scipy().toarray()


def renormalized_degrees(g: CsrGraph) -> np.ndarray:
    return g.degrees.astype(np.float64) + 1.0


def build_operator(g: CsrGraph, kind: FilterKind) -> SparseOperator:
    kind = FilterKind.parse(kind)
    n = g.n_nodes
    dt = renormalized_degrees(g)
    rows = np.repeat(np.arange(n), g.degrees)
    # merge the self-loop into each (sorted) row
    all_rows = np.concatenate([rows, np.arange(n)])
    all_cols = np.concatenate([g.col_indices, np.arange(n)])
    order = np.lexsort((all_cols, all_rows))
    r, c = all_rows[order], all_cols[order]
    diag = r == c
    low = np.where(diag, 1.0 / dt[r], 1.0 / np.sqrt(dt[r] * dt[c]))
    if kind is FilterKind.LOW_PASS:
        vals = low
    else:
        vals = np.where(diag, 1.0 - low, -low)
    offsets = np.zeros(n + 1, dtype=np.int64)
    offsets[1:] = np.cumsum(g.degrees + 1)
    return SparseOperator(offsets, c, vals)


def apply_filter(g: CsrGraph, kind: FilterKind, x: np.ndarray) -> np.ndarray:
    """Multiply ``x`` by the filter without forming the operator.

    Each node combines its own (self-loop) term with the degree-normalized
    sum over its neighbors; the high-pass output is ``x`` minus that.
    Accepts a 1-D signal or an (n, m) matrix.
    """
    kind = FilterKind.parse(kind)
    vec = np.ndim(x) == 1
    x2 = np.asarray(x)[:, None] if vec else np.asarray(x)
    if x2.shape[0] != g.n_nodes:
        raise ValueError(f"signal has {x2.shape[0]} rows, graph has {g.n_nodes} nodes")
    extended = x2.dtype == np.longdouble
    dt = renormalized_degrees(g).astype(np.longdouble if extended else np.float64)
    inv_sqrt = 1.0 / np.sqrt(dt)
    scaled = x2 * inv_sqrt[:, None]
    if extended:
        neigh = _neighbor_sum_generic(g, scaled)
    else:
        neigh = g.adjacency() @ scaled
    out = x2 / dt[:, None] + inv_sqrt[:, None] * neigh
    if kind is FilterKind.HIGH_PASS:
        out = x2 - out
    return out[:, 0] if vec else out


def _neighbor_sum_generic(g: CsrGraph, y: np.ndarray) -> np.ndarray:
    # dtype-preserving path (used by extended-precision oracles)
    out = np.zeros_like(y)
    rows = np.repeat(np.arange(g.n_nodes), g.degrees)
    np.add.at(out, rows, y[g.col_indices])
    return out


# -- eigen oracle -----------------------------------------------------------

def _round_robin(n: int):
    """Yield n-1 (or n) rounds of disjoint index pairs covering all pairs."""
    players = list(range(n)) + ([-1] if n % 2 else [])
    m = len(players)
    for _ in range(m - 1):
        pairs = [(players[i], players[m - 1 - i]) for i in range(m // 2)]
        yield [(min(p, q), max(p, q)) for p, q in pairs if p >= 0 and q >= 0]
        players = [players[0], players[-1]] + players[1:-1]


def jacobi_eigh(a: np.ndarray, tol: float = 1e-14, max_sweeps: int = 60):
    """Eigen-decomposition of a dense symmetric matrix by Jacobi rotations.

    Sweeps visit every off-diagonal pair once, in round-robin order so each
    round's rotations are disjoint and can be applied as one orthogonal
    similarity. Returns ascending eigenvalues and column eigenvectors.
    """
    a = np.array(a, dtype=np.float64)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError("matrix must be square")
    v = np.eye(n)
    if n == 1:
        return a.diagonal().copy(), v
    rounds = [np.array(r, dtype=np.int64).reshape(-1, 2) for r in _round_robin(n)]
    scale = max(np.linalg.norm(a), np.finfo(float).tiny)
    for _ in range(max_sweeps):
        off = np.linalg.norm(a - np.diag(a.diagonal()))
        if off <= tol * scale:
            break
        for pr in rounds:
            p, q = pr[:, 0], pr[:, 1]
            apq = a[p, q]
            rot = np.abs(apq) > 0
            if not rot.any():
                continue
            p, q, apq = p[rot], q[rot], apq[rot]
            theta = (a[q, q] - a[p, p]) / (2.0 * apq)
            t = np.sign(theta) / (np.abs(theta) + np.hypot(theta, 1.0))
            t[theta == 0] = 1.0
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c
            j = np.eye(n)
            j[p, p] = c
            j[q, q] = c
            j[p, q] = s
            j[q, p] = -s
            a = j.T @ a @ j
            a = 0.5 * (a + a.T)
            v = v @ j
    else:
        raise ConvergenceError(f"Jacobi did not converge in {max_sweeps} sweeps")
    w = a.diagonal().copy()
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


def symmetric_eigen(op: SparseOperator):
    if op.n > 256:
        raise ValueError("the Jacobi oracle is limited to n <= 256")
    return jacobi_eigh(op.to_dense())


# -- filter iteration study ---------------------------------------------------

def separation_score(x: np.ndarray, y: Labels, eps: float = 1e-12) -> float:
    """Centroid distance over summed mean within-class spread.

    With more than two classes, the score is averaged over class pairs.
    """
    present = [c for c in range(y.n_classes) if np.any(y.classes == c)]
    if len(present) < 2:
        raise ValueError("separation needs at least two classes present")
    mu = {c: x[y.classes == c].mean(axis=0) for c in present}
    spread = {c: float(np.mean(np.linalg.norm(x[y.classes == c] - mu[c], axis=1))) for c in present}
    scores = [np.linalg.norm(mu[a] - mu[b]) / (spread[a] + spread[b] + eps)
              for a, b in itertools.combinations(present, 2)]
    return float(np.mean(scores))


def filter_iteration_study(g: CsrGraph, x, y: Labels, kind: FilterKind, n_iters: int) -> np.ndarray:
    """Separation score after 0..n_iters repeated filter applications."""
    x = check_features(x, g.n_nodes)
    if len(y) != g.n_nodes:
        raise ValueError("label count does not match graph")
    trace = [separation_score(x, y)]
    for _ in range(n_iters):
        x = apply_filter(g, kind, x)
        trace.append(separation_score(x, y))
    return np.array(trace)
