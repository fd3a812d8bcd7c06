"""Sparse undirected graphs, node features, labels and their file formats."""
from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

FEATURE_MAGIC = b"HLF1"
_HEADER = struct.Struct("<4sQQ")


class GraphFormatError(ValueError):
    """Malformed graph, feature or label input."""


class UndefinedRatioError(ValueError):
    pass


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class CsrGraph:
    """Simple undirected graph in compressed-row form.

    Rows hold sorted neighbor ids; every edge is stored twice (once per
    endpoint) and self-loops are never stored.
    """

    row_offsets: np.ndarray
    col_indices: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "row_offsets", _frozen(np.asarray(self.row_offsets, dtype=np.int64)))
        object.__setattr__(self, "col_indices", _frozen(np.asarray(self.col_indices, dtype=np.int64)))

    @property
    def n_nodes(self) -> int:
        return len(self.row_offsets) - 1

    @property
    def n_edges(self) -> int:
        return int(self.row_offsets[-1]) // 2

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self.row_offsets)

    def neighbors(self, i: int) -> np.ndarray:
        return self.col_indices[self.row_offsets[i]:self.row_offsets[i + 1]]

    @classmethod
    def from_edges(cls, n_nodes: int, edges) -> "CsrGraph":
        """Build from an iterable/array of (u, v) pairs.

        Duplicates and reversed pairs collapse into one undirected edge.
        """
        e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if n_nodes < 0:
            raise ValueError("n_nodes must be non-negative")
        if len(e) and (e.min() < 0 or e.max() >= n_nodes):
            raise GraphFormatError(f"node id out of range for n={n_nodes}")
        if np.any(e[:, 0] == e[:, 1]):
            raise GraphFormatError("self-loops are not allowed")
        src = np.concatenate([e[:, 0], e[:, 1]])
        dst = np.concatenate([e[:, 1], e[:, 0]])
        # unique over the linearised key sorts by (row, col)
        key = np.unique(src * max(n_nodes, 1) + dst)
        rows, cols = np.divmod(key, max(n_nodes, 1))
        offsets = np.zeros(n_nodes + 1, dtype=np.int64)
        np.cumsum(np.bincount(rows, minlength=n_nodes), out=offsets[1:])
        return cls(offsets, cols)

    def edge_array(self) -> np.ndarray:
        """Undirected edges as an (n_edges, 2) array with u < v, sorted."""
        rows = np.repeat(np.arange(self.n_nodes, dtype=np.int64), self.degrees)
        keep = rows < self.col_indices
        return np.stack([rows[keep], self.col_indices[keep]], axis=1)

    def adjacency(self) -> sp.csr_array:
        """Binary adjacency matrix sharing this graph's index arrays."""
        data = np.ones(len(self.col_indices), dtype=np.float64)
        return sp.csr_array((data, self.col_indices, self.row_offsets), shape=(self.n_nodes, self.n_nodes))

    def permute(self, perm) -> "CsrGraph":
        """Relabel node ``i`` as ``perm[i]``."""
        perm = np.asarray(perm, dtype=np.int64)
        return CsrGraph.from_edges(self.n_nodes, perm[self.edge_array()])

    def validate(self) -> None:
        n = self.n_nodes
        if self.row_offsets[0] != 0 or np.any(np.diff(self.row_offsets) < 0):
            raise GraphFormatError("row offsets must start at 0 and be non-decreasing")
        if self.row_offsets[-1] != len(self.col_indices) or len(self.col_indices) % 2:
            raise GraphFormatError("row_offsets[n] must equal 2 * n_edges")
        rows = np.repeat(np.arange(n), self.degrees)
        if len(rows) and (self.col_indices.min() < 0 or self.col_indices.max() >= n):
            raise GraphFormatError("column index out of range")
        if np.any(rows == self.col_indices):
            raise GraphFormatError("stored self-loop")
        same_row = rows[1:] == rows[:-1]
        if np.any(self.col_indices[1:][same_row] <= self.col_indices[:-1][same_row]):
            raise GraphFormatError("row entries must be strictly increasing")
        a = self.adjacency()
        if (a != a.T).nnz:
            raise GraphFormatError("adjacency is not symmetric")

    def __eq__(self, other) -> bool:
        if not isinstance(other, CsrGraph):
            return NotImplemented
        return np.array_equal(self.row_offsets, other.row_offsets) and np.array_equal(
            self.col_indices, other.col_indices
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class Labels:
    classes: np.ndarray
    n_classes: int

    def __post_init__(self):
        c = _frozen(np.asarray(self.classes, dtype=np.int64))
        object.__setattr__(self, "classes", c)
        if self.n_classes < 1:
            raise ValueError("n_classes must be >= 1")
        if len(c) and (c.min() < 0 or c.max() >= self.n_classes):
            raise ValueError(f"class ids must lie in [0, {self.n_classes})")

    @classmethod
    def from_array(cls, classes) -> "Labels":
        c = np.asarray(classes, dtype=np.int64)
        return cls(c, int(c.max()) + 1 if len(c) else 1)

    def __len__(self) -> int:
        return len(self.classes)


def check_features(x, n_nodes: int | None = None) -> np.ndarray:
    """Validate and return ``x`` as a C-contiguous float64 matrix."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise GraphFormatError(f"features must be 2-D, got shape {x.shape}")
    if n_nodes is not None and x.shape[0] != n_nodes:
        raise GraphFormatError(f"feature rows {x.shape[0]} != graph nodes {n_nodes}")
    if not np.all(np.isfinite(x)):
        raise GraphFormatError("features contain NaN or Inf")
    return x


# -- file formats -----------------------------------------------------------

def load_graph(path, n_nodes: int | None = None) -> CsrGraph:
    """Read a whitespace separated ``u v`` edge list (0-indexed).

    An optional first line ``# n=<count>`` declares the node count; otherwise
    it is ``max id + 1``. Other ``#`` lines and blank lines are skipped.
    """
    edges = []
    declared = n_nodes
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            s = line.strip()
            if not s:
                continue
            if s.startswith("#"):
                body = s[1:].strip().replace(" ", "")
                if body.startswith("n=") and declared is None:
                    try:
                        declared = int(body[2:])
                    except ValueError:
                        raise GraphFormatError(f"{path}:{lineno}: bad node count header {s!r}") from None
                continue
            parts = s.split()
            if len(parts) != 2:
                raise GraphFormatError(f"{path}:{lineno}: expected 'u v', got {s!r}")
            try:
                u, v = int(parts[0]), int(parts[1])
            except ValueError:
                raise GraphFormatError(f"{path}:{lineno}: non-integer node id in {s!r}") from None
            if u < 0 or v < 0:
                raise GraphFormatError(f"{path}:{lineno}: negative node id")
            if u == v:
                raise GraphFormatError(f"{path}:{lineno}: self-loop {u} {v}")
            if declared is not None and max(u, v) >= declared:
                raise GraphFormatError(f"{path}:{lineno}: node id {max(u, v)} >= declared n={declared}")
            edges.append((u, v))
    n = declared if declared is not None else (max(max(e) for e in edges) + 1 if edges else 0)
    return CsrGraph.from_edges(n, edges)


def save_graph(g: CsrGraph, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# n={g.n_nodes}\n")
        for u, v in g.edge_array():
            fh.write(f"{u} {v}\n")


def save_features(x, path) -> None:
    """Write the HLF1 binary: magic, u64 n, u64 m, row-major f64 values."""
    x = check_features(x)
    n, m = x.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(FEATURE_MAGIC, n, m))
        fh.write(x.astype("<f8", copy=False).tobytes(order="C"))


def _read_binary_features(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise GraphFormatError(f"{path}: truncated header")
    magic, n, m = _HEADER.unpack_from(raw)
    if magic != FEATURE_MAGIC:
        raise GraphFormatError(f"{path}: bad magic {magic!r}")
    body = raw[_HEADER.size:]
    if len(body) != 8 * n * m:
        raise GraphFormatError(f"{path}: expected {n * m} floats, found {len(body) / 8:g}")
    return np.frombuffer(body, dtype="<f8").astype(np.float64).reshape(n, m)


def _read_csv_features(path) -> np.ndarray:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            s = line.strip()
            if not s:
                continue
            try:
                rows.append([float(t) for t in s.split(",")])
            except ValueError:
                raise GraphFormatError(f"{path}:{lineno}: non-numeric value") from None
            if len(rows[-1]) != len(rows[0]):
                raise GraphFormatError(f"{path}:{lineno}: ragged row")
    return np.array(rows, dtype=np.float64).reshape(len(rows), -1)


def load_features(path, n: int | None = None, m: int | None = None) -> np.ndarray:
    """Load an HLF1 binary or comma separated text matrix.

    ``n``/``m`` are checked when given.
    """
    with open(path, "rb") as fh:
        head = fh.read(4)
    x = _read_binary_features(path) if head == FEATURE_MAGIC else _read_csv_features(path)
    if (n is not None and x.shape[0] != n) or (m is not None and x.shape[1] != m):
        raise GraphFormatError(f"{path}: shape {x.shape} does not match ({n}, {m})")
    if not np.all(np.isfinite(x)):
        raise GraphFormatError(f"{path}: NaN or Inf entry")
    return x


def load_labels(path, n_classes: int | None = None) -> Labels:
    vals = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            s = line.strip()
            if not s:
                continue
            try:
                vals.append(int(s))
            except ValueError:
                raise GraphFormatError(f"{path}:{lineno}: expected an integer label, got {s!r}") from None
    c = np.array(vals, dtype=np.int64)
    if len(c) and c.min() < 0:
        raise GraphFormatError(f"{path}: negative class id")
    if n_classes is None:
        return Labels.from_array(c)
    return Labels(c, n_classes)


def save_labels(y: Labels, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.writelines(f"{int(c)}\n" for c in y.classes)


# -- homophily --------------------------------------------------------------

def per_node_homophily(g: CsrGraph, y: Labels) -> np.ndarray:
    """Fraction of each node's neighbors sharing its label.

    Isolated nodes have no defined fraction and are reported as NaN.
    """
    if len(y) != g.n_nodes:
        raise ValueError(f"{len(y)} labels for {g.n_nodes} nodes")
    deg = g.degrees
    rows = np.repeat(np.arange(g.n_nodes), deg)
    same = (y.classes[rows] == y.classes[g.col_indices]).astype(np.float64)
    counts = np.bincount(rows, weights=same, minlength=g.n_nodes)
    out = np.full(g.n_nodes, np.nan)
    has = deg > 0
    out[has] = counts[has] / deg[has]
    return out


def homophily_ratio(g: CsrGraph, y: Labels) -> float:
    """Average same-label neighbor fraction over non-isolated nodes."""
    h = per_node_homophily(g, y)
    h = h[~np.isnan(h)]
    if len(h) == 0:
        raise UndefinedRatioError("homophily ratio is undefined: every node is isolated")
    return float(np.mean(h))
