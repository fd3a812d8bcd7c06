"""Frozen-embedding evaluation with an l2-regularized softmax classifier."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .graph import Labels, check_features, save_features


@dataclass(frozen=True)
class SplitSpec:
    train_frac: float = 0.10
    val_frac: float = 0.10
    test_frac: float = 0.80
    seed: int = 0

    def __post_init__(self):
        fr = (self.train_frac, self.val_frac, self.test_frac)
        if min(fr) <= 0 or abs(sum(fr) - 1.0) > 1e-12:
            raise ValueError(f"split fractions must be positive and sum to 1, got {fr}")


@dataclass
class ProbeResult:
    train_acc: float
    val_acc: float
    test_acc: float
    weights: np.ndarray
    bias: np.ndarray
    n_iter: int = 0
    objective_trace: list = field(default_factory=list, repr=False)


def make_split(n: int, spec: SplitSpec = SplitSpec()):
    """Seeded shuffle, then contiguous train / val / test cuts."""
    n_train = int(np.floor(spec.train_frac * n + 1e-9))
    n_val = int(np.floor(spec.val_frac * n + 1e-9))
    if n_train < 1 or n_val < 1 or n - n_train - n_val < 1:
        raise ValueError(f"n={n} is too small for non-empty splits")
    perm = np.random.default_rng(spec.seed).permutation(n)
    return perm[:n_train], perm[n_train:n_train + n_val], perm[n_train + n_val:]


def _objective(x, onehot, w, b, l2):
    logits = x @ w + b
    logits -= logits.max(axis=1, keepdims=True)
    logp = logits - np.log(np.exp(logits).sum(axis=1, keepdims=True))
    loss = -np.sum(onehot * logp) / len(x) + 0.5 * l2 * np.sum(w * w)
    return loss, np.exp(logp)


def fit_softmax(x, classes, n_classes, l2=1e-4, tol=1e-6, max_iter=2000):
    """Full-batch gradient descent with Armijo backtracking.

    Minimises mean cross-entropy + (l2/2)||W||^2; the bias is not
    penalised. Returns (W, b, iterations, accepted objective values).
    """
    n, d = x.shape
    onehot = np.eye(n_classes)[classes]
    w = np.zeros((d, n_classes))
    b = np.zeros(n_classes)
    f, p = _objective(x, onehot, w, b, l2)
    trace = [f]
    step = 1.0
    it = 0
    for it in range(1, max_iter + 1):
        gz = (p - onehot) / n
        gw = x.T @ gz + l2 * w
        gb = gz.sum(axis=0)
        gmax = max(np.abs(gw).max(initial=0.0), np.abs(gb).max())
        if gmax < tol:
            break
        sq = np.sum(gw * gw) + np.sum(gb * gb)
        step *= 2.0
        while True:
            w_new, b_new = w - step * gw, b - step * gb
            f_new, p_new = _objective(x, onehot, w_new, b_new, l2)
            if f_new <= f - 1e-4 * step * sq:
                break
            step *= 0.5
            if step < 1e-20:
                return w, b, it, trace
        w, b, f, p = w_new, b_new, f_new, p_new
        trace.append(f)
    return w, b, it, trace


def _accuracy(x, classes, w, b) -> float:
    return float(np.mean(np.argmax(x @ w + b, axis=1) == classes))


def linear_probe(emb, y: Labels, split: SplitSpec = SplitSpec(), l2: float = 1e-4) -> ProbeResult:
    if l2 < 0:
        raise ValueError("l2 must be non-negative")
    emb = check_features(emb)
    if len(y) != emb.shape[0]:
        raise ValueError(f"{len(y)} labels for {emb.shape[0]} embeddings")
    tr, va, te = make_split(emb.shape[0], split)
    missing = sorted(set(range(y.n_classes)) - set(y.classes[tr].tolist()))
    if missing:
        warnings.warn(f"classes {missing} have no training nodes and cannot be predicted", stacklevel=2)
    w, b, it, trace = fit_softmax(emb[tr], y.classes[tr], y.n_classes, l2)
    return ProbeResult(
        _accuracy(emb[tr], y.classes[tr], w, b),
        _accuracy(emb[va], y.classes[va], w, b),
        _accuracy(emb[te], y.classes[te], w, b),
        w, b, it, trace,
    )


def evaluate(emb, y: Labels, seeds=range(10), l2: float = 1e-4) -> list[ProbeResult]:
    """One probe per split seed."""
    return [linear_probe(emb, y, SplitSpec(seed=s), l2) for s in seeds]


def summarize(results) -> dict:
    out = {}
    for key in ("train_acc", "val_acc", "test_acc"):
        vals = np.array([getattr(r, key) for r in results])
        out[key] = (float(vals.mean()), float(vals.std()))
    return out


def export_embeddings(emb, path) -> None:
    save_features(emb, path)
