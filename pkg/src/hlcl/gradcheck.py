"""Finite-difference verification of the analytic gradients.

The reference loss is evaluated by an independent dense forward pass in
40-digit arithmetic (mpmath), so finite-difference noise stays far below
the tolerance even for entries whose true gradient is near zero.
"""
from __future__ import annotations

from dataclasses import dataclass

import mpmath
import numpy as np

from .encoder import PARAM_NAMES, EncoderParams, init_params
from .graph import CsrGraph
from .objective import loss_and_grads

_mp = mpmath.mp


@dataclass
class Instance:
    params: EncoderParams
    view_a: tuple  # (graph, features)
    view_b: tuple
    tau: float


@dataclass
class GradcheckReport:
    max_rel_error: float
    per_param: dict  # name -> worst relative error over all instances
    n_instances: int
    n_entries: int


def random_instance(seed: int) -> Instance:
    """Small random problem: n <= 8, m <= 5, every width <= 4.

    The second view drops some edges and feature entries of the first, so
    the two channels see different inputs as they do during training.
    """
    rng = np.random.default_rng(seed)
    n = int(rng.integers(3, 9))
    m = int(rng.integers(2, 6))
    d1, d2, dp = (int(v) for v in rng.integers(2, 5, size=3))
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    keep = [p for p in pairs if rng.random() < 0.5]
    g = CsrGraph.from_edges(n, keep)
    g2 = CsrGraph.from_edges(n, [p for p in keep if rng.random() < 0.7])
    x = rng.normal(size=(n, m))
    x2 = x * (rng.random(x.shape) > 0.2)
    params = init_params(m, d1, d2, dp, seed=int(rng.integers(2**31)))
    return Instance(params, (g, x), (g2, x2), float(rng.uniform(0.3, 1.0)))


# -- high precision dense reference ------------------------------------------

def _mp_matrix(a):
    return np.array([[_mp.mpf(float(v)) for v in row] for row in np.atleast_2d(a)], dtype=object)


def _mp_filter(g: CsrGraph, kind: str):
    n = g.n_nodes
    a = np.array([[_mp.mpf(0)] * n for _ in range(n)], dtype=object)
    for u, v in g.edge_array():
        a[u, v] = a[v, u] = _mp.mpf(1)
    for i in range(n):
        a[i, i] = _mp.mpf(1)
    inv_sqrt = [1 / _mp.sqrt(sum(a[i])) for i in range(n)]
    low = np.array([[a[i, j] * inv_sqrt[i] * inv_sqrt[j] for j in range(n)] for i in range(n)], dtype=object)
    if kind == "low":
        return low
    eye = np.array([[_mp.mpf(int(i == j)) for j in range(n)] for i in range(n)], dtype=object)
    return eye - low


def _relu(a):
    return np.where(a > 0, a, _mp.mpf(0))


def _mp_project(f, x, w):
    w0, w1, p0, p1 = w
    h1 = _relu(f.dot(x).dot(w0))
    h2 = _relu(f.dot(h1).dot(w1))
    return _relu(h2.dot(p0)).dot(p1)


def _mp_unit(z):
    out = []
    for row in z:
        nrm = _mp.sqrt(sum(v * v for v in row))
        out.append([v / nrm if nrm >= 1e-12 else _mp.mpf(0) for v in row])
    return np.array(out, dtype=object)


def _mp_loss(za, zb, tau, objective):
    ua, ub = _mp_unit(za), _mp_unit(zb)
    n = ua.shape[0]
    tau = _mp.mpf(tau)
    if objective == "hlcl":
        cos = [sum(ua[i] * ub[i]) for i in range(n)]
        return -sum(2 * c / tau for c in cos) / (2 * n)
    total = _mp.mpf(0)
    for p, q in ((ua, ub), (ub, ua)):
        for i in range(n):
            pos = _mp.exp(sum(p[i] * q[i]) / tau)
            den = pos + sum(_mp.exp(sum(p[i] * q[k]) / tau) + _mp.exp(sum(p[i] * p[k]) / tau)
                            for k in range(n) if k != i)
            total += -_mp.log(pos / den)
    return total / (2 * n)


class ReferenceLoss:
    """Dense high precision loss for a fixed pair of views."""

    def __init__(self, inst: Instance, objective: str = "hlcl"):
        kinds = ("low", "high") if objective == "hlcl" else ("low", "low")
        self.fa = _mp_filter(inst.view_a[0], kinds[0])
        self.fb = _mp_filter(inst.view_b[0], kinds[1])
        self.xa = _mp_matrix(inst.view_a[1])
        self.xb = _mp_matrix(inst.view_b[1])
        self.tau = inst.tau
        self.objective = objective

    def __call__(self, weights) -> "mpmath.mpf":
        za = _mp_project(self.fa, self.xa, weights)
        zb = _mp_project(self.fb, self.xb, weights)
        return _mp_loss(za, zb, self.tau, self.objective)


def check_instance(inst: Instance, objective: str = "hlcl", h: float = 1e-6, floor: float = 1e-8):
    """Worst relative error per parameter matrix for one instance."""
    with _mp.workdps(40):
        _, grads = loss_and_grads(inst.params, inst.view_a, inst.view_b, inst.tau, objective)
        ref = ReferenceLoss(inst, objective)
        weights = [_mp_matrix(a) for a in inst.params.arrays()]
        out = {}
        for k, name in enumerate(PARAM_NAMES):
            worst = 0.0
            w = weights[k]
            for idx in np.ndindex(w.shape):
                orig = w[idx]
                w[idx] = orig + h
                up = ref(weights)
                w[idx] = orig - h
                down = ref(weights)
                w[idx] = orig
                fd = float((up - down) / (2 * _mp.mpf(h)))
                err = abs(grads[name][idx] - fd) / max(floor, abs(fd))
                worst = max(worst, err)
            out[name] = worst
    return out


def gradcheck(n_instances: int = 10, seed: int = 0, objective: str = "hlcl", h: float = 1e-6) -> GradcheckReport:
    per_param = dict.fromkeys(PARAM_NAMES, 0.0)
    entries = 0
    for i in range(n_instances):
        inst = random_instance(seed * 1000 + i)
        errs = check_instance(inst, objective, h)
        entries += sum(a.size for a in inst.params.arrays())
        for name, e in errs.items():
            per_param[name] = max(per_param[name], e)
    per_param = {k: float(v) for k, v in per_param.items()}
    return GradcheckReport(max(per_param.values()), per_param, n_instances, entries)
