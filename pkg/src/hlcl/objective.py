"""Contrastive objectives, their analytic gradients, and the optimizer."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .encoder import PARAM_NAMES, EncoderParams, ForwardTrace, forward
from .filters import FilterKind, apply_filter

COS_EPS = 1e-12


@dataclass
class LossValue:
    total: float
    per_node: np.ndarray  # l(z_l, z_h) + l(z_h, z_l) for each node


def _check_tau(tau):
    if not tau > 0:
        raise ValueError(f"temperature must be positive, got {tau}")


def cosine_sim(u, v) -> float:
    u, v = np.asarray(u, dtype=np.float64), np.asarray(v, dtype=np.float64)
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu < COS_EPS or nv < COS_EPS:
        return 0.0
    return float(np.clip(u @ v / (nu * nv), -1.0, 1.0))


def _unit_rows(z):
    norms = np.sqrt(np.sum(z * z, axis=1))
    ok = norms >= COS_EPS
    safe = np.where(ok, norms, 1)
    return z / safe[:, None] * ok[:, None], norms, ok


def _unit_rows_backward(grad_unit, unit, norms, ok):
    """Pull a gradient on the normalized rows back to the raw rows."""
    radial = np.sum(unit * grad_unit, axis=1, keepdims=True)
    safe = np.where(ok, norms, 1)
    return (grad_unit - unit * radial) / safe[:, None] * ok[:, None]


def row_cosines(zl, zh) -> np.ndarray:
    ul, _, _ = _unit_rows(zl)
    uh, _, _ = _unit_rows(zh)
    return np.sum(ul * uh, axis=1)


def hlcl_loss(zl, zh, tau: float) -> LossValue:
    """Negative mean positive-pair agreement between the two filtered views.

    No negative pairs are involved: each node's low-pass projection is
    pulled toward its own high-pass projection and vice versa.
    """
    _check_tau(tau)
    zl, zh = np.asarray(zl), np.asarray(zh)
    if zl.shape != zh.shape:
        raise ValueError(f"view shapes differ: {zl.shape} vs {zh.shape}")
    cos = row_cosines(zl, zh)
    per_node = cos / tau + cos / tau
    n = len(cos)
    return LossValue(float(-np.sum(per_node) / (2 * n)), per_node)


def _hlcl_grad(zl, zh, tau):
    n = zl.shape[0]
    ul, nl, okl = _unit_rows(zl)
    uh, nh, okh = _unit_rows(zh)
    coef = -1.0 / (n * tau)
    # d cos / d u_l = u_h on the unit sphere, then project out the radial part
    gl = _unit_rows_backward(coef * uh, ul, nl, okl)
    gh = _unit_rows_backward(coef * ul, uh, nh, okh)
    return gl, gh


def _logsumexp_rows(a):
    mx = np.max(a, axis=1, keepdims=True)
    e = np.exp(a - mx)
    s = np.sum(e, axis=1, keepdims=True)
    return (mx + np.log(s))[:, 0], e / s


def _infonce_side(ua, ub, tau):
    """Per-anchor loss with anchors from view a; returns loss terms and
    the softmax weights over [cross-view | same-view] candidates."""
    n = ua.shape[0]
    cross = ua @ ub.T / tau
    same = ua @ ua.T / tau
    same[np.diag_indices(n)] = -np.inf
    lse, p = _logsumexp_rows(np.concatenate([cross, same], axis=1))
    return lse - np.diag(cross), p[:, :n], p[:, n:]


def infonce_loss(u, v, tau: float) -> float:
    """Symmetrised InfoNCE with in-batch cross-view and same-view negatives."""
    return float(_infonce(u, v, tau)[0])


def _infonce(u, v, tau, need_grad=False):
    _check_tau(tau)
    u, v = np.asarray(u), np.asarray(v)
    if u.shape != v.shape:
        raise ValueError(f"view shapes differ: {u.shape} vs {v.shape}")
    n = u.shape[0]
    if n < 2:
        raise ValueError("InfoNCE needs at least two nodes")
    uu, nu, oku = _unit_rows(u)
    uv, nv, okv = _unit_rows(v)
    lu, pu_cross, pu_same = _infonce_side(uu, uv, tau)
    lv, pv_cross, pv_same = _infonce_side(uv, uu, tau)
    loss = 0.5 * (np.mean(lu) + np.mean(lv))
    if not need_grad:
        return loss, None, None
    scale = 0.5 / (n * tau)
    eye = np.eye(n)
    gu_cross = (pu_cross - eye) * scale  # d/d(uu @ uv.T)
    gu_same = pu_same * scale  # d/d(uu @ uu.T)
    gv_cross = (pv_cross - eye) * scale
    gv_same = pv_same * scale
    d_uu = gu_cross @ uv + (gu_same + gu_same.T) @ uu + gv_cross.T @ uv
    d_uv = gv_cross @ uu + (gv_same + gv_same.T) @ uv + gu_cross.T @ uu
    return loss, _unit_rows_backward(d_uu, uu, nu, oku), _unit_rows_backward(d_uv, uv, nv, okv)


# -- backprop through the encoder -------------------------------------------

def channel_backward(params: EncoderParams, tr: ForwardTrace, dz: np.ndarray) -> dict[str, np.ndarray]:
    """Reverse pass of one channel given dL/dZ.

    The filter is symmetric, so its adjoint is the same filter.
    """
    g = {"P1": tr.q.T @ dz}
    db = (dz @ params.P1.T) * (tr.b > 0)
    g["P0"] = tr.h2.T @ db
    da2 = (db @ params.P0.T) * (tr.a2 > 0)
    g["W1"] = tr.fh1.T @ da2
    dh1 = apply_filter(tr.graph, tr.kind, da2 @ params.W1.T)
    da1 = dh1 * (tr.a1 > 0)
    g["W0"] = tr.fx.T @ da1
    return g


def _sum_grads(a, b):
    return {k: a[k] + b[k] for k in PARAM_NAMES}


def backward(params: EncoderParams, trace_low: ForwardTrace, trace_high: ForwardTrace, tau: float):
    """Loss and gradients of the two-filter objective.

    Both channels run through the same weights, so their contributions are
    summed into a single gradient per parameter.
    """
    if trace_low is None or trace_high is None:
        raise ValueError("backward needs forward traces for both channels")
    loss = hlcl_loss(trace_low.z, trace_high.z, tau)
    gl, gh = _hlcl_grad(trace_low.z, trace_high.z, tau)
    grads = _sum_grads(channel_backward(params, trace_low, gl), channel_backward(params, trace_high, gh))
    return loss, grads


def infonce_backward(params: EncoderParams, trace_a: ForwardTrace, trace_b: ForwardTrace, tau: float):
    if trace_a is None or trace_b is None:
        raise ValueError("backward needs forward traces for both views")
    loss, ga, gb = _infonce(trace_a.z, trace_b.z, tau, need_grad=True)
    return float(loss), _sum_grads(channel_backward(params, trace_a, ga), channel_backward(params, trace_b, gb))


def objective_value(params, view_a, view_b, tau, objective="hlcl", dtype=None) -> float:
    """Loss only, for a pair of (graph, features) views.

    ``objective="hlcl"`` encodes view_a low-pass and view_b high-pass;
    ``"infonce"`` encodes both views low-pass.
    """
    kinds = (FilterKind.LOW_PASS, FilterKind.HIGH_PASS) if objective == "hlcl" else (FilterKind.LOW_PASS,) * 2
    za = forward(*view_a, params, kinds[0], dtype=dtype).z
    zb = forward(*view_b, params, kinds[1], dtype=dtype).z
    if objective == "hlcl":
        _check_tau(tau)
        cos = row_cosines(za, zb)
        return -np.sum(cos / tau + cos / tau) / (2 * len(cos))
    return _infonce(za, zb, tau)[0]


def loss_and_grads(params, view_a, view_b, tau, objective="hlcl"):
    if objective == "hlcl":
        ta = forward(*view_a, params, FilterKind.LOW_PASS)
        tb = forward(*view_b, params, FilterKind.HIGH_PASS)
        loss, grads = backward(params, ta, tb, tau)
        return loss.total, grads
    if objective == "infonce":
        ta = forward(*view_a, params, FilterKind.LOW_PASS)
        tb = forward(*view_b, params, FilterKind.LOW_PASS)
        return infonce_backward(params, ta, tb, tau)
    raise ValueError(f"unknown objective {objective!r}")


# -- optimizer ---------------------------------------------------------------

@dataclass
class AdamState:
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)
    t: int = 0

    @classmethod
    def zeros_like(cls, params: EncoderParams) -> "AdamState":
        return cls([np.zeros_like(a) for a in params.arrays()], [np.zeros_like(a) for a in params.arrays()], 0)


def adam_step(params: EncoderParams, grads: dict, state: AdamState, lr: float = 1e-3,
              beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8) -> AdamState:
    """Bias-corrected Adam update, applied to ``params`` in place."""
    for name in PARAM_NAMES:
        g = grads[name]
        if g.shape != getattr(params, name).shape:
            raise ValueError(f"gradient for {name} has shape {g.shape}, expected {getattr(params, name).shape}")
        if not np.all(np.isfinite(g)):
            bad = int(np.sum(~np.isfinite(g)))
            raise FloatingPointError(f"non-finite gradient in {name}: {bad} of {g.size} entries")
    state.t += 1
    c1 = 1.0 - beta1 ** state.t
    c2 = 1.0 - beta2 ** state.t
    for i, (p, name) in enumerate(zip(params.arrays(), PARAM_NAMES)):
        g = grads[name]
        state.m[i] = beta1 * state.m[i] + (1.0 - beta1) * g
        state.v[i] = beta2 * state.v[i] + (1.0 - beta2) * g * g
        p -= lr * (state.m[i] / c1) / (np.sqrt(state.v[i] / c2) + eps)
    return state
