"""Crop-aware fusion and the multi-positive contrastive loss.

Both networks are small, deterministic numpy MLPs: there is no training loop,
only forward passes, losses and hand-written backward passes so that every
gradient can be checked against finite differences.

Fusion of crop ``m``::

    F_mn = concat(h_n, enc(B_m) - enc(B_n))          n = 1..M
    w_m  = softmax(net(F_m1, ..., F_mM))              (M weights)
    u_m  = sum_n w_mn h_n

The default ``"mlp"`` variant reduces each ``F_mn`` to 256 channels, flattens
the ``M`` rows to ``256 M`` channels and maps them to ``M`` logits through
dense layers with tanh after every hidden layer. The ``"linear"`` variant maps
each ``F_mn`` to one logit with a single shared linear layer.

Contrastive projection::

    z = g(sigmoid(A h + a) * h),   g = [dense, l2norm] -> relu -> [dense, l2norm]

Weights are drawn uniformly from ``[-1/sqrt(fan_in), 1/sqrt(fan_in)]`` with a
Philox generator keyed by the seed; biases start at zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .crops import rng
from .encoding import DEFAULT_L, encoding_length, relative_matrix
from .errors import InvalidSpec, NotEnoughSamples, ShapeError

DEFAULT_TAU = 0.5


def _uniform(gen, fan_in, shape):
    a = 1.0 / np.sqrt(fan_in)
    return gen.uniform(-a, a, size=shape)


def softmax(x, axis=-1):
    e = np.exp(x - np.max(x, axis=axis, keepdims=True))
    return e / np.sum(e, axis=axis, keepdims=True)


def sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


class _Params:
    """Flat-vector access to an ordered ``weights`` dict, for gradient checks."""

    def flat(self):
        return np.concatenate([self.weights[k].reshape(-1) for k in self.weights])

    def with_flat(self, vec):
        vec = np.asarray(vec, dtype=np.float64)
        new, pos = {}, 0
        for k, v in self.weights.items():
            n = v.size
            new[k] = vec[pos : pos + n].reshape(v.shape)
            pos += n
        if pos != vec.size:
            raise ShapeError(f"expected {pos} parameters, got {vec.size}")
        return replace(self, weights=new)

    def with_weights(self, **arrays):
        new = dict(self.weights)
        for k, v in arrays.items():
            key = k.replace("__", ".")
            if key not in new:
                raise KeyError(key)
            new[key] = np.asarray(v, dtype=np.float64).reshape(new[key].shape)
        return replace(self, weights=new)

    def flatten_grads(self, grads):
        return np.concatenate([grads[k].reshape(-1) for k in self.weights])


@dataclass(frozen=True)
class FusionNet(_Params):
    m: int
    d: int
    L: int = DEFAULT_L
    variant: str = "mlp"
    coord_scale: float = 1.0
    weights: dict = field(default_factory=dict, repr=False)

    @property
    def in_dim(self):
        return self.d + 3 * encoding_length(self.L)

    @classmethod
    def init(cls, m, d, L=DEFAULT_L, seed=0, variant="mlp", hidden=(64,), reduce_dim=256, coord_scale=1.0):
        if variant not in ("mlp", "linear"):
            raise InvalidSpec(f"unknown fusion variant {variant!r}")
        gen = rng(seed)
        in_dim = d + 3 * encoding_length(L)
        weights = {}
        if variant == "linear":
            weights["linear.w"] = _uniform(gen, in_dim, (in_dim,))
            weights["linear.b"] = np.zeros(())
        else:
            weights["reduce.w"] = _uniform(gen, in_dim, (in_dim, reduce_dim))
            weights["reduce.b"] = np.zeros(reduce_dim)
            sizes = [reduce_dim * m, *hidden]
            for i, (a, b) in enumerate(zip(sizes[:-1], sizes[1:])):
                weights[f"fc{i}.w"] = _uniform(gen, a, (a, b))
                weights[f"fc{i}.b"] = np.zeros(b)
            weights["out.w"] = _uniform(gen, sizes[-1], (sizes[-1], m))
            weights["out.b"] = np.zeros(m)
        return cls(m=m, d=d, L=L, variant=variant, coord_scale=coord_scale, weights=weights)

    @property
    def n_hidden(self):
        return sum(1 for k in self.weights if k.startswith("fc") and k.endswith(".w"))


def _fusion_inputs(h, bboxes, net):
    h = np.asarray(h, dtype=np.float64)
    if h.ndim != 2 or h.shape != (net.m, net.d):
        raise ShapeError(f"features must be ({net.m}, {net.d}), got {h.shape}")
    if len(bboxes) != net.m:
        raise ShapeError(f"expected {net.m} bboxes, got {len(bboxes)}")
    gamma = relative_matrix(bboxes, net.L, net.coord_scale)
    m = net.m
    feats = np.concatenate([np.broadcast_to(h[None, :, :], (m, m, net.d)), gamma], axis=2)
    return h, feats


def _fusion_forward(h, bboxes, net):
    h, feats = _fusion_inputs(h, bboxes, net)
    W = net.weights
    acts = []
    if net.variant == "linear":
        logits = feats @ W["linear.w"] + W["linear.b"]
    else:
        reduced = feats @ W["reduce.w"] + W["reduce.b"]
        a = reduced.reshape(net.m, -1)
        acts.append(a)
        for i in range(net.n_hidden):
            a = np.tanh(a @ W[f"fc{i}.w"] + W[f"fc{i}.b"])
            acts.append(a)
        logits = a @ W["out.w"] + W["out.b"]
    w = softmax(logits, axis=1)
    u = w @ h
    return u, w, (h, feats, acts, logits)


def fusion_logits(h, bboxes, net: FusionNet) -> np.ndarray:
    """Pre-softmax fusion scores; row ``m`` scores every crop ``n`` for crop ``m``."""
    return _fusion_forward(h, bboxes, net)[2][3]


def fuse(h, bboxes, net: FusionNet):
    """Fused features ``u`` (M, d) and the row-stochastic weight matrix ``w`` (M, M)."""
    u, w, _ = _fusion_forward(h, bboxes, net)
    return u, w


def fuse_backward(h, bboxes, net: FusionNet, grad_u):
    """Backpropagate ``dL/du`` through :func:`fuse`.

    Returns ``(weight_grads, grad_h)`` where ``weight_grads`` has the same keys
    and shapes as ``net.weights``.
    """
    u, w, (h, feats, acts, _) = _fusion_forward(h, bboxes, net)
    gu = np.asarray(grad_u, dtype=np.float64)
    if gu.shape != u.shape:
        raise ShapeError(f"grad_u must be {u.shape}, got {gu.shape}")
    W = net.weights
    grads = {}
    gw = gu @ h.T
    gh = w.T @ gu
    gl = w * (gw - np.sum(w * gw, axis=1, keepdims=True))
    if net.variant == "linear":
        grads["linear.w"] = np.einsum("mnf,mn->f", feats, gl)
        grads["linear.b"] = np.asarray(gl.sum())
        gfeats = gl[:, :, None] * W["linear.w"]
    else:
        grads["out.w"] = acts[-1].T @ gl
        grads["out.b"] = gl.sum(axis=0)
        ga = gl @ W["out.w"].T
        for i in reversed(range(net.n_hidden)):
            a = acts[i + 1]
            gz = ga * (1.0 - a * a)
            grads[f"fc{i}.w"] = acts[i].T @ gz
            grads[f"fc{i}.b"] = gz.sum(axis=0)
            ga = gz @ W[f"fc{i}.w"].T
        g_reduced = ga.reshape(net.m, net.m, -1)
        grads["reduce.w"] = np.einsum("mnf,mnk->fk", feats, g_reduced)
        grads["reduce.b"] = g_reduced.sum(axis=(0, 1))
        gfeats = g_reduced @ W["reduce.w"].T
    gh = gh + gfeats[:, :, : net.d].sum(axis=0)
    return {k: grads[k] for k in W}, gh


def fused_mean(u) -> np.ndarray:
    u = np.asarray(u, dtype=np.float64)
    if u.ndim != 2 or len(u) == 0:
        raise ShapeError(f"need a non-empty (M, d) stack, got shape {u.shape}")
    return u.mean(axis=0)


@dataclass(frozen=True)
class ContrastNet(_Params):
    d: int
    tau: float = DEFAULT_TAU
    weights: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not self.tau > 0:
            raise InvalidSpec(f"temperature must be positive, got {self.tau}")

    @classmethod
    def init(cls, d, seed=0, tau=DEFAULT_TAU):
        gen = rng(seed)
        weights = {}
        for name in ("weight", "g1", "g2"):
            weights[f"{name}.w"] = _uniform(gen, d, (d, d))
            weights[f"{name}.b"] = np.zeros(d)
        return cls(d=d, tau=tau, weights=weights)


def _l2norm(x):
    n = np.linalg.norm(x, axis=-1, keepdims=True)
    return x / np.where(n > 0, n, 1.0)


def clm_project(h, net: ContrastNet, normalize=True) -> np.ndarray:
    """Project features ``(..., d)`` to contrastive embeddings of the same shape.

    The zero vector has no direction and comes out as zero.
    """
    h = np.asarray(h, dtype=np.float64)
    if h.shape[-1] != net.d:
        raise ShapeError(f"feature dim {h.shape[-1]} != network dim {net.d}")
    W = net.weights
    gate = sigmoid(h @ W["weight.w"] + W["weight.b"])
    x = gate * h
    x = np.maximum(_l2norm(x @ W["g1.w"] + W["g1.b"]), 0.0)
    z = _l2norm(x @ W["g2.w"] + W["g2.b"])
    return _l2norm(z) if normalize else z


def _check_batch(z, tau):
    z = np.asarray(z, dtype=np.float64)
    if z.ndim != 3:
        raise ShapeError(f"contrastive batch must be (N, M, d), got {z.shape}")
    n, m, _ = z.shape
    if n < 2 or m < 2:
        raise NotEnoughSamples(f"need N >= 2 samples and M >= 2 crops, got N={n}, M={m}")
    if not tau > 0:
        raise InvalidSpec(f"temperature must be positive, got {tau}")
    return z


def _contrastive(z, tau, grad):
    n, m, d = z.shape
    flat = z.reshape(n * m, d)
    sim = flat @ flat.T / tau
    np.fill_diagonal(sim, -np.inf)
    owner = np.repeat(np.arange(n), m)
    positive = owner[:, None] == owner[None, :]
    np.fill_diagonal(positive, False)
    row_max = sim.max(axis=1, keepdims=True)
    e = np.exp(sim - row_max)
    denom = e.sum(axis=1, keepdims=True)
    log_denom = np.log(denom[:, 0]) + row_max[:, 0]
    pos_sum = np.where(positive, sim, 0.0).sum(axis=1)
    # each anchor has m - 1 positives, so the log-denominator enters once per anchor
    loss = float(np.sum(log_denom - pos_sum / (m - 1)))
    if not grad:
        return loss
    g = e / denom - positive / (m - 1)
    return loss, ((g + g.T) @ flat / tau).reshape(z.shape)


def contrastive_loss(z, tau: float = DEFAULT_TAU) -> float:
    """Multi-positive contrastive loss over a batch ``z`` of shape ``(N, M, d)``.

    For every anchor ``z[i, m]`` the positives are the other ``M - 1`` crops of
    sample ``i``; the softmax denominator runs over all ``N M - 1`` features
    other than the anchor. Losses are summed over anchors.
    """
    return _contrastive(_check_batch(z, tau), tau, grad=False)


def contrastive_loss_grad(z, tau: float = DEFAULT_TAU) -> np.ndarray:
    return _contrastive(_check_batch(z, tau), tau, grad=True)[1]


def contrastive_gram_grad(z, tau: float = DEFAULT_TAU) -> np.ndarray:
    """Derivative of the loss with respect to each symmetric dot product ``z_a . z_b``.

    Returns an ``(NM, NM)`` matrix; the diagonal is zero (self-similarity does not
    enter the loss).
    """
    z = _check_batch(z, tau)
    n, m, d = z.shape
    flat = z.reshape(n * m, d)
    sim = flat @ flat.T / tau
    np.fill_diagonal(sim, -np.inf)
    p = softmax(sim, axis=1)
    owner = np.repeat(np.arange(n), m)
    positive = (owner[:, None] == owner[None, :]) & ~np.eye(n * m, dtype=bool)
    g = p - positive / (m - 1)
    return (g + g.T) / tau


@dataclass
class FeatureSet:
    h: np.ndarray
    z: np.ndarray
    u: np.ndarray
    w: np.ndarray

    @property
    def d(self):
        return self.h.shape[-1]


def forward(h, bboxes, fusion: FusionNet, contrast: ContrastNet) -> FeatureSet:
    """Run both modules on one sample's crop features; fusion consumes ``h``, not ``z``."""
    z = clm_project(h, contrast)
    u, w = fuse(h, bboxes, fusion)
    return FeatureSet(h=np.asarray(h, dtype=np.float64), z=z, u=u, w=w)
