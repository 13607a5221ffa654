"""Dense numeric core: a small ReLU classifier with hand-written backprop,
AdamW, learning-rate schedules, moving averages and the probability losses
shared by every algorithm.

Matrices are plain 2-D ``float64`` numpy arrays.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

log = logging.getLogger(__name__)

LOG_CLAMP = 1e-12


def as_matrix(x) -> np.ndarray:
    a = np.asarray(x, dtype=np.float64)
    if a.ndim == 1:
        a = a[None, :]
    if a.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {a.shape}")
    return a


@dataclass
class Forward:
    """Outputs of one forward pass plus what backward needs."""

    inputs: np.ndarray
    logits: np.ndarray
    features: np.ndarray
    embedding: np.ndarray | None
    pretext: np.ndarray | None
    pre_activations: list[np.ndarray]
    activations: list[np.ndarray]


class Mlp:
    """Feed-forward classifier ``layer_sizes[0] -> ... -> layer_sizes[-1]``.

    Hidden layers use ReLU (subgradient 0 at 0). ``features`` are the
    penultimate activations; the optional projection and pretext heads are
    linear maps on those features. Weights are stored ``(fan_in, fan_out)``
    so a layer computes ``x @ W + b``.
    """

    def __init__(self, layer_sizes, *, embed_dim: int | None = None,
                 pretext_classes: int | None = None, rng=None, init_scale: float = 1.0):
        sizes = [int(s) for s in layer_sizes]
        if len(sizes) < 2 or min(sizes) < 1:
            raise ValueError(f"need at least input and output sizes, got {sizes}")
        self.layer_sizes = sizes
        rng = np.random.default_rng(rng)
        self.params: dict[str, np.ndarray] = {}
        for i, (fan_in, fan_out) in enumerate(zip(sizes[:-1], sizes[1:])):
            std = init_scale * math.sqrt(2.0 / fan_in)
            self.params[f"W{i}"] = rng.normal(0.0, std, size=(fan_in, fan_out))
            self.params[f"b{i}"] = np.zeros(fan_out)
        feat = sizes[-2]
        self.embed_dim = embed_dim
        self.pretext_classes = pretext_classes
        if embed_dim:
            self.params["proj_W"] = rng.normal(0.0, init_scale * math.sqrt(1.0 / feat), size=(feat, embed_dim))
            self.params["proj_b"] = np.zeros(embed_dim)
        if pretext_classes:
            self.params["pre_W"] = rng.normal(0.0, init_scale * math.sqrt(1.0 / feat), size=(feat, pretext_classes))
            self.params["pre_b"] = np.zeros(pretext_classes)

    @property
    def depth(self) -> int:
        """Number of affine layers in the classifier trunk."""
        return len(self.layer_sizes) - 1

    @property
    def num_classes(self) -> int:
        return self.layer_sizes[-1]

    def layer_index(self, name: str) -> int:
        if name.startswith(("proj_", "pre_")):
            return self.depth - 1
        return int(name[1:])

    def copy(self) -> "Mlp":
        clone = object.__new__(Mlp)
        clone.layer_sizes = list(self.layer_sizes)
        clone.embed_dim = self.embed_dim
        clone.pretext_classes = self.pretext_classes
        clone.params = {k: v.copy() for k, v in self.params.items()}
        return clone

    def with_params(self, params: Mapping[str, np.ndarray]) -> "Mlp":
        clone = self.copy()
        for k in clone.params:
            clone.params[k] = np.array(params[k], dtype=np.float64)
        return clone

    def forward(self, inputs) -> Forward:
        x = as_matrix(inputs)
        if x.shape[1] != self.layer_sizes[0]:
            raise ValueError(f"input has {x.shape[1]} columns, model expects {self.layer_sizes[0]}")
        p = self.params
        pre, acts = [], [x]
        h = x
        for i in range(self.depth):
            z = h @ p[f"W{i}"] + p[f"b{i}"]
            pre.append(z)
            if i < self.depth - 1:
                h = np.maximum(z, 0.0)
                acts.append(h)
        features = acts[-1]
        emb = features @ p["proj_W"] + p["proj_b"] if "proj_W" in p else None
        pretext = features @ p["pre_W"] + p["pre_b"] if "pre_W" in p else None
        return Forward(x, pre[-1], features, emb, pretext, pre, acts)

    def backward(self, fwd: Forward, d_logits=None, *, d_features=None, d_embedding=None,
                 d_pretext=None, wrt_inputs: bool = False):
        """Reverse-mode gradients of ``<d_logits, logits> + <d_features, features> + ...``.

        Returns ``(grads, input_grads)``; ``input_grads`` is None unless requested.
        """
        p = self.params
        grads = {k: np.zeros_like(v) for k, v in p.items()}
        if d_logits is None:
            d_logits = np.zeros_like(fwd.logits)
        d_logits = as_matrix(d_logits)
        if d_logits.shape != fwd.logits.shape:
            raise ValueError(f"upstream shape {d_logits.shape} != logits shape {fwd.logits.shape}")

        d_feat = np.zeros_like(fwd.features)
        if d_features is not None:
            d_feat = d_feat + _check_shape(d_features, fwd.features, "features")
        if d_embedding is not None:
            if fwd.embedding is None:
                raise ValueError("model has no projection head")
            g = _check_shape(d_embedding, fwd.embedding, "embedding")
            grads["proj_W"] = fwd.features.T @ g
            grads["proj_b"] = g.sum(axis=0)
            d_feat = d_feat + g @ p["proj_W"].T
        if d_pretext is not None:
            if fwd.pretext is None:
                raise ValueError("model has no pretext head")
            g = _check_shape(d_pretext, fwd.pretext, "pretext")
            grads["pre_W"] = fwd.features.T @ g
            grads["pre_b"] = g.sum(axis=0)
            d_feat = d_feat + g @ p["pre_W"].T

        g = d_logits
        for i in reversed(range(self.depth)):
            grads[f"W{i}"] = fwd.activations[i].T @ g
            grads[f"b{i}"] = g.sum(axis=0)
            if i == 0:
                break
            g_h = g @ p[f"W{i}"].T
            if i == self.depth - 1:
                g_h = g_h + d_feat
            g = g_h * (fwd.pre_activations[i - 1] > 0.0)
        if not wrt_inputs:
            return grads, None
        g_x = g @ p["W0"].T
        if self.depth == 1:
            g_x = g_x + d_feat
        return grads, g_x


def _check_shape(g, ref, what):
    g = as_matrix(g)
    if g.shape != ref.shape:
        raise ValueError(f"{what} upstream shape {g.shape} != {ref.shape}")
    return g


def forward(model: Mlp, inputs):
    """Return ``(logits, features, embedding)`` for ``inputs``."""
    f = model.forward(inputs)
    return f.logits, f.features, f.embedding


def gradients(model: Mlp, inputs, upstream, wrt_inputs: bool = False):
    """Exact gradients of ``<upstream, logits>`` w.r.t. parameters (and inputs)."""
    f = model.forward(inputs)
    return model.backward(f, upstream, wrt_inputs=wrt_inputs)


# --------------------------------------------------------------------------
# optimisation

def layerwise_lr(eta: float, layer_index: int, total_layers: int, decay: float) -> float:
    """Output layer keeps ``eta``; each layer closer to the input is scaled by ``decay`` once more."""
    if not 0 <= layer_index < total_layers:
        raise ValueError(f"layer index {layer_index} outside [0, {total_layers})")
    return eta * decay ** (total_layers - 1 - layer_index)


def cosine_lr(k: int, K: int, eta0: float, warmup: int = 0) -> float:
    """Linear warm-up to ``eta0`` followed by ``eta0 * cos(7*pi*s / 16)``.

    ``s`` is progress through the post-warm-up steps, so the rate equals
    ``eta0`` at ``k == warmup`` and ``eta0 * cos(7*pi/16)`` at ``k == K``.
    """
    if K <= 0:
        raise ValueError("total steps K must be positive")
    if warmup >= K and warmup > 0:
        raise ValueError("warmup must be shorter than K")
    if k < warmup:
        return eta0 * k / warmup
    progress = (k - warmup) / (K - warmup)
    return eta0 * math.cos(7.0 * math.pi * progress / 16.0)


@dataclass
class OptimState:
    lr: float = 1e-3
    weight_decay: float = 5e-4
    layer_decay: float = 1.0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adamw_step(opt: OptimState, model: Mlp, grads: Mapping[str, np.ndarray], lr: float | None = None) -> None:
    """One AdamW update in place. Decay is decoupled and skips biases."""
    for name, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise FloatingPointError(f"non-finite gradient for parameter {name!r}; step rejected")
    base = opt.lr if lr is None else lr
    opt.t += 1
    c1 = 1.0 - opt.beta1 ** opt.t
    c2 = 1.0 - opt.beta2 ** opt.t
    for name, param in model.params.items():
        g = grads[name]
        if g.shape != param.shape:
            raise ValueError(f"gradient for {name} has shape {g.shape}, parameter {param.shape}")
        m = opt.m.get(name)
        if m is None:
            m = opt.m[name] = np.zeros_like(param)
            opt.v[name] = np.zeros_like(param)
        v = opt.v[name]
        m *= opt.beta1
        m += (1.0 - opt.beta1) * g
        v *= opt.beta2
        v += (1.0 - opt.beta2) * g * g
        eta = layerwise_lr(base, model.layer_index(name), model.depth, opt.layer_decay)
        update = (m / c1) / (np.sqrt(v / c2) + opt.eps)
        if opt.weight_decay and not _is_bias(name):
            update = update + opt.weight_decay * param
        param -= eta * update


def _is_bias(name: str) -> bool:
    return name.startswith("b") or name.endswith("_b")


@dataclass
class EmaState:
    shadow: object
    momentum: float

    def __post_init__(self):
        if not 0.0 <= self.momentum <= 1.0:
            raise ValueError(f"momentum {self.momentum} outside [0, 1]")
        self.shadow = _copy_tree(self.shadow)

    def update(self, value):
        m = self.momentum
        if isinstance(self.shadow, dict):
            for k, s in self.shadow.items():
                self.shadow[k] = m * s + (1.0 - m) * np.asarray(value[k], dtype=np.float64)
        else:
            self.shadow = m * np.asarray(self.shadow, dtype=np.float64) + (1.0 - m) * np.asarray(value, dtype=np.float64)
        return self.shadow


def ema_update(state: EmaState, new_value):
    return state.update(new_value)


def _copy_tree(x):
    if isinstance(x, dict):
        return {k: np.array(v, dtype=np.float64) for k, v in x.items()}
    return np.array(x, dtype=np.float64)


# --------------------------------------------------------------------------
# probabilities and losses

def softmax(logits) -> np.ndarray:
    z = np.asarray(logits, dtype=np.float64)
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def _weights(weights, n):
    if weights is None:
        return np.ones(n)
    w = np.asarray(weights, dtype=np.float64).reshape(-1)
    if w.shape[0] != n:
        raise ValueError(f"{w.shape[0]} weights for {n} samples")
    return w


def cross_entropy(probs, target, weights=None) -> float:
    """Weighted mean over samples of ``-sum(target * log(probs))``.

    The mean divides by the total weight, so it is zero when every weight is.
    """
    p = as_matrix(probs)
    t = as_matrix(target)
    w = _weights(weights, p.shape[0])
    total = w.sum()
    if total <= 0.0:
        return 0.0
    if np.any((p < LOG_CLAMP) & (t > 0)):
        log.debug("cross_entropy: clamping probabilities below %g", LOG_CLAMP)
    per = -(t * np.log(np.maximum(p, LOG_CLAMP))).sum(axis=1)
    return float((w * per).sum() / total)


def cross_entropy_grad(probs, target, weights=None) -> np.ndarray:
    """Gradient of :func:`cross_entropy` w.r.t. the logits that produced ``probs``."""
    p = as_matrix(probs)
    t = as_matrix(target)
    w = _weights(weights, p.shape[0])
    total = w.sum()
    if total <= 0.0:
        return np.zeros_like(p)
    return (w / total)[:, None] * (p * t.sum(axis=1, keepdims=True) - t)


def mse_prob(p, q, weights=None) -> float:
    p = as_matrix(p)
    q = as_matrix(q)
    w = _weights(weights, p.shape[0])
    total = w.sum()
    if total <= 0.0:
        return 0.0
    per = ((p - q) ** 2).mean(axis=1)
    return float((w * per).sum() / total)


def mse_prob_grad(p, q, weights=None) -> np.ndarray:
    """Gradient of :func:`mse_prob` w.r.t. the logits behind ``p`` (``q`` held fixed)."""
    p = as_matrix(p)
    q = as_matrix(q)
    w = _weights(weights, p.shape[0])
    total = w.sum()
    if total <= 0.0:
        return np.zeros_like(p)
    g = (w / total)[:, None] * 2.0 * (p - q) / p.shape[1]
    return softmax_backward(p, g)


def softmax_backward(p, g) -> np.ndarray:
    """Map a gradient on softmax outputs back to the logits."""
    return p * (g - (p * g).sum(axis=1, keepdims=True))


def one_hot(labels, num_classes: int) -> np.ndarray:
    labels = np.asarray(labels, dtype=np.int64)
    out = np.zeros((labels.shape[0], num_classes))
    out[np.arange(labels.shape[0]), labels] = 1.0
    return out
