"""Reusable pieces the SSL methods are assembled from."""
from __future__ import annotations

import math

import numpy as np

from ..numkit import Mlp, as_matrix, softmax


def argmax_lowest(probs) -> np.ndarray:
    """Row argmax; ties resolve to the lowest class index."""
    return np.argmax(as_matrix(probs), axis=1)


def sharpen(probs, T: float) -> np.ndarray:
    p = as_matrix(probs)
    if T == 1.0:
        return p.copy()
    # work in log space so small T does not underflow
    logp = np.log(np.maximum(p, 1e-300)) / T
    return softmax(logp)


def pseudo_label(probs, hard: bool, T: float = 1.0) -> np.ndarray:
    """One-hot at the argmax when ``hard``, otherwise the temperature-sharpened distribution."""
    p = as_matrix(probs)
    if hard:
        out = np.zeros_like(p)
        out[np.arange(p.shape[0]), argmax_lowest(p)] = 1.0
        return out
    return sharpen(p, T)


def confidence_mask(probs, threshold) -> np.ndarray:
    """1.0 where the max probability reaches ``threshold`` (scalar or per sample)."""
    p = as_matrix(probs)
    return (p.max(axis=1) >= np.asarray(threshold, dtype=np.float64)).astype(np.float64)


def class_threshold_mask(probs, class_thresholds) -> np.ndarray:
    """Like :func:`confidence_mask` with the threshold looked up by predicted class."""
    p = as_matrix(probs)
    thr = np.asarray(class_thresholds, dtype=np.float64)[argmax_lowest(p)]
    return (p.max(axis=1) >= thr).astype(np.float64)


def distribution_align(q, target_marginal, p_model) -> np.ndarray:
    """Rescale predictions by ``target_marginal / p_model`` and renormalise each row."""
    p_model = np.asarray(p_model, dtype=np.float64)
    if np.any(p_model <= 0):
        raise ValueError("model marginal must be strictly positive for alignment")
    out = as_matrix(q) * (np.asarray(target_marginal, dtype=np.float64) / p_model)
    return out / out.sum(axis=1, keepdims=True)


def flex_thresholds(counts, tau: float) -> np.ndarray:
    """Per-class thresholds ``tau * counts / max(max(counts), 1)``."""
    sigma = np.asarray(counts, dtype=np.float64)
    beta = sigma / max(sigma.max(initial=0.0), 1.0)
    return beta * tau


def dash_threshold(rho_hat: float | None, t_epoch: int, C: float, gamma: float, rho_min: float) -> float:
    """Loss cutoff ``max(C * gamma**(1 - t) * rho_hat, rho_min)``."""
    if rho_hat is None:
        raise RuntimeError("Dash cutoff requested before the warm-up loss estimate exists")
    if gamma <= 1:
        raise ValueError("gamma must exceed 1")
    return max(C * gamma ** (1 - t_epoch) * rho_hat, rho_min)


def adamatch_cutoff(c_hat: float, relative: float) -> float:
    return relative * c_hat


def l2_normalize(y):
    """Row-normalise; returns ``(e, norms)`` for use with :func:`l2_normalize_backward`."""
    y = as_matrix(y)
    norms = np.maximum(np.linalg.norm(y, axis=1, keepdims=True), 1e-12)
    return y / norms, norms


def l2_normalize_backward(e, norms, g):
    return (g - e * (e * g).sum(axis=1, keepdims=True)) / norms


def similarity_ce(query, keys, target, temperature: float):
    """Soft cross-entropy between ``target`` and ``softmax(query @ keys.T / t)``.

    Returns ``(loss, grad_query, probs)``; keys are treated as constants and
    the loss is averaged over query rows.
    """
    logits = query @ keys.T / temperature
    probs = softmax(logits)
    n = query.shape[0]
    loss = float(-(target * np.log(np.maximum(probs, 1e-12))).sum() / n)
    d_logits = (probs * target.sum(axis=1, keepdims=True) - target) / n
    return loss, d_logits @ keys / temperature, probs


def _kl_upstream(p, logits_hat):
    """d/d logits_hat of sum_i KL(p_i || softmax(logits_hat_i))."""
    return softmax(logits_hat) - p


def vat_perturbation(model: Mlp, x, xi: float, eps: float, power_iters: int = 1, rng=None):
    """Adversarial direction of maximal KL change, via power iteration on input gradients.

    Returns ``(r_adv, fallback)``. Each row of ``r_adv`` has L2 norm ``eps``.
    ``fallback`` is True when every iteration produced a zero gradient, in
    which case the initial random direction is returned.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if power_iters < 1:
        raise ValueError("power_iters must be >= 1")
    x = as_matrix(x)
    gen = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    p = softmax(model.forward(x).logits)
    d = _unit_rows(gen.normal(size=x.shape))
    initial = d.copy()
    any_signal = False
    for _ in range(power_iters):
        fwd = model.forward(x + xi * d)
        _, g = model.backward(fwd, _kl_upstream(p, fwd.logits), wrt_inputs=True)
        norms = np.linalg.norm(g, axis=1)
        live = norms > 0
        if live.any():
            any_signal = True
            d = d.copy()
            d[live] = g[live] / norms[live, None]
    if not any_signal:
        d = initial
    return eps * _unit_rows(d), not any_signal


def _unit_rows(a):
    n = np.linalg.norm(a, axis=1, keepdims=True)
    n[n == 0] = 1.0
    return a / n


def rho_from_confidence(conf: float) -> float:
    return -math.log(conf)
