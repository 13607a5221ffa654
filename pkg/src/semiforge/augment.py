"""Stochastic views of feature vectors.

Every function accepts a single vector or a batch (rows independent) and an
explicit generator or integer seed, so results are reproducible per seed.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

STRONG_OPS = ("noise", "feature_dropout", "scale", "shuffle_pair")


@dataclass(frozen=True)
class AugmentConfig:
    weak_noise_sigma: float = 0.03
    strong_pool: tuple[str, ...] = STRONG_OPS
    strong_n: int = 2
    magnitude_range: tuple[float, float] = (0.1, 0.5)

    def __post_init__(self):
        if self.weak_noise_sigma < 0:
            raise ValueError("weak_noise_sigma must be >= 0")
        if self.strong_n < 1:
            raise ValueError("strong_n must be >= 1")
        lo, hi = self.magnitude_range
        if lo > hi:
            raise ValueError(f"magnitude range [{lo}, {hi}] is empty")
        unknown = set(self.strong_pool) - set(STRONG_OPS)
        if unknown:
            raise ValueError(f"unknown strong transforms: {sorted(unknown)}")


def _rng(rng) -> np.random.Generator:
    return rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)


def _rows(x):
    a = np.array(x, dtype=np.float64)
    return (a[None, :], True) if a.ndim == 1 else (a, False)


def weak_augment(x, cfg: AugmentConfig, rng=None) -> np.ndarray:
    """Additive isotropic Gaussian jitter with std ``cfg.weak_noise_sigma``."""
    a, single = _rows(x)
    if cfg.weak_noise_sigma > 0:
        a = a + _rng(rng).normal(0.0, cfg.weak_noise_sigma, size=a.shape)
    return a[0] if single else a


def strong_augment(x, cfg: AugmentConfig, rng=None) -> np.ndarray:
    """Apply ``strong_n`` transforms drawn uniformly from the pool, each with
    its own magnitude drawn from ``magnitude_range`` (RandAugment-style)."""
    if not cfg.strong_pool:
        raise ValueError("strong augmentation pool is empty")
    gen = _rng(rng)
    a, single = _rows(x)
    n = a.shape[0]
    lo, hi = cfg.magnitude_range
    for _ in range(cfg.strong_n):
        which = gen.integers(len(cfg.strong_pool), size=n)
        mags = gen.uniform(lo, hi, size=n)
        for j, op in enumerate(cfg.strong_pool):
            rows = np.flatnonzero(which == j)
            if rows.size:
                a[rows] = _OPS[op](a[rows], mags[rows], gen)
    return a[0] if single else a


def _noise(a, m, gen):
    return a + gen.normal(size=a.shape) * m[:, None]


def _feature_dropout(a, m, gen):
    keep = gen.random(a.shape) >= m[:, None]
    return a * keep


def _scale(a, m, gen):
    u = gen.uniform(-1.0, 1.0, size=a.shape[0]) * m
    return a * (1.0 + u)[:, None]


def _shuffle_pair(a, m, gen):
    out = a.copy()
    d = a.shape[1]
    if d < 2:
        return out
    start = gen.integers(d - 1, size=a.shape[0])
    swap = gen.random(a.shape[0]) < m
    r = np.flatnonzero(swap)
    i, j = start[r], start[r] + 1
    out[r, i], out[r, j] = a[r, j], a[r, i]
    return out


_OPS = {"noise": _noise, "feature_dropout": _feature_dropout, "scale": _scale, "shuffle_pair": _shuffle_pair}


def pretext_transform(x, transform_id) -> np.ndarray:
    """One of four invertible maps; 0 is the identity.

    Consecutive coordinate pairs are rotated by ``transform_id * 90`` degrees
    (a plain rotation for 2-D inputs); with odd dimension the last
    coordinate changes sign on odd ids. ``transform_id`` may be an array with
    one id per row.
    """
    a, single = _rows(x)
    d = a.shape[1]
    if d < 2:
        raise ValueError("pretext transforms need at least 2 features")
    ids = np.broadcast_to(np.asarray(transform_id), (a.shape[0],))
    if not np.issubdtype(ids.dtype, np.integer) or np.any((ids < 0) | (ids > 3)):
        raise ValueError(f"transform id must be in 0..3, got {transform_id!r}")
    out = a.copy()
    even, odd = a[:, 0:d - 1:2], a[:, 1:d:2]
    for k in (1, 2, 3):
        r = ids == k
        if not r.any():
            continue
        e, o = even[r], odd[r]
        if k == 1:
            ne, no = -o, e
        elif k == 2:
            ne, no = -e, -o
        else:
            ne, no = o, -e
        block = out[r]
        block[:, 0:d - 1:2] = ne
        block[:, 1:d:2] = no
        if d % 2 and k % 2:
            block[:, -1] = -a[r, -1]
        out[r] = block
    return out[0] if single else out


def mixup(x1, y1, x2, y2, alpha: float, rng=None, lam: float | None = None):
    """Convex combination weighted toward the first argument.

    ``lam`` (already folded to ``>= 0.5`` or not) overrides the Beta draw.
    Returns ``(x_mix, y_mix, lam_used)``.
    """
    if lam is None:
        if alpha <= 0:
            raise ValueError("alpha must be positive")
        lam = float(_rng(rng).beta(alpha, alpha))
        lam = max(lam, 1.0 - lam)
    x1 = np.asarray(x1, dtype=np.float64)
    x2 = np.asarray(x2, dtype=np.float64)
    y1 = np.asarray(y1, dtype=np.float64)
    y2 = np.asarray(y2, dtype=np.float64)
    return lam * x1 + (1.0 - lam) * x2, lam * y1 + (1.0 - lam) * y2, lam
