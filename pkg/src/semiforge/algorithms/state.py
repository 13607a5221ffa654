"""Mutable per-run bookkeeping used by the adaptive components."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..numkit import EmaState, Mlp
from .spec import AlgorithmSpec


@dataclass
class MemoryBuffer:
    """Fixed-capacity ring of (embedding, class distribution) pairs."""

    capacity: int
    dim: int
    num_classes: int
    embeddings: np.ndarray = field(init=False, repr=False)
    dists: np.ndarray = field(init=False, repr=False)
    size: int = 0
    head: int = 0

    def __post_init__(self):
        if self.capacity < 1:
            raise ValueError("memory capacity must be >= 1")
        self.embeddings = np.zeros((self.capacity, self.dim))
        self.dists = np.zeros((self.capacity, self.num_classes))

    def push(self, embeddings, dists) -> None:
        for e, p in zip(np.asarray(embeddings), np.asarray(dists)):
            self.embeddings[self.head] = e
            self.dists[self.head] = p
            self.head = (self.head + 1) % self.capacity
            self.size = min(self.size + 1, self.capacity)

    def contents(self):
        return self.embeddings[: self.size], self.dists[: self.size]

    def __len__(self):
        return self.size


@dataclass
class AlgorithmState:
    algorithm: str
    num_classes: int
    target_marginal: np.ndarray
    p_model: EmaState
    selected_label: np.ndarray                 # FlexMatch: latest confident class per unlabeled row, -1 if none
    c_hat: EmaState | None = None              # AdaMatch labeled-confidence average
    dash_rho_hat: float | None = None
    dash_loss_sum: float = 0.0
    dash_loss_count: int = 0
    memory: MemoryBuffer | None = None
    teacher: EmaState | None = None            # Mean Teacher parameter average
    step: int = 0

    @classmethod
    def init(cls, spec: AlgorithmSpec, model: Mlp, n_unlabeled: int, labeled_labels=None) -> "AlgorithmState":
        k = model.num_classes
        if spec.da_target == "labeled" and labeled_labels is not None and len(labeled_labels):
            target = np.bincount(np.asarray(labeled_labels), minlength=k).astype(np.float64)
            target = (target + 1e-6) / (target + 1e-6).sum()
        else:
            target = np.full(k, 1.0 / k)
        memory = None
        if spec.self_supervised in ("contrastive_graph", "instance_similarity"):
            if model.embed_dim is None:
                raise ValueError(f"{spec.name} needs a model with a projection head")
            memory = MemoryBuffer(spec.memory_capacity, model.embed_dim, k)
        if spec.self_supervised == "pretext" and model.pretext_classes != 4:
            raise ValueError(f"{spec.name} needs a model with a 4-way pretext head")
        teacher = EmaState(model.params, spec.teacher_momentum) if spec.name == "Mean Teacher" else None
        return cls(
            algorithm=spec.name,
            num_classes=k,
            target_marginal=target,
            p_model=EmaState(np.full(k, 1.0 / k), spec.da_momentum),
            selected_label=np.full(n_unlabeled, -1, dtype=np.int64),
            memory=memory,
            teacher=teacher,
        )

    @property
    def class_confident_counts(self) -> np.ndarray:
        sel = self.selected_label
        return np.bincount(sel[sel >= 0], minlength=self.num_classes)

    def flex_update(self, index, argmaxes, confident) -> None:
        """Record the predicted class of every confidently predicted unlabeled row."""
        index = np.asarray(index, dtype=np.int64)
        confident = np.asarray(confident, dtype=bool)
        self.selected_label[index[confident]] = np.asarray(argmaxes)[confident]

    def update_c_hat(self, batch_confidence: float) -> float:
        if self.c_hat is None:
            # first observation seeds the average so the cutoff is not biased toward 0
            self.c_hat = EmaState(np.asarray(batch_confidence), self.p_model.momentum)
        else:
            self.c_hat.update(batch_confidence)
        return float(self.c_hat.shadow)

    def after_step(self, model: Mlp) -> None:
        if self.teacher is not None:
            self.teacher.update(model.params)
        self.step += 1
