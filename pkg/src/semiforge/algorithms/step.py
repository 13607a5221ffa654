"""Per-step losses and gradients for the supervised baselines and every SSL method.

Each method follows the same anchoring pattern: a target branch (weak views,
evaluated by ``teacher``) produces detached targets and masks, and a student
branch receives the loss. Gradients are assembled by hand from ``Mlp.backward``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..augment import AugmentConfig, mixup, pretext_transform, strong_augment, weak_augment
from ..numkit import Forward, Mlp, cross_entropy, cross_entropy_grad, mse_prob, mse_prob_grad, one_hot, softmax
from .components import (adamatch_cutoff, argmax_lowest, class_threshold_mask, confidence_mask, dash_threshold,
                         distribution_align, flex_thresholds, l2_normalize, l2_normalize_backward, pseudo_label,
                         rho_from_confidence, sharpen, similarity_ce, vat_perturbation)
from .spec import AlgorithmSpec
from .state import AlgorithmState


@dataclass
class LabeledBatch:
    x: np.ndarray
    y: np.ndarray


@dataclass
class UnlabeledBatch:
    x: np.ndarray
    index: np.ndarray          # row positions in the unlabeled pool


@dataclass
class StepOutput:
    total_loss: float
    supervised_loss: float
    unsupervised_loss: float = 0.0
    aux_loss: float = 0.0
    unsup_weight: float = 0.0
    mask_rate: float = 0.0
    pseudo_label_accuracy: float = float("nan")
    grads: dict = field(default_factory=dict, repr=False)
    diagnostics: dict = field(default_factory=dict)


class _Grads:
    """Accumulates scaled parameter gradients from several backward passes."""

    def __init__(self, model: Mlp):
        self.model = model
        self.total = {k: np.zeros_like(v) for k, v in model.params.items()}

    def add(self, fwd: Forward, scale: float = 1.0, **upstream):
        if scale == 0.0:
            return
        g, _ = self.model.backward(fwd, **upstream)
        for k, v in g.items():
            self.total[k] += scale * v


@dataclass
class _Unsup:
    loss: float
    aux: float
    mask: np.ndarray
    targets: np.ndarray
    diagnostics: dict = field(default_factory=dict)


def ramp(step: int, total_steps: int, fraction: float) -> float:
    """Linear ramp from 0 to 1 over the first ``fraction`` of training."""
    if fraction <= 0 or total_steps <= 0:
        return 1.0
    return min(1.0, step / (fraction * total_steps))


def supervised_step(model: Mlp, batch: LabeledBatch):
    """Mean CE of the model on a labeled batch; returns ``(loss, forward, probs)``."""
    if len(batch.y) == 0:
        raise ValueError("labeled batch is empty")
    fwd = model.forward(batch.x)
    probs = softmax(fwd.logits)
    return cross_entropy(probs, one_hot(batch.y, model.num_classes)), fwd, probs


def unlabeled_step(spec: AlgorithmSpec, state: AlgorithmState, model: Mlp, teacher: Mlp | None,
                   ulb: UnlabeledBatch | None, lb: LabeledBatch, step: int, total_steps: int,
                   aug: AugmentConfig, rng: np.random.Generator, reveal=None) -> StepOutput:
    """Compute losses and parameter gradients for one training step.

    ``teacher`` evaluates the target branch; when None the student itself is
    used (or the parameter average for Mean Teacher). ``reveal`` maps
    unlabeled indices to hidden labels and only feeds the pseudo-label
    accuracy diagnostic.
    """
    if state.algorithm != spec.name:
        raise ValueError(f"state was built for {state.algorithm!r}, spec is {spec.name!r}")
    if len(lb.y) == 0:
        raise ValueError("labeled batch is empty")
    k = model.num_classes
    acc = _Grads(model)

    lb_x = weak_augment(lb.x, aug, rng)
    sup, fwd_l, p_l = supervised_step(model, LabeledBatch(lb_x, lb.y))
    y_onehot = one_hot(lb.y, k)
    acc.add(fwd_l, d_logits=cross_entropy_grad(p_l, y_onehot))

    if not spec.uses_unlabeled:
        return StepOutput(sup, sup, grads=acc.total)
    if ulb is None or len(ulb.x) == 0:
        raise ValueError("unlabeled batch is empty")

    if teacher is None:
        teacher = model.with_params(state.teacher.shadow) if state.teacher is not None else model
    lam = spec.unsup_weight * ramp(step, total_steps, spec.unsup_warmup)
    ctx = _Context(spec, state, model, teacher, ulb, lb_x, y_onehot, fwd_l, p_l, sup, step, total_steps,
                   aug, rng, acc, lam)
    res = _METHODS[spec.name](ctx)

    mask_rate = float(np.clip(np.mean(res.mask), 0.0, 1.0)) if res.mask.size else 0.0
    pl_acc = float("nan")
    if reveal is not None:
        used = res.mask > 0
        if used.any():
            truth = np.asarray(reveal(ulb.index))
            pl_acc = float(np.mean(argmax_lowest(res.targets)[used] == truth[used]))
    aux = lam * res.aux
    total = sup + lam * res.loss + aux
    return StepOutput(total, sup, res.loss, aux, lam, mask_rate, pl_acc, acc.total, res.diagnostics)


@dataclass
class _Context:
    spec: AlgorithmSpec
    state: AlgorithmState
    model: Mlp
    teacher: Mlp
    ulb: UnlabeledBatch
    lb_x: np.ndarray
    y_onehot: np.ndarray
    fwd_l: Forward
    p_l: np.ndarray
    sup: float
    step: int
    total_steps: int
    aug: AugmentConfig
    rng: np.random.Generator
    grads: _Grads
    lam: float

    def weak(self, x=None):
        return weak_augment(self.ulb.x if x is None else x, self.aug, self.rng)

    def strong(self, x=None):
        return strong_augment(self.ulb.x if x is None else x, self.aug, self.rng)

    def target_probs(self, x):
        return softmax(self.teacher.forward(x).logits)

    def target_forward(self, x):
        return self.teacher.forward(x)

    def aligned(self, probs):
        """Update the prediction marginal, then align ``probs`` toward the target marginal."""
        st = self.state
        st.p_model.update(probs.mean(axis=0))
        return distribution_align(probs, st.target_marginal, st.p_model.shadow)

    def ce_on(self, x, target, mask=None, scale=None):
        """Masked CE of the student on ``x``; adds its gradient and returns ``(loss, fwd)``."""
        fwd = self.model.forward(x)
        p = softmax(fwd.logits)
        self.grads.add(fwd, self.lam if scale is None else scale, d_logits=cross_entropy_grad(p, target, mask))
        return cross_entropy(p, target, mask), fwd

    def rotation_loss(self, x, weight):
        """4-way CE of the pretext head on randomly transformed copies of ``x``."""
        ids = self.rng.integers(4, size=x.shape[0])
        fwd = self.model.forward(pretext_transform(x, ids))
        p = softmax(fwd.pretext)
        t = one_hot(ids, 4)
        self.grads.add(fwd, self.lam * weight, d_pretext=cross_entropy_grad(p, t))
        return cross_entropy(p, t)


def _ones(n):
    return np.ones(n)


# ---------------------------------------------------------------------------
# consistency-only methods

def _pi_model(c: _Context) -> _Unsup:
    v1, v2 = c.weak(), c.weak()
    target = c.target_probs(v1)
    fwd = c.model.forward(v2)
    p = softmax(fwd.logits)
    c.grads.add(fwd, c.lam, d_logits=mse_prob_grad(p, target))
    return _Unsup(mse_prob(p, target), 0.0, _ones(len(p)), target)


def _pseudo_labeling(c: _Context) -> _Unsup:
    v = c.weak()
    target = pseudo_label(c.target_probs(v), hard=True)
    loss, _ = c.ce_on(v, target)
    return _Unsup(loss, 0.0, _ones(len(target)), target)


def _vat(c: _Context) -> _Unsup:
    s = c.spec
    v = c.weak()
    target = c.target_probs(v)
    r_adv, fallback = vat_perturbation(c.teacher, v, s.vat_xi, s.vat_eps, s.vat_power_iters, c.rng)
    loss, _ = c.ce_on(v + r_adv, target)
    return _Unsup(loss, 0.0, _ones(len(target)), target, {"vat_fallback": fallback})


def _guess_labels(c: _Context) -> np.ndarray:
    views = [c.target_probs(c.weak()) for _ in range(c.spec.label_guess_views)]
    return sharpen(np.mean(views, axis=0), c.spec.temperature)


def _mix_unlabeled(c: _Context, inputs: list, targets: list, loss_kind: str) -> float:
    """Mix labeled and unlabeled rows together and train on the unlabeled half."""
    n_l = c.lb_x.shape[0]
    x = np.concatenate([c.lb_x] + inputs)
    y = np.concatenate([c.y_onehot] + targets)
    perm = c.rng.permutation(x.shape[0])
    xm, ym, _ = mixup(x, y, x[perm], y[perm], c.spec.mixup_alpha, c.rng)
    fwd = c.model.forward(xm[n_l:])
    p = softmax(fwd.logits)
    if loss_kind == "MSE":
        c.grads.add(fwd, c.lam, d_logits=mse_prob_grad(p, ym[n_l:]))
        return mse_prob(p, ym[n_l:])
    c.grads.add(fwd, c.lam, d_logits=cross_entropy_grad(p, ym[n_l:]))
    return cross_entropy(p, ym[n_l:])


def _mixmatch(c: _Context) -> _Unsup:
    q = _guess_labels(c)
    u1, u2 = c.weak(), c.weak()
    loss = _mix_unlabeled(c, [u1, u2], [q, q], "MSE")
    return _Unsup(loss, 0.0, _ones(len(q)), q)


def _remixmatch(c: _Context) -> _Unsup:
    s = c.spec
    uw = c.weak()
    s1, s2 = c.strong(), c.strong()
    q = sharpen(c.aligned(c.target_probs(uw)), s.temperature)
    mixed = _mix_unlabeled(c, [s1, s2], [q, q], "CE")
    pre, _ = c.ce_on(s1, q, scale=c.lam * s.pre_mix_weight)
    rot = c.rotation_loss(s1, s.aux_weight)
    return _Unsup(mixed + s.pre_mix_weight * pre, s.aux_weight * rot, _ones(len(q)), q)


# ---------------------------------------------------------------------------
# weak/strong methods with thresholding

def _uda(c: _Context) -> _Unsup:
    s = c.spec
    pw = c.target_probs(c.weak())
    mask = confidence_mask(pw, s.fixed_threshold)
    target = sharpen(pw, s.temperature)
    loss, _ = c.ce_on(c.strong(), target, mask)
    return _Unsup(loss, 0.0, mask, target)


def _fixmatch(c: _Context) -> _Unsup:
    pw = c.target_probs(c.weak())
    mask = confidence_mask(pw, c.spec.fixed_threshold)
    target = pseudo_label(pw, hard=True)
    loss, _ = c.ce_on(c.strong(), target, mask)
    return _Unsup(loss, 0.0, mask, target)


def _dash(c: _Context) -> _Unsup:
    s, st = c.spec, c.state
    pw = c.target_probs(c.weak())
    target = pseudo_label(pw, hard=True)
    xs = c.strong()
    if c.step < s.dash_warmup_steps:
        # warm-up: only gather the labeled loss scale the cutoff starts from
        st.dash_loss_sum += c.sup
        st.dash_loss_count += 1
        mask = np.zeros(len(pw))
        return _Unsup(0.0, 0.0, mask, target, {"dash_rho": float("nan")})
    if st.dash_rho_hat is None:
        st.dash_rho_hat = st.dash_loss_sum / st.dash_loss_count if st.dash_loss_count else c.sup
    t_epoch = 1 + (c.step - s.dash_warmup_steps) // max(s.dash_epoch_steps, 1)
    rho_min = rho_from_confidence(s.dash_rho_min_conf)
    if s.dash_mode == "loss":
        rho = dash_threshold(st.dash_rho_hat, t_epoch, s.dash_c, s.dash_gamma, rho_min)
        # CE of the weak prediction against its own hard label is -log(max prob)
        per_sample = -np.log(np.maximum(pw.max(axis=1), 1e-12))
        mask = (per_sample <= rho).astype(np.float64)
    else:
        progress = min(1.0, c.step / max(c.total_steps, 1))
        rho = -math.log(max(progress * s.dash_rho_min_conf, 1e-12))
        mask = confidence_mask(pw, progress * s.dash_rho_min_conf)
    loss, _ = c.ce_on(xs, target, mask)
    return _Unsup(loss, 0.0, mask, target, {"dash_rho": float(rho)})


def _flexmatch(c: _Context) -> _Unsup:
    s, st = c.spec, c.state
    pw = c.target_probs(c.weak())
    thresholds = flex_thresholds(st.class_confident_counts, s.fixed_threshold)
    mask = class_threshold_mask(pw, thresholds)
    st.flex_update(c.ulb.index, argmax_lowest(pw), pw.max(axis=1) > s.fixed_threshold)
    target = pseudo_label(pw, hard=True)
    loss, _ = c.ce_on(c.strong(), target, mask)
    return _Unsup(loss, 0.0, mask, target, {"flex_min_threshold": float(thresholds.min())})


def _adamatch(c: _Context) -> _Unsup:
    s, st = c.spec, c.state
    c_hat = st.update_c_hat(float(c.p_l.max(axis=1).mean()))
    tau = adamatch_cutoff(c_hat, s.adamatch_relative)
    q = c.aligned(c.target_probs(c.weak()))
    mask = confidence_mask(q, tau)
    target = pseudo_label(q, hard=True)
    loss, _ = c.ce_on(c.strong(), target, mask)
    return _Unsup(loss, 0.0, mask, target, {"adamatch_threshold": tau})


def _crmatch(c: _Context) -> _Unsup:
    s = c.spec
    uw = c.weak()
    tf = c.target_forward(uw)
    pw = softmax(tf.logits)
    mask = confidence_mask(pw, s.fixed_threshold)
    target = pseudo_label(pw, hard=True)
    loss, fs = c.ce_on(c.strong(), target, mask)
    # feature consistency between strong and (detached) weak penultimate features
    total = mask.sum()
    feat = 0.0
    if total > 0:
        diff = fs.features - tf.features
        per = (diff ** 2).mean(axis=1)
        feat = float((mask * per).sum() / total)
        d_feat = (mask / total)[:, None] * 2.0 * diff / diff.shape[1]
        c.grads.add(fs, c.lam * s.aux_weight, d_features=d_feat)
    rot = c.rotation_loss(uw, s.aux_weight)
    return _Unsup(loss, s.aux_weight * (feat + rot), mask, target)


def _labeled_bank_entries(c: _Context):
    e, _ = l2_normalize(c.fwd_l.embedding)
    return e, c.p_l


def _comatch(c: _Context) -> _Unsup:
    s, st = c.spec, c.state
    uw = c.weak()
    tf = c.target_forward(uw)
    ew, _ = l2_normalize(tf.embedding)
    q = c.aligned(softmax(tf.logits))
    if len(st.memory):
        bank_e, bank_p = st.memory.contents()
        a = softmax(ew @ bank_e.T / s.contrast_temperature)
        q = s.memory_smoothing * q + (1.0 - s.memory_smoothing) * a @ bank_p
    mask = confidence_mask(q, s.fixed_threshold)
    target = pseudo_label(q, hard=True)
    loss, fs = c.ce_on(c.strong(), target, mask)

    # pseudo-label graph: cosine similarity of soft labels, sparsified at the cutoff
    qn, _ = l2_normalize(q)
    graph = qn @ qn.T
    graph[graph < s.graph_cutoff] = 0.0
    np.fill_diagonal(graph, 1.0)
    graph /= graph.sum(axis=1, keepdims=True)
    es, norms = l2_normalize(fs.embedding)
    ctr, g_es, _ = similarity_ce(es, ew, graph, s.contrast_temperature)
    c.grads.add(fs, c.lam * s.aux_weight, d_embedding=l2_normalize_backward(es, norms, g_es))

    st.memory.push(*_labeled_bank_entries(c))
    return _Unsup(loss, s.aux_weight * ctr, mask, target)


def _simmatch(c: _Context) -> _Unsup:
    s, st = c.spec, c.state
    uw = c.weak()
    tf = c.target_forward(uw)
    q = c.aligned(softmax(tf.logits))
    xs = c.strong()
    inst = 0.0
    if len(st.memory):
        bank_e, bank_p = st.memory.contents()
        ew, _ = l2_normalize(tf.embedding)
        a_w = softmax(ew @ bank_e.T / s.instance_temperature)
        # semantic and instance similarities calibrate each other
        q_hat = q * (a_w @ bank_p)
        q_hat /= q_hat.sum(axis=1, keepdims=True)
        a_hat = a_w * (q @ bank_p.T)
        a_hat /= a_hat.sum(axis=1, keepdims=True)
        fs = c.model.forward(xs)
        es, norms = l2_normalize(fs.embedding)
        inst, g_es, _ = similarity_ce(es, bank_e, a_hat, s.instance_temperature)
        c.grads.add(fs, c.lam * s.aux_weight, d_embedding=l2_normalize_backward(es, norms, g_es))
        q = q_hat
    mask = confidence_mask(q, s.fixed_threshold)
    target = pseudo_label(q, hard=True)
    loss, _ = c.ce_on(xs, target, mask)
    st.memory.push(*_labeled_bank_entries(c))
    return _Unsup(loss, s.aux_weight * inst, mask, target)


def _mean_teacher(c: _Context) -> _Unsup:
    return _pi_model(c)


_METHODS = {
    "Pi-Model": _pi_model,
    "Pseudo-Labeling": _pseudo_labeling,
    "Mean Teacher": _mean_teacher,
    "VAT": _vat,
    "MixMatch": _mixmatch,
    "ReMixMatch": _remixmatch,
    "UDA": _uda,
    "FixMatch": _fixmatch,
    "Dash": _dash,
    "CoMatch": _comatch,
    "CRMatch": _crmatch,
    "FlexMatch": _flexmatch,
    "AdaMatch": _adamatch,
    "SimMatch": _simmatch,
}
