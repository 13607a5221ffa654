"""Single training run: data, model, optimiser, evaluation curve and JSONL log."""
from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..algorithms import AlgorithmState, LabeledBatch, UnlabeledBatch, unlabeled_step
from ..data import Dataset, DatasetSplit, make_dataset, split_ssl
from ..numkit import EmaState, Mlp, OptimState, adamw_step, cosine_lr
from .config import RunConfig
from .results import select_checkpoint


@dataclass
class CurvePoint:
    step: int
    test_error: float
    val_error: float | None
    ema_test_error: float
    ema_val_error: float | None
    mask_rate: float
    pl_acc: float | None
    lr: float
    total_loss: float
    sup_loss: float
    unsup_loss: float
    aux_loss: float


@dataclass
class RunResult:
    config: RunConfig
    curve: list = field(default_factory=list)
    selected_error: float = float("nan")
    initial_error: float = float("nan")
    wall_time: float = 0.0
    aborted: bool = False
    abort_reason: str = ""

    @property
    def test_curve(self) -> list:
        return [p.test_error for p in self.curve]

    def summary(self) -> dict:
        return {"config": self.config.to_dict(), "selected_error": self.selected_error,
                "initial_error": self.initial_error, "aborted": self.aborted, "abort_reason": self.abort_reason,
                "eval_points": len(self.curve)}


def run_seeds(seed: int):
    """Independent generators for (split, model init, batch sampling, augmentation)."""
    ss = np.random.SeedSequence([int(seed), 0xA11])
    return [np.random.default_rng(s) for s in ss.spawn(4)]


def prepare_split(cfg: RunConfig, split_rng) -> tuple[DatasetSplit, Dataset]:
    """Train/test data and the labeled/unlabeled split for a run; returns ``(split, labeled set)``."""
    train_ds, test_ds = make_dataset(cfg.dataset, n=cfg.n, n_test=cfg.n_test, noise=cfg.noise,
                                     separation=cfg.separation, imbalance=cfg.imbalance,
                                     test_fraction=cfg.test_fraction, seed=cfg.data_seed)
    split = split_ssl(train_ds, cfg.labels_per_class, cfg.val_per_class, split_rng,
                      include_labeled_in_unlabeled=cfg.include_labeled, test=test_ds)
    labeled = split.all_training() if cfg.algorithm == "fully_supervised" else split.labeled
    return split, labeled


def build_model(cfg: RunConfig, spec, dim: int, classes: int, rng) -> Mlp:
    # heads are drawn after the trunk so every algorithm starts from the same classifier
    embed = cfg.embed_dim if spec.self_supervised in ("contrastive_graph", "instance_similarity") else None
    pretext = 4 if spec.self_supervised == "pretext" else None
    return Mlp([dim, *cfg.hidden, classes], embed_dim=embed, pretext_classes=pretext, rng=rng,
               init_scale=cfg.init_scale)


def error_rate(model: Mlp, ds: Dataset) -> float | None:
    if len(ds) == 0:
        return None
    pred = np.argmax(model.forward(ds.features).logits, axis=1)
    return float(100.0 * np.mean(pred != ds.labels))


def _json_num(v):
    if v is None:
        return None
    v = float(v)
    return v if math.isfinite(v) else None


def train(cfg: RunConfig, out_dir=None) -> RunResult:
    """Run ``cfg.steps`` optimisation steps, evaluating every ``cfg.eval_every``.

    When ``out_dir`` is given, one JSON object per evaluation is written to
    ``out_dir/log.jsonl`` and a run summary to ``out_dir/summary.json``.
    """
    t0 = time.perf_counter()
    spec = cfg.algorithm_spec()
    aug = cfg.augment_config()
    split_rng, model_rng, batch_rng, step_rng = run_seeds(cfg.seed)
    split, labeled = prepare_split(cfg, split_rng)
    model = build_model(cfg, spec, labeled.dim, labeled.class_count, model_rng)
    opt = OptimState(lr=cfg.lr, weight_decay=cfg.weight_decay, layer_decay=cfg.layer_decay)
    ema = EmaState(model.params, cfg.ema_momentum)
    state = AlgorithmState.init(spec, model, len(split.unlabeled_x), labeled.labels)

    result = RunResult(cfg)
    result.initial_error = error_rate(model, split.test)
    log_fh = None
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        log_fh = (out_dir / "log.jsonl").open("w")

    def emit(record):
        if log_fh is not None:
            log_fh.write(json.dumps(record) + "\n")
            log_fh.flush()

    K = cfg.steps
    n_l, n_u = len(labeled), len(split.unlabeled_x)
    window = {"mask": [], "pl": [], "loss": None}
    try:
        for k in range(K):
            lb_idx = batch_rng.integers(0, n_l, size=cfg.batch_size)
            ub_idx = batch_rng.integers(0, n_u, size=cfg.batch_size * cfg.uratio)
            lb = LabeledBatch(labeled.features[lb_idx], labeled.labels[lb_idx])
            ub = UnlabeledBatch(split.unlabeled_x[ub_idx], ub_idx)
            lr = cosine_lr(k, K, cfg.lr, cfg.warmup)
            out = unlabeled_step(spec, state, model, None, ub, lb, k, K, aug, step_rng,
                                 reveal=split.reveal_unlabeled)
            if not math.isfinite(out.total_loss):
                raise FloatingPointError(f"non-finite loss {out.total_loss} at step {k}")
            adamw_step(opt, model, out.grads, lr)
            state.after_step(model)
            ema.update(model.params)
            window["mask"].append(out.mask_rate)
            if not math.isnan(out.pseudo_label_accuracy):
                window["pl"].append(out.pseudo_label_accuracy)
            window["loss"] = out
            if (k + 1) % cfg.eval_every == 0:
                point = _evaluate(k + 1, model, ema, split, window, lr)
                result.curve.append(point)
                record = {"step": point.step, "test_error": point.test_error, "val_error": point.val_error,
                          "mask_rate": point.mask_rate, "pl_acc": _json_num(point.pl_acc), "lr": point.lr,
                          "ema_test_error": point.ema_test_error, "ema_val_error": point.ema_val_error,
                          "total_loss": point.total_loss, "sup_loss": point.sup_loss,
                          "unsup_loss": point.unsup_loss, "aux_loss": point.aux_loss,
                          "wall_ms": round((time.perf_counter() - t0) * 1000.0, 3) if cfg.record_wall_time else 0}
                emit(record)
                window = {"mask": [], "pl": [], "loss": None}
    except FloatingPointError as exc:
        result.aborted = True
        result.abort_reason = str(exc)
        emit({"step": k, "aborted": True, "reason": str(exc)})
    finally:
        if log_fh is not None:
            log_fh.close()

    if result.curve:
        vals = [p.val_error for p in result.curve]
        result.selected_error = select_checkpoint(result.test_curve, cfg.selection,
                                                  vals if cfg.selection == "validation" else None)
    else:
        result.selected_error = result.initial_error
    result.wall_time = time.perf_counter() - t0
    if out_dir is not None:
        (out_dir / "summary.json").write_text(json.dumps(result.summary(), indent=1, sort_keys=True) + "\n")
    return result


def _evaluate(step, model, ema, split, window, lr) -> CurvePoint:
    ema_model = model.with_params(ema.shadow)
    out = window["loss"]
    return CurvePoint(
        step=step,
        test_error=error_rate(model, split.test),
        val_error=error_rate(model, split.validation),
        ema_test_error=error_rate(ema_model, split.test),
        ema_val_error=error_rate(ema_model, split.validation),
        mask_rate=float(np.mean(window["mask"])),
        pl_acc=float(np.mean(window["pl"])) if window["pl"] else None,
        lr=lr,
        total_loss=out.total_loss,
        sup_loss=out.supervised_loss,
        unsup_loss=out.unsupervised_loss,
        aux_loss=out.aux_loss,
    )
