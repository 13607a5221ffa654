"""Algorithm descriptors: which components each SSL method switches on."""
from __future__ import annotations

import dataclasses
import re
from dataclasses import dataclass

# Component matrix as published for the 14 methods:
# (hard pseudo-label, consistency loss, thresholding, distribution alignment,
#  self-supervised term, mixup, weak/strong augmentation)
COMPONENT_TABLE: dict[str, tuple] = {
    "Pi-Model":        (False, "MSE", False, False, "",            False, False),
    "Pseudo-Labeling": (True,  "CE",  False, False, "",            False, False),
    "Mean Teacher":    (False, "MSE", False, False, "",            False, False),
    "VAT":             (False, "CE",  False, False, "",            False, False),
    "MixMatch":        (False, "MSE", False, False, "",            True,  False),
    "ReMixMatch":      (False, "CE",  False, True,  "Rotation",    True,  True),
    "UDA":             (False, "CE",  True,  False, "",            False, True),
    "FixMatch":        (True,  "CE",  True,  False, "",            False, True),
    "Dash":            (True,  "CE",  True,  False, "",            False, True),
    "CoMatch":         (True,  "CE",  True,  True,  "Contrastive", False, True),
    "CRMatch":         (True,  "CE",  True,  False, "Rotation",    False, True),
    "FlexMatch":       (True,  "CE",  True,  False, "",            False, True),
    "AdaMatch":        (True,  "CE",  True,  True,  "",            False, True),
    "SimMatch":        (True,  "CE",  True,  True,  "Contrastive", False, True),
}

SSL_ALGORITHMS = tuple(COMPONENT_TABLE)
BASELINES = ("supervised", "fully_supervised")
ALL_ALGORITHMS = SSL_ALGORITHMS + BASELINES

THRESHOLDING = ("none", "fixed", "dash", "flex", "adamatch")
SELF_SUPERVISED = ("none", "pretext", "contrastive_graph", "instance_similarity")


@dataclass(frozen=True)
class AlgorithmSpec:
    name: str
    uses_hard_pseudo_label: bool = False
    consistency_loss: str = "CE"
    thresholding: str = "none"
    distribution_alignment: bool = False
    self_supervised: str = "none"
    mixup: bool = False
    weak_strong: bool = False
    uses_unlabeled: bool = True

    temperature: float = 1.0
    fixed_threshold: float = 0.95
    unsup_weight: float = 1.0
    unsup_warmup: float = 0.0          # fraction of training over which unsup_weight ramps up
    vat_xi: float = 1e-6
    vat_eps: float = 0.3
    vat_power_iters: int = 1
    mixup_alpha: float = 0.5
    label_guess_views: int = 2

    da_target: str = "uniform"          # or "labeled"
    da_momentum: float = 0.999
    teacher_momentum: float = 0.999     # Mean Teacher only
    adamatch_relative: float = 0.9
    dash_c: float = 1.0001
    dash_gamma: float = 1.27
    dash_rho_min_conf: float = 0.95     # floor = CE of this confidence
    dash_warmup_steps: int = 100
    dash_epoch_steps: int = 100
    dash_mode: str = "loss"             # or "confidence"
    contrast_temperature: float = 0.2
    graph_cutoff: float = 0.8
    memory_smoothing: float = 0.9       # CoMatch pseudo-label smoothing weight
    instance_temperature: float = 0.1
    memory_capacity: int = 256
    aux_weight: float = 1.0
    pre_mix_weight: float = 0.5         # ReMixMatch loss on the un-mixed strong view

    def __post_init__(self):
        if self.consistency_loss not in ("CE", "MSE"):
            raise ValueError(f"consistency loss must be CE or MSE, got {self.consistency_loss!r}")
        if self.thresholding not in THRESHOLDING:
            raise ValueError(f"unknown thresholding {self.thresholding!r}")
        if self.self_supervised not in SELF_SUPERVISED:
            raise ValueError(f"unknown self-supervised term {self.self_supervised!r}")
        if self.da_target not in ("uniform", "labeled"):
            raise ValueError(f"da_target must be 'uniform' or 'labeled', got {self.da_target!r}")
        if self.dash_mode not in ("loss", "confidence"):
            raise ValueError(f"dash_mode must be 'loss' or 'confidence', got {self.dash_mode!r}")
        if self.temperature <= 0:
            raise ValueError("temperature must be positive")

    def replace(self, **overrides) -> "AlgorithmSpec":
        return dataclasses.replace(self, **overrides)

    def component_row(self) -> tuple:
        """This spec projected onto the published component columns."""
        selfsup = {"none": "", "pretext": "Rotation", "contrastive_graph": "Contrastive",
                   "instance_similarity": "Contrastive"}[self.self_supervised]
        return (self.uses_hard_pseudo_label, self.consistency_loss, self.thresholding != "none",
                self.distribution_alignment, selfsup, self.mixup, self.weak_strong)


HYPER_FIELDS = tuple(f.name for f in dataclasses.fields(AlgorithmSpec)
                     if f.name not in ("name", "uses_hard_pseudo_label", "consistency_loss", "thresholding",
                                       "distribution_alignment", "self_supervised", "mixup", "weak_strong",
                                       "uses_unlabeled"))

_BUILDERS = {
    "Pi-Model": dict(consistency_loss="MSE", unsup_weight=10.0, unsup_warmup=0.4),
    "Pseudo-Labeling": dict(uses_hard_pseudo_label=True, unsup_weight=1.0, unsup_warmup=0.25),
    "Mean Teacher": dict(consistency_loss="MSE", unsup_weight=50.0, unsup_warmup=0.4),
    "VAT": dict(unsup_weight=0.3),
    "MixMatch": dict(consistency_loss="MSE", mixup=True, temperature=0.5, mixup_alpha=0.5,
                     unsup_weight=100.0, unsup_warmup=0.25),
    "ReMixMatch": dict(distribution_alignment=True, self_supervised="pretext", mixup=True, weak_strong=True,
                       temperature=0.5, mixup_alpha=0.75, unsup_weight=1.5, aux_weight=0.5,
                       da_target="labeled"),
    "UDA": dict(thresholding="fixed", weak_strong=True, temperature=0.4, fixed_threshold=0.8),
    "FixMatch": dict(uses_hard_pseudo_label=True, thresholding="fixed", weak_strong=True),
    "Dash": dict(uses_hard_pseudo_label=True, thresholding="dash", weak_strong=True),
    "CoMatch": dict(uses_hard_pseudo_label=True, thresholding="fixed", distribution_alignment=True,
                    self_supervised="contrastive_graph", weak_strong=True),
    "CRMatch": dict(uses_hard_pseudo_label=True, thresholding="fixed", self_supervised="pretext",
                    weak_strong=True),
    "FlexMatch": dict(uses_hard_pseudo_label=True, thresholding="flex", weak_strong=True),
    "AdaMatch": dict(uses_hard_pseudo_label=True, thresholding="adamatch", distribution_alignment=True,
                     weak_strong=True),
    "SimMatch": dict(uses_hard_pseudo_label=True, thresholding="fixed", distribution_alignment=True,
                     self_supervised="instance_similarity", weak_strong=True),
    "supervised": dict(uses_unlabeled=False, unsup_weight=0.0),
    "fully_supervised": dict(uses_unlabeled=False, unsup_weight=0.0),
}


def _key(name: str) -> str:
    return re.sub(r"[^a-z0-9]", "", name.lower().replace("π", "pi").replace("$\\pi$", "pi"))


_ALIASES = {_key(n): n for n in ALL_ALGORITHMS}
_ALIASES.update({"pseudolabel": "Pseudo-Labeling", "pi": "Pi-Model", "pimodel": "Pi-Model",
                 "meanteacher": "Mean Teacher", "mt": "Mean Teacher", "fullysupervised": "fully_supervised"})


def canonical_name(name: str) -> str:
    try:
        return _ALIASES[_key(name)]
    except KeyError:
        raise ValueError(f"unknown algorithm {name!r}; choose from {', '.join(ALL_ALGORITHMS)}") from None


def compose(name: str, **overrides) -> AlgorithmSpec:
    """Build the component spec for a named algorithm, applying hyper-parameter overrides."""
    canon = canonical_name(name)
    spec = AlgorithmSpec(name=canon, **_BUILDERS[canon])
    if overrides:
        bad = sorted(set(overrides) - set(HYPER_FIELDS))
        if bad:
            raise ValueError(f"unknown algorithm hyper-parameter(s): {', '.join(bad)}")
        spec = spec.replace(**overrides)
    return spec
