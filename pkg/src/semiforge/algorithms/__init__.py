"""SSL methods assembled from shared components."""
from .components import (adamatch_cutoff, argmax_lowest, class_threshold_mask, confidence_mask, dash_threshold,
                         distribution_align, flex_thresholds, pseudo_label, sharpen, vat_perturbation)
from .spec import (ALL_ALGORITHMS, BASELINES, COMPONENT_TABLE, SSL_ALGORITHMS, AlgorithmSpec, canonical_name,
                   compose)
from .state import AlgorithmState, MemoryBuffer
from .step import LabeledBatch, StepOutput, UnlabeledBatch, supervised_step, unlabeled_step

__all__ = [
    "ALL_ALGORITHMS", "BASELINES", "COMPONENT_TABLE", "SSL_ALGORITHMS", "AlgorithmSpec", "AlgorithmState",
    "LabeledBatch", "MemoryBuffer", "StepOutput", "UnlabeledBatch", "adamatch_cutoff", "argmax_lowest",
    "canonical_name", "class_threshold_mask", "compose", "confidence_mask", "dash_threshold", "distribution_align",
    "flex_thresholds", "pseudo_label", "sharpen", "supervised_step", "unlabeled_step", "vat_perturbation",
]
