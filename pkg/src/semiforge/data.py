"""Synthetic datasets, CSV ingestion and labeled/unlabeled splits."""
from __future__ import annotations

import csv
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    class_count: int
    name: str = "dataset"

    def __post_init__(self):
        x = np.asarray(self.features, dtype=np.float64)
        y = np.asarray(self.labels, dtype=np.int64)
        if x.ndim != 2 or y.shape != (x.shape[0],):
            raise ValueError(f"features {x.shape} and labels {y.shape} do not line up")
        if y.size and (y.min() < 0 or y.max() >= self.class_count):
            raise ValueError(f"labels must lie in [0, {self.class_count})")
        object.__setattr__(self, "features", x)
        object.__setattr__(self, "labels", y)

    def __len__(self):
        return self.labels.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    def subset(self, idx, name: str | None = None) -> "Dataset":
        idx = np.asarray(idx, dtype=np.int64)
        return Dataset(self.features[idx], self.labels[idx], self.class_count, name or self.name)

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.class_count)

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (self.class_count == other.class_count
                and np.array_equal(self.labels, other.labels)
                and np.array_equal(self.features, other.features))


def gen_two_moons(n: int, noise_sigma: float, seed) -> Dataset:
    """Two interleaving half circles, ``n // 2`` points each, plus Gaussian jitter."""
    if n <= 0 or n % 2:
        raise ValueError("n must be a positive even number")
    half = n // 2
    t = np.linspace(0.0, np.pi, half)
    upper = np.stack([np.cos(t), np.sin(t)], axis=1)
    lower = np.stack([1.0 - np.cos(t), 0.5 - np.sin(t)], axis=1)
    x = np.concatenate([upper, lower])
    y = np.repeat([0, 1], half)
    rng = np.random.default_rng(seed)
    if noise_sigma > 0:
        x = x + rng.normal(0.0, noise_sigma, size=x.shape)
    order = rng.permutation(n)
    return Dataset(x[order], y[order], 2, "two_moons")


def simplex_means(classes: int, dim: int, separation: float) -> np.ndarray:
    """Vertices of a regular simplex with the given edge length, embedded in ``dim`` dims."""
    if classes > dim + 1:
        raise ValueError(f"{classes} equidistant means do not fit in {dim} dimensions")
    centred = np.eye(classes) - 1.0 / classes
    # rows of `centred` span a (classes-1)-dim subspace; rotate it into the leading axes
    _, _, vt = np.linalg.svd(centred)
    coords = centred @ vt[: classes - 1].T
    means = np.zeros((classes, dim))
    means[:, : classes - 1] = coords * (separation / np.sqrt(2.0))
    return means


def gen_gauss_mixture(n: int, classes: int, dim: int, separation: float, seed) -> Dataset:
    if classes < 2 or dim < 2:
        raise ValueError("need classes >= 2 and dim >= 2")
    if n % classes:
        raise ValueError(f"n={n} is not divisible by classes={classes}")
    means = simplex_means(classes, dim, separation)
    rng = np.random.default_rng(seed)
    y = np.repeat(np.arange(classes), n // classes)
    x = means[y] + rng.normal(size=(n, dim))
    order = rng.permutation(n)
    return Dataset(x[order], y[order], classes, f"gauss{classes}x{dim}")


def long_tail(ds: Dataset, imbalance: float, seed) -> Dataset:
    """Subsample so class ``c`` keeps ``count * imbalance**(-c / (K-1))`` samples."""
    if imbalance < 1:
        raise ValueError("imbalance ratio must be >= 1")
    rng = np.random.default_rng(seed)
    k = ds.class_count
    keep = []
    for c in range(k):
        idx = np.flatnonzero(ds.labels == c)
        m = max(1, int(round(idx.size * imbalance ** (-c / max(k - 1, 1)))))
        keep.append(np.sort(rng.choice(idx, size=m, replace=False)))
    return ds.subset(np.concatenate(keep), name=f"{ds.name}-lt{imbalance:g}")


class CsvFormatError(ValueError):
    pass


def load_csv(path) -> Dataset:
    """Read ``label,f1,...,fd`` rows; ``#`` starts a comment line."""
    path = Path(path)
    rows, labels = [], []
    width = None
    with path.open(newline="") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            fields = next(csv.reader([text]))
            if width is None:
                width = len(fields)
                if width < 2:
                    raise CsvFormatError(f"{path}:{lineno}: need a label and at least one feature")
            elif len(fields) != width:
                raise CsvFormatError(f"{path}:{lineno}: expected {width} fields, found {len(fields)}")
            try:
                label = int(fields[0])
                feats = [float(v) for v in fields[1:]]
            except ValueError as exc:
                raise CsvFormatError(f"{path}:{lineno}: non-numeric field ({exc})") from None
            if label < 0:
                raise CsvFormatError(f"{path}:{lineno}: negative label {label}")
            labels.append(label)
            rows.append(feats)
    if not rows:
        raise CsvFormatError(f"{path}:1: file contains no data rows")
    y = np.array(labels)
    return Dataset(np.array(rows), y, int(y.max()) + 1, path.stem)


def save_csv(ds: Dataset, path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        for label, row in zip(ds.labels, ds.features):
            w.writerow([int(label)] + [repr(float(v)) for v in row])


@dataclass
class DatasetSplit:
    labeled: Dataset
    unlabeled_x: np.ndarray
    validation: Dataset
    test: Dataset
    labeled_index: np.ndarray = field(repr=False)
    unlabeled_index: np.ndarray = field(repr=False)
    validation_index: np.ndarray = field(repr=False)
    _unlabeled_truth: np.ndarray = field(repr=False, default=None)

    @property
    def class_count(self) -> int:
        return self.labeled.class_count

    def reveal_unlabeled(self, idx) -> np.ndarray:
        """Hidden ground truth for unlabeled rows. Diagnostics only."""
        return self._unlabeled_truth[np.asarray(idx, dtype=np.int64)]

    def all_training(self) -> Dataset:
        """Every training row with its true label (the fully supervised setting)."""
        idx = np.concatenate([self.labeled_index, self.unlabeled_index])
        _, first = np.unique(idx, return_index=True)
        x = np.concatenate([self.labeled.features, self.unlabeled_x])[np.sort(first)]
        y = np.concatenate([self.labeled.labels, self._unlabeled_truth])[np.sort(first)]
        return Dataset(x, y, self.class_count, self.labeled.name)


def split_ssl(dataset: Dataset, labels_per_class: int, val_per_class: int = 0, seed=0,
              include_labeled_in_unlabeled: bool = True, test: Dataset | None = None) -> DatasetSplit:
    """Sample a class-balanced labeled set (and validation set); the rest is unlabeled."""
    rng = np.random.default_rng(seed)
    need = labels_per_class + val_per_class
    lab, val = [], []
    for c in range(dataset.class_count):
        idx = np.flatnonzero(dataset.labels == c)
        if idx.size < need:
            raise ValueError(f"class {c} has {idx.size} samples, need {need}")
        pick = rng.permutation(idx)[:need]
        lab.append(pick[:labels_per_class])
        val.append(pick[labels_per_class:])
    lab_idx = np.sort(np.concatenate(lab)).astype(np.int64)
    val_idx = np.sort(np.concatenate(val)).astype(np.int64)
    taken = np.zeros(len(dataset), dtype=bool)
    taken[val_idx] = True
    if not include_labeled_in_unlabeled:
        taken[lab_idx] = True
    ulb_idx = np.flatnonzero(~taken)
    empty = Dataset(np.zeros((0, dataset.dim)), np.zeros(0, dtype=np.int64), dataset.class_count)
    if test is None:
        test = empty
    return DatasetSplit(
        labeled=dataset.subset(lab_idx),
        unlabeled_x=dataset.features[ulb_idx],
        validation=dataset.subset(val_idx) if val_idx.size else empty,
        test=test,
        labeled_index=lab_idx,
        unlabeled_index=ulb_idx,
        validation_index=val_idx,
        _unlabeled_truth=dataset.labels[ulb_idx],
    )


_GAUSS = re.compile(r"^gauss(\d+)x(\d+)$")


def make_dataset(spec: str, *, n: int = 1000, n_test: int = 1000, noise: float = 0.1,
                 separation: float = 4.0, imbalance: float = 1.0, test_fraction: float = 0.2,
                 seed: int = 0) -> tuple[Dataset, Dataset]:
    """Resolve a dataset name (``two_moons``, ``gauss{K}x{d}``, ``csv:<path>``) to train/test sets."""
    ss = np.random.SeedSequence([seed, 0x5EED])
    train_seed, test_seed, split_seed = ss.spawn(3)
    if spec == "two_moons":
        train = gen_two_moons(n, noise, train_seed)
        test = gen_two_moons(n_test, noise, test_seed)
    elif m := _GAUSS.match(spec):
        k, d = int(m.group(1)), int(m.group(2))
        train = gen_gauss_mixture(n, k, d, separation, train_seed)
        test = gen_gauss_mixture(n_test, k, d, separation, test_seed)
    elif spec.startswith("csv:"):
        full = load_csv(spec[4:])
        rng = np.random.default_rng(split_seed)
        test_idx = []
        for c in range(full.class_count):
            idx = np.flatnonzero(full.labels == c)
            test_idx.append(rng.permutation(idx)[: int(round(idx.size * test_fraction))])
        test_idx = np.sort(np.concatenate(test_idx)).astype(np.int64)
        mask = np.ones(len(full), dtype=bool)
        mask[test_idx] = False
        return full.subset(np.flatnonzero(mask)), full.subset(test_idx)
    else:
        raise ValueError(f"unknown dataset {spec!r}")
    if imbalance > 1:
        train = long_tail(train, imbalance, train_seed)
    return train, test
