"""Checkpoint selection, multi-seed aggregation and the results-table CSV format."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

RESULTS_HEADER = ["dataset", "labels_per_class", "algorithm", "mean_error", "std_error", "seeds"]
SELECTION_MODES = ("best_checkpoint", "validation")


class IncompleteMatrixError(ValueError):
    def __init__(self, missing):
        self.missing = list(missing)
        shown = ", ".join(f"{d}/{n}/{a}" for (d, n), a in self.missing[:10])
        more = f" (+{len(self.missing) - 10} more)" if len(self.missing) > 10 else ""
        super().__init__(f"results matrix is missing {len(self.missing)} cell(s): {shown}{more}")


def select_checkpoint(test_errors, mode: str = "best_checkpoint", val_errors=None) -> float:
    """Test error reported for a run under the given selection protocol."""
    test = np.asarray(test_errors, dtype=np.float64)
    if test.size == 0:
        raise ValueError("cannot select from an empty curve")
    if mode == "best_checkpoint":
        return float(test.min())
    if mode == "validation":
        if val_errors is None:
            raise ValueError("validation selection needs validation errors")
        val = np.asarray(val_errors, dtype=np.float64)
        if val.shape != test.shape or np.isnan(val).all():
            raise ValueError("validation selection needs a validation error at every eval point")
        # np.nanargmin returns the first minimum, so ties go to the earliest checkpoint
        return float(test[int(np.nanargmin(val))])
    raise ValueError(f"unknown selection mode {mode!r}; choose from {SELECTION_MODES}")


@dataclass
class ResultsTable:
    settings: list                      # (dataset, labels_per_class) in first-seen order
    algorithms: list
    cells: dict = field(default_factory=dict)   # (setting, algorithm) -> (mean, std, seeds)

    def missing(self) -> list:
        return [(s, a) for s in self.settings for a in self.algorithms if (s, a) not in self.cells]

    def validate(self) -> "ResultsTable":
        gaps = self.missing()
        if gaps:
            raise IncompleteMatrixError(gaps)
        return self

    def means(self, algorithms=None) -> np.ndarray:
        """Mean errors as an ``algorithms x settings`` matrix."""
        algorithms = self.algorithms if algorithms is None else algorithms
        self.validate()
        return np.array([[self.cells[(s, a)][0] for s in self.settings] for a in algorithms], dtype=np.float64)

    def restrict(self, algorithms) -> "ResultsTable":
        keep = [a for a in self.algorithms if a in set(algorithms)]
        return ResultsTable(list(self.settings), keep, {k: v for k, v in self.cells.items() if k[1] in keep})


def aggregate(runs, require_complete: bool = True) -> ResultsTable:
    """Collapse ``(dataset, labels_per_class, algorithm, error)`` records into a table.

    Cells hold the mean and population standard deviation over seeds. A
    setting that lacks some algorithm raises :class:`IncompleteMatrixError`
    unless ``require_complete`` is False.
    """
    grouped: dict = {}
    settings, algorithms = [], []
    for dataset, lpc, algorithm, err in runs:
        s = (str(dataset), int(lpc))
        if s not in settings:
            settings.append(s)
        if algorithm not in algorithms:
            algorithms.append(algorithm)
        grouped.setdefault((s, algorithm), []).append(float(err))
    if not grouped:
        raise ValueError("no runs to aggregate")
    cells = {}
    for key, errs in grouped.items():
        e = np.asarray(errs)
        cells[key] = (float(e.mean()), float(e.std()), len(errs))
    table = ResultsTable(settings, algorithms, cells)
    return table.validate() if require_complete else table


def _fmt(v: float) -> str:
    return f"{v:.10g}"


def write_results_csv(table: ResultsTable, path, comments=()) -> None:
    with Path(path).open("w", newline="") as fh:
        for line in comments:
            fh.write(f"# {line}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RESULTS_HEADER)
        for s in table.settings:
            for a in table.algorithms:
                if (s, a) in table.cells:
                    mean, std, seeds = table.cells[(s, a)]
                    w.writerow([s[0], s[1], a, _fmt(mean), _fmt(std), seeds])


def read_results_csv(path, require_complete: bool = True) -> ResultsTable:
    path = Path(path)
    with path.open(newline="") as fh:
        lines = [ln for ln in fh if ln.strip() and not ln.lstrip().startswith("#")]
    reader = csv.reader(lines)
    header = next(reader, None)
    if header is None or [h.strip() for h in header] != RESULTS_HEADER:
        raise ValueError(f"{path}: expected header {','.join(RESULTS_HEADER)}")
    settings, algorithms, cells = [], [], {}
    for i, row in enumerate(reader, start=2):
        if len(row) != len(RESULTS_HEADER):
            raise ValueError(f"{path}: data row {i} has {len(row)} fields")
        try:
            s = (row[0], int(row[1]))
            cell = (float(row[3]), float(row[4]), int(row[5]))
        except ValueError as exc:
            raise ValueError(f"{path}: data row {i}: {exc}") from None
        if s not in settings:
            settings.append(s)
        if row[2] not in algorithms:
            algorithms.append(row[2])
        cells[(s, row[2])] = cell
    table = ResultsTable(settings, algorithms, cells)
    return table.validate() if require_complete else table
