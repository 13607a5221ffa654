"""Grid sweeps: one training run per (setting, algorithm, seed), then aggregation and ranking."""
from __future__ import annotations

import json
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .config import RunConfig, SweepConfig
from .ranking import RankReport, rank_pipeline
from .report import write_reports
from .results import ResultsTable, aggregate, write_results_csv
from .train import train


def run_id(cfg: RunConfig) -> str:
    raw = f"{cfg.dataset}-{cfg.labels_per_class}-{cfg.algorithm}-s{cfg.seed}"
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", raw)


@dataclass
class CellOutcome:
    config: RunConfig
    error: float | None
    failure: str = ""
    reused: bool = False


@dataclass
class SweepOutcome:
    cells: list
    table: ResultsTable | None = None
    reports: list = field(default_factory=list)

    @property
    def failures(self) -> list:
        return [c for c in self.cells if c.error is None]


def _load_finished(cfg: RunConfig, run_dir: Path) -> float | None:
    path = run_dir / "summary.json"
    try:
        summary = json.loads(path.read_text())
    except (OSError, ValueError):
        return None
    if summary.get("config") != json.loads(json.dumps(cfg.to_dict())) or summary.get("aborted"):
        return None
    return float(summary["selected_error"])


def _run_cell(args) -> CellOutcome:
    cfg, run_dir, resume = args
    run_dir = Path(run_dir)
    if resume:
        err = _load_finished(cfg, run_dir)
        if err is not None:
            return CellOutcome(cfg, err, reused=True)
    try:
        res = train(cfg, run_dir)
    except Exception as exc:  # a failing cell must not take the sweep down
        return CellOutcome(cfg, None, f"{type(exc).__name__}: {exc}")
    if res.aborted:
        return CellOutcome(cfg, None, f"aborted: {res.abort_reason}")
    return CellOutcome(cfg, res.selected_error)


def run_sweep(sweep: SweepConfig, out_dir, workers: int = 1, resume: bool = False, progress=None) -> SweepOutcome:
    """Train every cell, then write ``results.csv`` and the rank reports under ``out_dir``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    cells = sweep.cells()
    jobs = [(cfg, str(out_dir / "runs" / run_id(cfg)), resume) for cfg in cells]
    outcomes: list[CellOutcome] = []
    try:
        if workers > 1 and len(jobs) > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                for outcome in pool.map(_run_cell, jobs):
                    outcomes.append(outcome)
                    if progress:
                        progress(outcome)
        else:
            for job in jobs:
                outcome = _run_cell(job)
                outcomes.append(outcome)
                if progress:
                    progress(outcome)
    finally:
        # whatever finished (even on interrupt) is flushed to disk
        result = _finish(outcomes, out_dir)
    return result


def _finish(outcomes: list, out_dir: Path) -> SweepOutcome:
    result = SweepOutcome(outcomes)
    failed = result.failures
    if failed:
        with (out_dir / "failures.txt").open("w") as fh:
            for c in failed:
                fh.write(f"{run_id(c.config)}\t{c.failure}\n")
    done = [(c.config.dataset, c.config.labels_per_class, c.config.algorithm, c.error)
            for c in outcomes if c.error is not None]
    if not done:
        return result
    table = aggregate(done, require_complete=False)
    write_results_csv(table, out_dir / "results.csv")
    if table.missing():
        # some cell lost every seed: keep what exists, skip ranking
        return result
    result.table = table
    if len(table.algorithms) >= 2:
        report: RankReport = rank_pipeline(result.table, domain="sweep")
        result.reports = [report]
        write_reports(result.reports, out_dir)
    return result
