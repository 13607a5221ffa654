"""Friedman ranking, final ranks, robustness counts and cross-domain rank spread."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata

from ..algorithms.spec import BASELINES
from .results import ResultsTable

TIE_METHODS = ("ordinal", "average")


def ranked_algorithms(table: ResultsTable, exclude=()) -> list:
    """Algorithms that enter the ranking: baselines drop out when two or more methods remain."""
    pool = [a for a in table.algorithms if a not in set(exclude)]
    methods = [a for a in pool if a not in BASELINES]
    return methods if len(methods) >= 2 else pool


def friedman_rank(table: ResultsTable, algorithms=None, ties: str = "ordinal") -> dict:
    """Average per-setting rank (1 = lowest error) of each algorithm.

    ``ties="ordinal"`` resolves equal errors by listing order;
    ``ties="average"`` gives tied entries the mean of the positions they cover.
    """
    if ties not in TIE_METHODS:
        raise ValueError(f"unknown tie method {ties!r}; choose from {TIE_METHODS}")
    algorithms = list(table.algorithms if algorithms is None else algorithms)
    if len(algorithms) < 2:
        raise ValueError("ranking needs at least two algorithms")
    if not table.settings:
        raise ValueError("ranking needs at least one setting")
    errors = table.means(algorithms)
    ranks = np.column_stack([rankdata(errors[:, j], method=ties) for j in range(errors.shape[1])])
    return dict(zip(algorithms, ranks.mean(axis=1).tolist()))


def final_rank(rank_f: dict, mean_errors: dict) -> dict:
    """Integer ranks by ascending Friedman rank; ties go to the lower mean error, then the name."""
    values = np.array(list(rank_f.values()), dtype=np.float64)
    if not np.all(np.isfinite(values)):
        raise ValueError("Friedman ranks must be finite")
    order = sorted(rank_f, key=lambda a: (rank_f[a], mean_errors[a], a))
    return {a: i + 1 for i, a in enumerate(order)}


def worse_than_supervised(table: ResultsTable, algorithms=None, baseline: str = "supervised") -> dict:
    """Number of settings where each algorithm's mean error is strictly above the baseline's."""
    if baseline not in table.algorithms:
        raise ValueError(f"table has no {baseline!r} row")
    algorithms = [a for a in (table.algorithms if algorithms is None else algorithms) if a != baseline]
    ref = table.means([baseline])[0]
    errs = table.means(algorithms)
    return {a: int((row > ref).sum()) for a, row in zip(algorithms, errs)}


def rank_spread(domain_ranks: dict) -> dict:
    """``max - min`` of each algorithm's rank across domains.

    ``domain_ranks`` maps domain name to ``{algorithm: rank}``; every domain
    must cover the same algorithms.
    """
    if not domain_ranks:
        raise ValueError("need at least one domain")
    sets = [set(r) for r in domain_ranks.values()]
    if any(s != sets[0] for s in sets):
        raise ValueError("domains rank different algorithm sets")
    first = next(iter(domain_ranks.values()))
    return {a: int(max(r[a] for r in domain_ranks.values()) - min(r[a] for r in domain_ranks.values()))
            for a in first}


def pearson(x, y) -> float:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1 or x.size < 2:
        raise ValueError("pearson needs two 1-D sequences of equal length >= 2")
    dx, dy = x - x.mean(), y - y.mean()
    sx, sy = np.sqrt((dx * dx).sum()), np.sqrt((dy * dy).sum())
    if sx == 0 or sy == 0:
        raise ValueError("correlation is undefined for a constant sequence")
    return float(np.clip((dx * dy).sum() / (sx * sy), -1.0, 1.0))


@dataclass
class RankReport:
    domain: str
    table: ResultsTable
    algorithms: list
    friedman: dict
    final_ranks: dict
    mean_errors: dict
    worse_than_supervised: dict | None = None
    rank_spread: dict | None = None
    ties: str = "ordinal"
    tied: list = field(default_factory=list)    # algorithms sharing a Friedman rank with another


def rank_pipeline(table: ResultsTable, domain: str = "results", exclude=(), ties: str = "ordinal") -> RankReport:
    table.validate()
    algorithms = ranked_algorithms(table, exclude)
    rank_f = friedman_rank(table, algorithms, ties)
    means = dict(zip(algorithms, table.means(algorithms).mean(axis=1).tolist()))
    finals = final_rank(rank_f, means)
    worse = None
    if "supervised" in table.algorithms and "supervised" not in algorithms:
        worse = worse_than_supervised(table, algorithms)
    counts: dict = {}
    for a in algorithms:
        counts.setdefault(round(rank_f[a], 9), []).append(a)
    tied = [a for a in algorithms if len(counts[round(rank_f[a], 9)]) > 1]
    return RankReport(domain, table, algorithms, rank_f, finals, means, worse, None, ties, tied)


def attach_spread(reports: list) -> dict | None:
    """Fill ``rank_spread`` on each report from the algorithms common to all; returns the spread."""
    if len(reports) < 2:
        return None
    common = [a for a in reports[0].algorithms if all(a in r.algorithms for r in reports)]
    if not common:
        return None
    per_domain = {}
    for r in reports:
        # re-rank within the common set so every domain uses ranks 1..len(common)
        sub = friedman_rank(r.table, common, r.ties)
        means = {a: r.mean_errors[a] for a in common}
        per_domain[r.domain] = final_rank(sub, means)
    spread = rank_spread(per_domain)
    for r in reports:
        r.rank_spread = spread
    return spread
