"""CSV and Markdown renderings of rank reports."""
from __future__ import annotations

import csv
from pathlib import Path

from .ranking import RankReport

RANK_HEADER = ["domain", "algorithm", "friedman_rank", "final_rank", "mean_error", "worse_than_supervised",
               "rank_spread", "tied"]


def _f(v, digits=4):
    return "" if v is None else f"{v:.{digits}f}"


def write_rank_csv(reports: list[RankReport], path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RANK_HEADER)
        for r in reports:
            for a in sorted(r.algorithms, key=r.final_ranks.get):
                worse = "" if r.worse_than_supervised is None else r.worse_than_supervised[a]
                spread = "" if r.rank_spread is None or a not in r.rank_spread else r.rank_spread[a]
                w.writerow([r.domain, a, _f(r.friedman[a]), r.final_ranks[a], _f(r.mean_errors[a]), worse, spread,
                            int(a in r.tied)])


def render_markdown(reports: list[RankReport]) -> str:
    out = []
    for r in reports:
        t = r.table
        head = ["Algorithm"] + [f"{d} ({n})" for d, n in t.settings] + ["Friedman rank", "Final rank",
                                                                         "Mean error rate"]
        out.append(f"## {r.domain}\n")
        out.append("| " + " | ".join(head) + " |")
        out.append("|" + "---|" * len(head))
        unranked = [a for a in t.algorithms if a not in r.algorithms]
        for a in unranked + sorted(r.algorithms, key=r.final_ranks.get):
            cells = []
            for s in t.settings:
                mean, std, _ = t.cells[(s, a)]
                cells.append(f"{mean:.2f}±{std:.2f}")
            if a in r.algorithms:
                tail = [f"{r.friedman[a]:.2f}", str(r.final_ranks[a]), f"{r.mean_errors[a]:.2f}"]
            else:
                tail = ["-", "-", f"{sum(t.cells[(s, a)][0] for s in t.settings) / len(t.settings):.2f}"]
            out.append("| " + " | ".join([a] + cells + tail) + " |")
        out.append("")
        out.append(f"Ties within a setting are ranked by {'listing order' if r.ties == 'ordinal' else 'averaging'}.")
        if r.tied:
            out.append("Equal Friedman ranks (final rank decided by mean error, then name): "
                       + ", ".join(r.tied) + ".")
        if r.worse_than_supervised is not None:
            out.append("")
            out.append("| Algorithm | Settings worse than supervised |")
            out.append("|---|---|")
            for a in r.algorithms:
                out.append(f"| {a} | {r.worse_than_supervised[a]} |")
        out.append("")
    spread = next((r.rank_spread for r in reports if r.rank_spread), None)
    if spread:
        out.append("## Rank spread across domains\n")
        out.append("| Algorithm | " + " | ".join(r.domain for r in reports) + " | max - min |")
        out.append("|---|" + "---|" * (len(reports) + 1))
        for a in spread:
            out.append(f"| {a} | " + " | ".join(str(r.final_ranks.get(a, "")) for r in reports)
                       + f" | {spread[a]} |")
        out.append("")
        out.append("Domain columns show each domain's overall final rank; the spread is computed after "
                   "re-ranking on the algorithms shared by every domain.")
        out.append("")
    return "\n".join(out)


def write_reports(reports: list[RankReport], out_dir) -> tuple[Path, Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path, md_path = out_dir / "rank_report.csv", out_dir / "rank_report.md"
    write_rank_csv(reports, csv_path)
    md_path.write_text(render_markdown(reports))
    return csv_path, md_path
