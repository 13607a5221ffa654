"""Command-line entry point.

Exit codes: 0 success; 1 file-system error; 2 bad config, bad input or
incomplete results matrix; 3 training run aborted; 4 some sweep cell failed.
"""
from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .harness.config import ConfigError, load_config
from .harness.fixtures import read_domain_ranks_csv, write_fixtures
from .harness.ranking import TIE_METHODS, attach_spread, rank_pipeline, rank_spread
from .harness.report import write_reports
from .harness.results import IncompleteMatrixError, read_results_csv
from .harness.sweep import run_id, run_sweep
from .harness.train import train

EXIT_OK, EXIT_IO, EXIT_USAGE, EXIT_ABORTED, EXIT_SWEEP_FAILED = 0, 1, 2, 3, 4
DEFAULT_OUT = "semiforge_out"


def _out_root(args, cfg_out: str = "") -> Path:
    return Path(args.out or cfg_out or os.environ.get("SEMIFORGE_OUT") or DEFAULT_OUT)


def _config_error(exc: ConfigError) -> int:
    where = f" [{exc.key}]" if exc.key else ""
    print(f"error{where}: {exc}", file=sys.stderr)
    return EXIT_USAGE


def cmd_run(args) -> int:
    try:
        cfg, _ = load_config(args.config, args.set)
    except ConfigError as exc:
        return _config_error(exc)
    run_dir = _out_root(args, cfg.out) / run_id(cfg)
    res = train(cfg, run_dir)
    status = "aborted" if res.aborted else "ok"
    print(f"{run_id(cfg)}: {status} algorithm={cfg.algorithm} steps={cfg.steps} "
          f"selected_error={res.selected_error:.2f}% log={run_dir / 'log.jsonl'}")
    if res.aborted:
        print(f"error: run aborted: {res.abort_reason}", file=sys.stderr)
        return EXIT_ABORTED
    return EXIT_OK


def cmd_sweep(args) -> int:
    try:
        cfg, sweep = load_config(args.config, args.set)
    except ConfigError as exc:
        return _config_error(exc)
    out = _out_root(args, cfg.out)

    def progress(cell):
        tag = "reused" if cell.reused else ("FAILED " + cell.failure if cell.error is None else "done")
        err = "" if cell.error is None else f" error={cell.error:.2f}%"
        print(f"{run_id(cell.config)}: {tag}{err}", flush=True)

    outcome = run_sweep(sweep, out, workers=args.workers, resume=args.resume, progress=progress)
    print(f"results: {out / 'results.csv'}")
    if outcome.reports:
        print(f"rank report: {out / 'rank_report.csv'}")
    if outcome.failures:
        print(f"error: {len(outcome.failures)} of {len(outcome.cells)} cells failed; see {out / 'failures.txt'}",
              file=sys.stderr)
        return EXIT_SWEEP_FAILED
    return EXIT_OK


def cmd_rank(args) -> int:
    if not args.results and not args.domain_ranks:
        print("error: give at least one results CSV or --domain-ranks", file=sys.stderr)
        return EXIT_USAGE
    exclude = [a.strip() for a in args.exclude.split(",") if a.strip()] if args.exclude else []
    reports = []
    for path in args.results:
        try:
            table = read_results_csv(path)
            reports.append(rank_pipeline(table, Path(path).stem, exclude=exclude, ties=args.ties))
        except IncompleteMatrixError as exc:
            print(f"error: {path}: incomplete matrix, missing cells:", file=sys.stderr)
            for (dataset, lpc), alg in exc.missing:
                print(f"  {dataset},{lpc},{alg}", file=sys.stderr)
            return EXIT_USAGE
        except ValueError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_USAGE
    attach_spread(reports)
    for r in reports:
        print(f"[{r.domain}]")
        print(f"{'algorithm':<18}{'friedman':>9}{'final':>7}{'mean_err':>10}{'worse':>7}")
        for a in sorted(r.algorithms, key=r.final_ranks.get):
            worse = "" if r.worse_than_supervised is None else str(r.worse_than_supervised[a])
            print(f"{a:<18}{r.friedman[a]:>9.2f}{r.final_ranks[a]:>7d}{r.mean_errors[a]:>10.2f}{worse:>7}")
    if args.domain_ranks:
        try:
            spread = rank_spread(read_domain_ranks_csv(args.domain_ranks))
        except ValueError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_USAGE
        print("[rank spread]")
        for a, v in spread.items():
            print(f"{a:<18}{v:>4d}")
    elif len(reports) > 1 and reports[0].rank_spread:
        print("[rank spread]")
        for a, v in reports[0].rank_spread.items():
            print(f"{a:<18}{v:>4d}")
    if args.out and reports:
        csv_path, md_path = write_reports(reports, args.out)
        print(f"wrote {csv_path} and {md_path}")
    return EXIT_OK


def cmd_fixtures(args) -> int:
    for path in write_fixtures(args.out or "fixtures"):
        print(path)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="semiforge", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config_required=True):
        sp.add_argument("--config", required=config_required, help="config file (key = value lines)")
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config entry; repeatable")
        sp.add_argument("--out", help="output root (default: $SEMIFORGE_OUT or ./semiforge_out)")

    sp = sub.add_parser("run", help="train one configuration")
    common(sp, config_required=False)
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("sweep", help="train a grid of runs, then aggregate and rank")
    common(sp)
    sp.add_argument("--workers", type=int, default=1, help="parallel worker processes")
    sp.add_argument("--resume", action="store_true", help="reuse finished runs found under the output root")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("rank", help="rank algorithms from results CSVs (one per domain)")
    sp.add_argument("results", nargs="*", help="CSV files with the results-table header")
    sp.add_argument("--exclude", help="comma-separated algorithms to leave out of the ranking")
    sp.add_argument("--ties", choices=TIE_METHODS, default="ordinal",
                    help="tie handling within a setting (default: listing order)")
    sp.add_argument("--domain-ranks", help="CSV of per-domain final ranks; prints their spread")
    sp.add_argument("--out", help="directory for rank_report.csv / rank_report.md")
    sp.set_defaults(func=cmd_rank)

    sp = sub.add_parser("fixtures", help="write the embedded published-results CSVs")
    sp.add_argument("--out", help="target directory (default: ./fixtures)")
    sp.set_defaults(func=cmd_fixtures)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "workers", 1) < 1:
        print("error: --workers must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
