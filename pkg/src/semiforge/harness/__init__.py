"""Training loop, sweeps, aggregation and benchmark ranking."""
from .config import ConfigError, RunConfig, SweepConfig, load_config, parse_config_text
from .fixtures import benchmark_table, write_fixtures
from .ranking import (RankReport, attach_spread, final_rank, friedman_rank, pearson, rank_pipeline, rank_spread,
                      worse_than_supervised)
from .report import write_reports
from .results import (IncompleteMatrixError, ResultsTable, aggregate, read_results_csv, select_checkpoint,
                      write_results_csv)
from .sweep import run_sweep
from .train import RunResult, train

__all__ = [
    "ConfigError", "IncompleteMatrixError", "RankReport", "ResultsTable", "RunConfig", "RunResult", "SweepConfig",
    "aggregate", "attach_spread", "benchmark_table", "final_rank", "friedman_rank", "load_config",
    "parse_config_text", "pearson", "rank_pipeline", "rank_spread", "read_results_csv", "run_sweep",
    "select_checkpoint", "train", "worse_than_supervised", "write_fixtures", "write_reports", "write_results_csv",
]
