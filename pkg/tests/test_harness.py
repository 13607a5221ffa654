import json
import math

import numpy as np
import pytest

from semiforge.augment import weak_augment
from semiforge.harness import (ConfigError, IncompleteMatrixError, ResultsTable, RunConfig, aggregate, attach_spread,
                               benchmark_table, final_rank, friedman_rank, load_config, parse_config_text, pearson,
                               rank_pipeline, rank_spread, read_results_csv, select_checkpoint, train,
                               worse_than_supervised, write_fixtures, write_results_csv)
from semiforge.harness.fixtures import DOMAIN_RANKS_FILE, read_domain_ranks_csv
from semiforge.harness.report import write_reports
from semiforge.harness.train import build_model, error_rate, prepare_split, run_seeds
from semiforge.numkit import OptimState, adamw_step, cosine_lr, cross_entropy_grad, one_hot, softmax


def small_cfg(**kw):
    base = dict(n=200, n_test=200, steps=40, eval_every=10, hidden=(16,), batch_size=8)
    base.update(kw)
    return RunConfig(**base)


# ---------------------------------------------------------------------------
# config

def test_parse_config_sections_comments_and_types(tmp_path):
    text = """
    # header comment
    algorithm = FlexMatch
    [train]
    steps = 200   # inline
    lr = 0.01
    record_wall_time = false
    [model]
    hidden = [32, 32]
    [aug]
    strong_pool = ["noise", 'scale']
    """
    values = parse_config_text(text)
    assert values["train.steps"] == 200 and values["train.lr"] == 0.01
    assert values["train.record_wall_time"] is False and values["model.hidden"] == [32, 32]
    p = tmp_path / "c.cfg"
    p.write_text(text)
    cfg, sweep = load_config(p, ["train.seed=3", "algo.fixed_threshold=0.9"])
    assert cfg.algorithm == "FlexMatch" and cfg.steps == 200 and cfg.seed == 3
    assert cfg.hidden == (32, 32) and cfg.strong_pool == ("noise", "scale")
    assert cfg.algorithm_spec().fixed_threshold == 0.9
    assert len(sweep.cells()) == 1


@pytest.mark.parametrize("override,key", [
    ("train.nope=1", "train.nope"),
    ("algo.nope=1", "algo.nope"),
    ("algorithm=NoSuch", "algorithm"),
    ("train.steps=abc", "train.steps"),
    ("train.eval_every=7", "train.eval_every"),
    ("train.selection=validation", "train.selection"),
])
def test_config_errors_name_the_key(override, key):
    with pytest.raises(ConfigError) as info:
        load_config(None, [override])
    assert info.value.key == key


def test_config_rejects_malformed_lines():
    with pytest.raises(ConfigError):
        parse_config_text("just words\n")
    with pytest.raises(ConfigError):
        load_config("/nonexistent/file.cfg")


def test_sweep_cells_nesting():
    _, sweep = load_config(None, ["sweep.algorithms=[supervised, FixMatch]", "sweep.seeds=[0, 1, 2]",
                                  "sweep.labels_per_class=[2, 4]"])
    cells = sweep.cells()
    assert len(cells) == 12
    assert [(c.labels_per_class, c.algorithm, c.seed) for c in cells[:4]] == [
        (2, "supervised", 0), (2, "supervised", 1), (2, "supervised", 2), (2, "FixMatch", 0)]


# ---------------------------------------------------------------------------
# selection and aggregation

def test_select_checkpoint_examples():
    assert select_checkpoint([12.0, 9.5, 10.1]) == 9.5
    assert select_checkpoint([12.0, 9.5, 10.1], "validation", [8.0, 7.0, 7.5]) == 9.5
    assert select_checkpoint([12.0, 9.5, 10.1], "validation", [7.0, 8.0, 7.0]) == 12.0
    with pytest.raises(ValueError):
        select_checkpoint([])
    with pytest.raises(ValueError):
        select_checkpoint([1.0], "validation")


def test_aggregate_population_std():
    t = aggregate([("d", 4, "A", 10.0), ("d", 4, "A", 20.0), ("d", 4, "A", 30.0)])
    mean, std, n = t.cells[(("d", 4), "A")]
    assert mean == 20.0 and std == pytest.approx(8.165, abs=1e-3) and n == 3


def test_aggregate_missing_cell_raises():
    runs = [("d", 4, "A", 1.0), ("d", 4, "B", 2.0), ("e", 4, "A", 3.0)]
    with pytest.raises(IncompleteMatrixError) as info:
        aggregate(runs)
    assert info.value.missing == [(("e", 4), "B")]
    assert aggregate(runs, require_complete=False).missing() == [(("e", 4), "B")]


def test_results_csv_round_trip(tmp_path):
    t = aggregate([("d", 4, "A", 1.25), ("d", 4, "B", 2.0), ("e", 8, "A", 3.0), ("e", 8, "B", 1.0 / 3)])
    write_results_csv(t, tmp_path / "r.csv", comments=["note"])
    back = read_results_csv(tmp_path / "r.csv")
    assert back.settings == t.settings and back.algorithms == t.algorithms
    for k, v in t.cells.items():
        assert back.cells[k][0] == pytest.approx(v[0], rel=1e-9)


def test_results_csv_rejects_bad_header(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("a,b,c\n")
    with pytest.raises(ValueError):
        read_results_csv(p)


# ---------------------------------------------------------------------------
# ranking

def _table(errors: dict) -> ResultsTable:
    algs = list(errors)
    settings = [("s", i) for i in range(len(errors[algs[0]]))]
    cells = {(s, a): (errors[a][i], 0.0, 1) for a in algs for i, s in enumerate(settings)}
    return ResultsTable(settings, algs, cells)


def test_friedman_example():
    t = _table({"A": [10.0, 30.0], "B": [20.0, 20.0], "C": [30.0, 10.0]})
    assert friedman_rank(t) == {"A": 2.0, "B": 2.0, "C": 2.0}
    t = _table({"A": [1.0, 2.0], "B": [2.0, 1.0], "C": [3.0, 3.0]})
    assert friedman_rank(t) == {"A": 1.5, "B": 1.5, "C": 3.0}


def test_friedman_tie_methods():
    t = _table({"A": [5.0], "B": [5.0], "C": [1.0]})
    assert friedman_rank(t, ties="ordinal") == {"A": 2.0, "B": 3.0, "C": 1.0}
    assert friedman_rank(t, ties="average") == {"A": 2.5, "B": 2.5, "C": 1.0}
    with pytest.raises(ValueError):
        friedman_rank(t, ties="dense")
    with pytest.raises(ValueError):
        friedman_rank(_table({"A": [1.0]}))


def test_friedman_single_setting_is_per_setting_rank():
    t = _table({"A": [3.0], "B": [1.0], "C": [2.0]})
    assert friedman_rank(t) == {"A": 3.0, "B": 1.0, "C": 2.0}


def test_final_rank_tie_breaks():
    assert final_rank({"A": 1.5, "B": 1.5, "C": 3.0}, {"A": 2.0, "B": 1.0, "C": 0.5}) == {"B": 1, "A": 2, "C": 3}
    assert final_rank({"B": 2.0, "A": 2.0}, {"A": 1.0, "B": 1.0}) == {"A": 1, "B": 2}
    with pytest.raises(ValueError):
        final_rank({"A": float("nan"), "B": 1.0}, {"A": 0.0, "B": 0.0})


def test_worse_than_supervised_strict():
    t = _table({"supervised": [10.0, 10.0, 10.0], "A": [11.0, 10.0, 9.0], "B": [12.0, 13.0, 14.0]})
    assert worse_than_supervised(t) == {"A": 1, "B": 3}
    with pytest.raises(ValueError):
        worse_than_supervised(_table({"A": [1.0], "B": [2.0]}))


def test_rank_spread_examples():
    assert rank_spread({"x": {"A": 1, "B": 2}, "y": {"A": 2, "B": 1}, "z": {"A": 5, "B": 1}}) == {"A": 4, "B": 1}
    assert rank_spread({"x": {"A": 3}}) == {"A": 0}
    with pytest.raises(ValueError):
        rank_spread({"x": {"A": 1}, "y": {"B": 1}})


def test_pearson_examples():
    from scipy.stats import pearsonr
    # 4.1 / sqrt(2 * 8.40667) = 0.99990
    assert pearson([1, 2, 3], [2, 4, 6.1]) == pytest.approx(0.99990, abs=1e-5)
    x, y = np.random.default_rng(0).normal(size=(2, 30))
    assert pearson(x, y) == pytest.approx(pearsonr(x, y)[0], abs=1e-12)
    assert pearson([1, 2, 3], [3, 2, 1]) == pytest.approx(-1.0)
    with pytest.raises(ValueError):
        pearson([1, 1, 1], [1, 2, 3])


def test_rank_pipeline_drops_baselines_and_counts_worse():
    t = _table({"supervised": [10.0, 10.0], "A": [5.0, 11.0], "B": [6.0, 7.0]})
    r = rank_pipeline(t)
    assert r.algorithms == ["A", "B"]
    assert r.worse_than_supervised == {"A": 1, "B": 0}
    assert r.final_ranks == {"B": 1, "A": 2}
    assert r.tied == ["A", "B"]


def test_rank_pipeline_rejects_incomplete():
    t = _table({"A": [1.0, 2.0], "B": [2.0, 1.0]})
    del t.cells[(("s", 1), "B")]
    with pytest.raises(IncompleteMatrixError):
        rank_pipeline(t)


def test_attach_spread_uses_common_algorithms():
    r1 = rank_pipeline(_table({"A": [1.0], "B": [2.0], "C": [3.0]}), "one")
    r2 = rank_pipeline(_table({"A": [3.0], "B": [2.0]}), "two")
    assert attach_spread([r1, r2]) == {"A": 1, "B": 1}
    assert r1.rank_spread == r2.rank_spread


def test_fixtures_round_trip(tmp_path):
    paths = write_fixtures(tmp_path)
    assert len(paths) == 4
    t = read_results_csv(tmp_path / "cv.csv")
    ref = benchmark_table("cv")
    assert t.settings == [(s, int(n)) for s, n in ref.settings] and t.algorithms == ref.algorithms
    ranks = read_domain_ranks_csv(tmp_path / DOMAIN_RANKS_FILE)
    assert set(ranks) == {"cv", "nlp", "audio"}


def test_reports_written(tmp_path):
    r = rank_pipeline(_table({"supervised": [3.0], "A": [1.0], "B": [2.0]}), "toy")
    csv_path, md_path = write_reports([r], tmp_path)
    lines = csv_path.read_text().splitlines()
    assert lines[0].startswith("domain,algorithm,friedman_rank")
    assert len(lines) == 3
    assert "| A |" in md_path.read_text() or "A" in md_path.read_text()


# ---------------------------------------------------------------------------
# training

def test_zero_steps_reports_initial_error(tmp_path):
    res = train(small_cfg(steps=0), tmp_path)
    assert res.curve == [] and not res.aborted
    assert res.selected_error == res.initial_error
    assert (tmp_path / "log.jsonl").read_text() == ""


def test_supervised_matches_hand_loop():
    cfg = small_cfg(algorithm="supervised", steps=20, eval_every=20, weight_decay=1e-3)
    res = train(cfg)

    split_rng, model_rng, batch_rng, step_rng = run_seeds(cfg.seed)
    split, labeled = prepare_split(cfg, split_rng)
    model = build_model(cfg, cfg.algorithm_spec(), labeled.dim, labeled.class_count, model_rng)
    opt = OptimState(lr=cfg.lr, weight_decay=cfg.weight_decay)
    aug = cfg.augment_config()
    for k in range(cfg.steps):
        li = batch_rng.integers(0, len(labeled), size=cfg.batch_size)
        batch_rng.integers(0, len(split.unlabeled_x), size=cfg.batch_size)
        x = weak_augment(labeled.features[li], aug, step_rng)
        fwd = model.forward(x)
        g = cross_entropy_grad(softmax(fwd.logits), one_hot(labeled.labels[li], 2))
        grads, _ = model.backward(fwd, g)
        adamw_step(opt, model, grads, cosine_lr(k, cfg.steps, cfg.lr))
    assert res.curve[-1].test_error == error_rate(model, split.test)


def test_ema_zero_momentum_matches_raw_model():
    res = train(small_cfg(ema_momentum=0.0))
    assert all(p.ema_test_error == p.test_error for p in res.curve)


def test_logs_byte_identical_without_wall_time(tmp_path):
    cfg = small_cfg(record_wall_time=False)
    train(cfg, tmp_path / "a")
    train(cfg, tmp_path / "b")
    a = (tmp_path / "a" / "log.jsonl").read_bytes()
    assert a == (tmp_path / "b" / "log.jsonl").read_bytes()
    rec = json.loads(a.splitlines()[0])
    for key in ("step", "test_error", "mask_rate", "pl_acc", "lr", "total_loss", "sup_loss", "unsup_loss",
                "aux_loss", "wall_ms"):
        assert key in rec
    assert len(a.splitlines()) == cfg.steps // cfg.eval_every


def test_huge_learning_rate_aborts(tmp_path):
    res = train(small_cfg(lr=1e300, init_scale=1e3), tmp_path)
    assert res.aborted and res.abort_reason
    assert json.loads((tmp_path / "summary.json").read_text())["aborted"] is True


def test_validation_selection_uses_val_curve():
    res = train(small_cfg(val_per_class=5, selection="validation"))
    vals = [p.val_error for p in res.curve]
    assert res.selected_error == res.curve[int(np.argmin(vals))].test_error


def test_every_algorithm_trains_finitely():
    from semiforge.algorithms import SSL_ALGORITHMS
    for name in SSL_ALGORITHMS + ("supervised", "fully_supervised"):
        res = train(small_cfg(algorithm=name, steps=20))
        assert not res.aborted, name
        assert all(math.isfinite(p.total_loss) for p in res.curve), name
