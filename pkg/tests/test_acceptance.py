"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line."""
import csv
import time

import numpy as np
import pytest

from semiforge.algorithms import (SSL_ALGORITHMS, AlgorithmState, compose,
                                  confidence_mask, distribution_align, flex_thresholds, unlabeled_step,
                                  vat_perturbation)
from semiforge.augment import AugmentConfig
from semiforge.cli import main
from semiforge.harness import RunConfig, train, write_fixtures
from semiforge.harness.fixtures import (DOMAIN_RANKS_FILE, FIXTURE_FILES, PUBLISHED_RANKS,
                                        PUBLISHED_SPREAD, PUBLISHED_WORSE_THAN_SUPERVISED, read_domain_ranks_csv)
from semiforge.numkit import Mlp, softmax

from .helpers import check_mlp_gradients, random_architecture
from .test_algorithms import COMPONENTS, easy_spec, model_for, toy_batches

ANCHORS = {"cv": ("ReMixMatch", 4.00, 1), "nlp": ("SimMatch", 2.90, 1), "audio": ("AdaMatch", 2.89, 1)}


def report(capsys, label, ok, detail=""):
    with capsys.disabled():
        print(f"\n[acceptance] {label}: {'PASS' if ok else 'FAIL'}{' - ' + detail if detail else ''}")


@pytest.fixture(scope="module")
def ranked(tmp_path_factory):
    """Fixtures written to disk, ranked through the CLI; returns (rows by domain, seconds, fixture dir)."""
    root = tmp_path_factory.mktemp("rank")
    write_fixtures(root / "fx")
    paths = [str(root / "fx" / FIXTURE_FILES[d]) for d in ("cv", "nlp", "audio")]
    t0 = time.perf_counter()
    code = main(["rank", *paths, "--out", str(root / "out")])
    elapsed = time.perf_counter() - t0
    assert code == 0
    rows = {}
    with (root / "out" / "rank_report.csv").open() as fh:
        for row in csv.DictReader(fh):
            rows.setdefault(row["domain"], {})[row["algorithm"]] = row
    return rows, elapsed, root / "fx"


@pytest.mark.parametrize("domain", ["cv", "nlp", "audio"])
def test_criterion_1_rank_pipeline_reproduces_published_ranks(ranked, capsys, domain):
    rows, elapsed, _ = ranked
    published = PUBLISHED_RANKS[domain]
    got = rows[domain]
    values = [f for f, _, _ in published.values()]
    tied = {a for a, (f, _, _) in published.items() if values.count(f) > 1}
    bad_f = [a for a, (f, _, _) in published.items() if abs(float(got[a]["friedman_rank"]) - f) > 0.01]
    bad_final = [a for a, (_, r, _) in published.items() if a not in tied and int(got[a]["final_rank"]) != r]
    name, f_anchor, r_anchor = ANCHORS[domain]
    anchor_ok = abs(float(got[name]["friedman_rank"]) - f_anchor) <= 0.01 and int(got[name]["final_rank"]) == r_anchor
    ok = set(got) == set(published) and not bad_f and not bad_final and anchor_ok and elapsed < 1.0
    report(capsys, f"criterion 1 ({domain})", ok,
           f"{len(published)} algorithms, friedman mismatches {bad_f}, final mismatches {bad_final}, "
           f"{name} {float(got[name]['friedman_rank']):.2f}/rank {got[name]['final_rank']}, "
           f"tied exempt {sorted(tied)}, {elapsed:.3f}s")
    assert ok


@pytest.mark.parametrize("domain", ["cv", "nlp", "audio"])
def test_criterion_2_worse_than_supervised_counts(ranked, capsys, domain):
    rows, elapsed, _ = ranked
    got = {a: int(r["worse_than_supervised"]) for a, r in rows[domain].items()}
    want = PUBLISHED_WORSE_THAN_SUPERVISED[domain]
    diff = {a: (got.get(a), w) for a, w in want.items() if got.get(a) != w}
    ok = not diff and elapsed < 1.0
    report(capsys, f"criterion 2 ({domain})", ok, f"mismatches (computed, published): {diff or 'none'}")
    assert ok


def test_criterion_3_rank_spread(ranked, capsys):
    _, _, fx = ranked
    from semiforge.harness import rank_spread
    got = rank_spread(read_domain_ranks_csv(fx / DOMAIN_RANKS_FILE))
    ok = got == PUBLISHED_SPREAD
    report(capsys, "criterion 3", ok, f"FixMatch/CoMatch/CRMatch/FlexMatch = "
           f"{got['FixMatch']}/{got['CoMatch']}/{got['CRMatch']}/{got['FlexMatch']}")
    assert ok


def test_criterion_4_gradient_correctness(capsys):
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    worst, skipped = 0.0, 0
    for i in range(100):
        sizes, embed, pretext = random_architecture(rng)
        m = Mlp(sizes, embed_dim=embed, pretext_classes=pretext, rng=rng)
        for k in m.params:  # non-zero biases keep pre-activations away from the ReLU kink
            m.params[k] = m.params[k] + 0.1 * rng.normal(size=m.params[k].shape)
        w, s = check_mlp_gradients(m, rng, batch=int(rng.integers(1, 6)))
        worst, skipped = max(worst, w), skipped + s
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-4 and elapsed < 30.0
    report(capsys, "criterion 4", ok, f"max relative error {worst:.2e}, {skipped} kink entries skipped, "
           f"{elapsed:.1f}s")
    assert ok


def test_criterion_5_desk_scale_ssl_benefit(capsys):
    algorithms = ["supervised", "FixMatch", "FlexMatch", "AdaMatch", "SimMatch"]
    medians, slowest = {}, 0.0
    for name in algorithms:
        errs = []
        for seed in range(5):
            cfg = RunConfig(algorithm=name, dataset="two_moons", n=1000, noise=0.1, labels_per_class=4,
                            steps=4000, seed=seed)
            t0 = time.perf_counter()
            res = train(cfg)
            slowest = max(slowest, time.perf_counter() - t0)
            assert not res.aborted
            errs.append(res.selected_error)
        medians[name] = float(np.median(errs))
    sup = medians["supervised"]
    ok = all(medians[a] <= sup for a in algorithms[1:]) and medians["FixMatch"] <= 5.0 and slowest < 300.0
    report(capsys, "criterion 5", ok, ", ".join(f"{a} {m:.1f}%" for a, m in medians.items())
           + f", slowest run {slowest:.1f}s")
    assert ok


def test_criterion_6_component_matrix_and_zero_weight_collapse(capsys):
    rows_ok = [compose(n).component_row() == COMPONENTS[n] for n in SSL_ALGORITHMS]
    worst = 0.0
    aug = AugmentConfig()
    for name in SSL_ALGORITHMS:
        for seed in range(3):
            spec = easy_spec(name, unsup_weight=0.0)
            m = model_for(spec, seed=seed)
            lb, ub = toy_batches(seed)
            out = unlabeled_step(spec, AlgorithmState.init(spec, m, len(ub.x), lb.y), m, None, ub, lb, 5, 10, aug,
                                 np.random.default_rng(seed))
            base = compose("supervised")
            ref = unlabeled_step(base, AlgorithmState.init(base, m, len(ub.x)), m.copy(), None, ub, lb, 5, 10, aug,
                                 np.random.default_rng(seed))
            worst = max(worst, abs(out.total_loss - ref.total_loss),
                        max(float(np.abs(out.grads[k] - ref.grads[k]).max()) for k in ref.grads))
    ok = all(rows_ok) and worst <= 1e-12
    report(capsys, "criterion 6", ok, f"{sum(rows_ok)}/14 component rows match, "
           f"max |loss or grad difference| at unsup weight 0 = {worst:.1e}")
    assert ok


def test_criterion_7_normalisation_and_masking_invariants(capsys):
    rng = np.random.default_rng(7)
    checks, failures = 0, []
    per_kind = 25_000

    # softmax and distribution alignment sum to one
    done = 0
    while done < per_kind:
        k = int(rng.integers(2, 11))
        n = min(500, per_kind - done)
        logits = rng.normal(scale=rng.uniform(0.1, 30.0), size=(n, k))
        p = softmax(logits)
        q = distribution_align(p, rng.dirichlet(np.ones(k)), rng.dirichlet(np.ones(k)) + 1e-3)
        for arr, what in ((p, "softmax"), (q, "align")):
            err = np.abs(arr.sum(axis=1) - 1.0).max()
            if err > 1e-9:
                failures.append((what, err))
        done += n
    checks += done

    # mask rate monotone in the threshold
    for _ in range(per_kind // 100):
        p = rng.dirichlet(np.full(int(rng.integers(2, 8)), rng.uniform(0.2, 3.0)), size=50)
        taus = np.sort(rng.uniform(0, 1, size=100))
        rates = np.array([confidence_mask(p, t).mean() for t in taus])
        if np.any(np.diff(rates) > 0):
            failures.append(("mask", taus))
        checks += 100

    # FlexMatch per-class thresholds stay in [0, tau]
    for _ in range(per_kind):
        k = int(rng.integers(1, 12))
        counts = rng.integers(0, 1000, size=k) * (rng.random(k) < 0.8)
        tau = float(rng.uniform(0, 1))
        t = flex_thresholds(counts, tau)
        if np.any(t < 0) or np.any(t > tau):
            failures.append(("flex", counts, tau))
    checks += per_kind

    # VAT perturbation has norm epsilon
    done = 0
    while done < per_kind:
        d, k = int(rng.integers(1, 6)), int(rng.integers(2, 5))
        m = Mlp([d, int(rng.integers(1, 9)), k], rng=rng)
        n = min(100, per_kind - done)
        eps = float(rng.uniform(1e-3, 10.0))
        r, _ = vat_perturbation(m, rng.normal(size=(n, d)), 1e-6, eps, int(rng.integers(1, 3)), rng)
        err = np.abs(np.linalg.norm(r, axis=1) - eps).max()
        if err > 1e-9:
            failures.append(("vat", err))
        done += n
    checks += done

    ok = not failures and checks >= 100_000
    report(capsys, "criterion 7", ok, f"{checks} randomized checks, {len(failures)} failures")
    assert ok


SWEEP_CFG = """
sweep.algorithms = [supervised, FixMatch, FlexMatch]
sweep.seeds = [0, 1]
sweep.labels_per_class = [2, 4]
data.n = 300
data.n_test = 300
train.steps = 60
train.eval_every = 20
model.hidden = [16, 16]
"""


def test_criterion_8_sweep_determinism(tmp_path, capsys):
    cfg = tmp_path / "sweep.cfg"
    cfg.write_text(SWEEP_CFG)
    assert main(["sweep", "--config", str(cfg), "--out", str(tmp_path / "a")]) == 0
    assert main(["sweep", "--config", str(cfg), "--out", str(tmp_path / "b"), "--workers", "2"]) == 0
    same = {name: (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
            for name in ("results.csv", "rank_report.csv")}
    ok = all(same.values())
    report(capsys, "criterion 8", ok, ", ".join(f"{k} {'identical' if v else 'DIFFERS'}" for k, v in same.items()))
    assert ok
