import numpy as np
import pytest

from semiforge.data import (CsvFormatError, Dataset, gen_gauss_mixture, gen_two_moons, load_csv, long_tail,
                            make_dataset, save_csv, split_ssl)


def test_two_moons_noise_free_points_on_arcs():
    ds = gen_two_moons(4, 0.0, 0)
    for (x, y), c in zip(ds.features, ds.labels):
        if c == 0:
            assert x ** 2 + y ** 2 == pytest.approx(1.0) and y >= -1e-12
        else:
            assert (x - 1) ** 2 + (y - 0.5) ** 2 == pytest.approx(1.0) and y <= 0.5 + 1e-12


def test_two_moons_balanced_and_deterministic():
    ds = gen_two_moons(200, 0.1, 3)
    np.testing.assert_array_equal(ds.class_counts(), [100, 100])
    assert ds == gen_two_moons(200, 0.1, 3)
    with pytest.raises(ValueError):
        gen_two_moons(5, 0.1, 0)


def test_two_moons_not_linearly_separable():
    ds = gen_two_moons(1000, 0.0, 0)
    x, y = ds.features, ds.labels
    best = 1.0
    for deg in range(360):
        w = np.array([np.cos(np.radians(deg)), np.sin(np.radians(deg))])
        proj = x @ w
        order = np.argsort(proj)
        ys = y[order]
        # best threshold along this direction: predict 1 above the cut
        ones_below = np.concatenate([[0], np.cumsum(ys)])
        zeros_above = np.concatenate([[0], np.cumsum((1 - ys)[::-1])])[::-1]
        errs = (ones_below + zeros_above) / len(y)
        best = min(best, errs.min())
    assert best > 0.10


def test_gauss_mixture_examples():
    ds = gen_gauss_mixture(300, 3, 4, 0.0, 1)
    np.testing.assert_array_equal(ds.class_counts(), [100, 100, 100])
    assert ds == gen_gauss_mixture(300, 3, 4, 0.0, 1)
    ds = gen_gauss_mixture(1000, 2, 2, 10.0, 2)
    means = np.array([ds.features[ds.labels == c].mean(axis=0) for c in range(2)])
    assert np.linalg.norm(means[0] - means[1]) == pytest.approx(10.0, rel=0.05)
    d = ((ds.features[:, None, :] - means[None]) ** 2).sum(axis=2)
    assert np.mean(d.argmin(axis=1) != ds.labels) < 0.01
    with pytest.raises(ValueError):
        gen_gauss_mixture(301, 3, 4, 1.0, 0)


def test_zero_separation_means_coincide():
    from semiforge.data import simplex_means
    np.testing.assert_array_equal(simplex_means(4, 5, 0.0), np.zeros((4, 5)))
    m = simplex_means(4, 5, 3.0)
    dists = [np.linalg.norm(m[i] - m[j]) for i in range(4) for j in range(i + 1, 4)]
    np.testing.assert_allclose(dists, 3.0)


def test_long_tail_is_geometric():
    ds = long_tail(gen_gauss_mixture(1000, 4, 4, 3.0, 0), 10.0, 0)
    counts = ds.class_counts()
    assert counts[0] == 250 and counts[-1] == 25
    assert all(a >= b for a, b in zip(counts, counts[1:]))


def test_load_csv_basic(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("# comment\n0,1.0,2.0\n1,3.0,4.0\n")
    ds = load_csv(p)
    assert len(ds) == 2 and ds.dim == 2 and ds.class_count == 2


@pytest.mark.parametrize("text,line", [("0,1,2\n1,3\n", 2), ("0,1,2\n1,x,4\n", 2), ("", 1), ("# only\n", 1)])
def test_load_csv_errors_name_line(tmp_path, text, line):
    p = tmp_path / "bad.csv"
    p.write_text(text)
    with pytest.raises(CsvFormatError, match=f":{line}:"):
        load_csv(p)


def test_csv_round_trip(tmp_path):
    ds = gen_gauss_mixture(30, 3, 2, 2.0, 5)
    save_csv(ds, tmp_path / "x.csv")
    assert load_csv(tmp_path / "x.csv") == ds


def test_split_counts_and_partition():
    ds = gen_two_moons(100, 0.1, 0)
    sp = split_ssl(ds, 4, 0, seed=1, include_labeled_in_unlabeled=False)
    assert len(sp.labeled) == 8 and len(sp.unlabeled_x) == 92
    np.testing.assert_array_equal(sp.labeled.class_counts(), [4, 4])
    all_idx = np.concatenate([sp.labeled_index, sp.unlabeled_index, sp.validation_index])
    np.testing.assert_array_equal(np.sort(all_idx), np.arange(100))


def test_split_with_validation_and_flag_on():
    ds = gen_two_moons(100, 0.1, 0)
    sp = split_ssl(ds, 3, 5, seed=2)
    assert len(sp.validation) == 10
    assert set(sp.labeled_index) <= set(sp.unlabeled_index)
    assert not set(sp.validation_index) & set(sp.unlabeled_index)
    np.testing.assert_array_equal(sp.reveal_unlabeled(np.arange(len(sp.unlabeled_x))),
                                  ds.labels[sp.unlabeled_index])


def test_split_all_labeled_leaves_unlabeled_empty():
    ds = gen_two_moons(20, 0.1, 0)
    sp = split_ssl(ds, 10, seed=0, include_labeled_in_unlabeled=False)
    assert len(sp.unlabeled_x) == 0
    with pytest.raises(ValueError):
        split_ssl(ds, 11, seed=0)


def test_split_seeds_differ():
    ds = gen_two_moons(1000, 0.1, 0)
    base = split_ssl(ds, 4, seed=0).labeled_index
    differ = sum(not np.array_equal(split_ssl(ds, 4, seed=s).labeled_index, base) for s in range(1, 21))
    assert differ >= 19


def test_all_training_restores_labels():
    ds = gen_two_moons(50, 0.1, 0)
    sp = split_ssl(ds, 2, 0, seed=0)
    full = sp.all_training()
    assert len(full) == 50
    np.testing.assert_array_equal(np.sort(full.labels), np.sort(ds.labels))


def test_make_dataset_specs(tmp_path):
    tr, te = make_dataset("two_moons", n=100, n_test=50, seed=1)
    assert len(tr) == 100 and len(te) == 50
    tr, te = make_dataset("gauss3x4", n=90, n_test=30, seed=1)
    assert tr.class_count == 3 and tr.dim == 4
    save_csv(gen_gauss_mixture(100, 2, 3, 2.0, 0), tmp_path / "f.csv")
    tr, te = make_dataset(f"csv:{tmp_path / 'f.csv'}", test_fraction=0.2)
    assert len(tr) == 80 and len(te) == 20
    with pytest.raises(ValueError):
        make_dataset("mnist")


def test_dataset_validates_labels():
    with pytest.raises(ValueError):
        Dataset(np.zeros((2, 2)), np.array([0, 2]), 2)
