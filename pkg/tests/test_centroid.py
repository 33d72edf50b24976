"""Nearest-mean fitting, ranked classification, and tapped-feature ingestion."""

import numpy as np
import pytest

from wordlab.centroid import (
    classify,
    classify_batch,
    evaluate,
    fit_centroids,
    load_tapped_features,
    partition_by_index,
)


def bruteforce_centroids(pairs):
    """Independent accumulation oracle."""
    groups = {}
    for label, v in pairs:
        groups.setdefault(label, []).append(np.asarray(v, dtype=np.float64))
    return {label: np.mean(np.stack(vs), axis=0) for label, vs in groups.items()}


# ---------------------------------------------------------------------- fit


def test_single_vector_centroid():
    model = fit_centroids([("a", np.array([1.0, 2.0])), ("b", np.array([5.0, 5.0]))])
    assert model.labels == ("a", "b")
    np.testing.assert_array_equal(model.centroids[0], [1.0, 2.0])


def test_two_point_mean():
    model = fit_centroids([("a", np.array([1.0, 1.0])), ("a", np.array([3.0, 3.0]))])
    np.testing.assert_array_equal(model.centroids[0], [2.0, 2.0])


def test_fit_matches_bruteforce():
    rng = np.random.default_rng(0)
    pairs = [(f"c{rng.integers(5)}", rng.standard_normal(8)) for _ in range(100)]
    model = fit_centroids(pairs)
    oracle = bruteforce_centroids(pairs)
    for label, centroid in zip(model.labels, model.centroids):
        np.testing.assert_allclose(centroid, oracle[label], atol=1e-12)


def test_fit_rejects_empty_and_mismatched():
    with pytest.raises(ValueError):
        fit_centroids([])
    with pytest.raises(ValueError, match="dimension"):
        fit_centroids([("a", np.zeros(2)), ("b", np.zeros(3))])


# ----------------------------------------------------------------- classify


def test_query_on_centroid():
    model = fit_centroids([("a", np.array([0.0, 0.0])), ("b", np.array([4.0, 0.0]))])
    label, ranked = classify(model, np.array([4.0, 0.0]))
    assert label == "b"
    assert ranked[0] == ("b", 0.0)
    assert [r[0] for r in ranked] == ["b", "a"]


def test_one_dimensional_boundary():
    model = fit_centroids([("a", np.array([0.0])), ("b", np.array([1.0]))])
    assert classify(model, np.array([0.4]))[0] == "a"


def test_tie_breaks_lexicographically():
    model = fit_centroids([("b", np.array([1.0])), ("a", np.array([-1.0]))])
    assert classify(model, np.array([0.0]))[0] == "a"
    assert classify_batch(model, np.array([[0.0]])) == ["a"]


def test_classify_matches_exhaustive_scan():
    rng = np.random.default_rng(1)
    pairs = [(f"c{rng.integers(10)}", rng.standard_normal(16)) for _ in range(120)]
    model = fit_centroids(pairs)
    oracle = bruteforce_centroids(pairs)
    labels = sorted(oracle)
    queries = rng.standard_normal((50, 16))
    for q in queries:
        dists = [(np.linalg.norm(q - oracle[label]), label) for label in labels]
        expect = min(dists)[1]
        assert classify(model, q)[0] == expect
    assert classify_batch(model, queries) == [classify(model, q)[0] for q in queries]


def test_classify_dimension_mismatch():
    model = fit_centroids([("a", np.zeros(3)), ("b", np.ones(3))])
    with pytest.raises(ValueError, match="dimension"):
        classify(model, np.zeros(2))


def test_ranked_hit_list_is_sorted():
    rng = np.random.default_rng(2)
    pairs = [(f"c{i}", rng.standard_normal(4)) for i in range(6)]
    model = fit_centroids(pairs)
    _, ranked = classify(model, rng.standard_normal(4))
    d = [dist for _, dist in ranked]
    assert d == sorted(d)
    assert len(ranked) == 6


# ----------------------------------------------------------------- evaluate


def test_evaluate_perfect():
    model = fit_centroids([("a", np.array([0.0])), ("b", np.array([10.0]))])
    assert evaluate(model, [("a", np.array([0.0])), ("b", np.array([10.0]))]) == 1.0


def test_evaluate_unknown_labels_score_zero():
    model = fit_centroids([("a", np.array([0.0])), ("b", np.array([10.0]))])
    assert evaluate(model, [("zz", np.array([0.0]))]) == 0.0


def test_evaluate_hand_tally():
    model = fit_centroids([("a", np.array([0.0])), ("b", np.array([10.0]))])
    # 20 hand-scored queries: values < 5 resolve to "a", > 5 to "b"
    values = [0, 1, 2, 3, 4, 6, 7, 8, 9, 10, 0, 10, 1, 9, 2, 8, 3, 7, 4, 6]
    truth = ["a"] * 5 + ["b"] * 5 + ["a", "b"] * 5
    test = [(t, np.array([float(v)])) for t, v in zip(truth, values)]
    # manual tally: first 10 all correct; the alternating block matches
    # a,b,a,b,... exactly -> 20/20
    assert evaluate(model, test) == 1.0
    flipped = [("b" if t == "a" else "a", v) for t, v in test]
    assert evaluate(model, flipped) == 0.0


def test_evaluate_empty():
    model = fit_centroids([("a", np.zeros(1)), ("b", np.ones(1))])
    with pytest.raises(ValueError):
        evaluate(model, [])


# ---------------------------------------------------------- tapped features


def write_tapped(path, dim, rows):
    lines = [f"dims\t{dim}"]
    for sid, label, vec in rows:
        lines.append("\t".join([sid, label] + [f"{x:g}" for x in vec]))
    path.write_text("\n".join(lines) + "\n")


def test_tapped_header_and_rows(tmp_path):
    p = tmp_path / "f.tsv"
    write_tapped(p, 4, [("s1", "a", [1, 2, 3, 4]), ("s2", "b", [5, 6, 7, 8])])
    fs = load_tapped_features(p)
    assert fs.dim == 4
    assert len(fs.rows) == 2
    np.testing.assert_array_equal(fs.rows[1][2], [5, 6, 7, 8])


def test_tapped_large_dim(tmp_path):
    p = tmp_path / "f.tsv"
    rng = np.random.default_rng(0)
    write_tapped(p, 2048, [("s1", "a", rng.standard_normal(2048))])
    assert load_tapped_features(p).dim == 2048


def test_tapped_wrong_value_count_names_line(tmp_path):
    p = tmp_path / "f.tsv"
    lines = ["dims\t2048"]
    for i in range(10):
        lines.append("\t".join([f"s{i}", "a"] + ["0"] * 2048))
    lines.append("\t".join(["s10", "a"] + ["0"] * 2047))
    p.write_text("\n".join(lines) + "\n")
    with pytest.raises(ValueError, match="line 12: expected 2048 values"):
        load_tapped_features(p)


def test_tapped_missing_header(tmp_path):
    p = tmp_path / "f.tsv"
    p.write_text("s1\ta\t0\t0\n")
    with pytest.raises(ValueError, match="dims"):
        load_tapped_features(p)


def test_tapped_non_numeric(tmp_path):
    p = tmp_path / "f.tsv"
    p.write_text("dims\t2\ns1\ta\t0\tx\n")
    with pytest.raises(ValueError, match="non-numeric"):
        load_tapped_features(p)


# ---------------------------------------------------------------- partitions


def make_feature_set(tmp_path, n):
    p = tmp_path / "f.tsv"
    write_tapped(p, 2, [(f"s{i}", f"c{i % 2}", [i, i]) for i in range(n)])
    return load_tapped_features(p)


def test_odd_even_partition(tmp_path):
    fs = make_feature_set(tmp_path, 10)
    train, test = partition_by_index(fs, "odd_even")
    assert len(train) == 5 and len(test) == 5
    assert [r[0] for r in train] == [f"s{i}" for i in range(0, 10, 2)]


def test_mod8_partition_sixteen(tmp_path):
    fs = make_feature_set(tmp_path, 16)
    train, test = partition_by_index(fs, "mod8")
    assert len(train) == 14 and len(test) == 2
    assert [r[0] for r in test] == ["s7", "s15"]


def test_mod8_partition_eight(tmp_path):
    fs = make_feature_set(tmp_path, 8)
    train, test = partition_by_index(fs, "mod8")
    assert len(train) == 7 and len(test) == 1


def test_unknown_partition_scheme(tmp_path):
    fs = make_feature_set(tmp_path, 4)
    with pytest.raises(ValueError, match="unknown partition scheme"):
        partition_by_index(fs, "thirds")
