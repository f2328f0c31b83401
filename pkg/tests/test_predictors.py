import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from letsplay.cluster import kmedoids
from letsplay.ingest import corpus_from_records
from letsplay.metric import cosine_distance
from letsplay.predictors import (PredictorSpec, PredictorSuite, predict_forest, predict_knn,
                                 retrieve_comment, train_forest, train_knn, train_random, train_suite)
from letsplay.synth import generate_synthetic_corpus
from letsplay.vectorize import SparseBag


def corpus(rows):
    return corpus_from_records([{"id": f"e{i}", "frames": [i], "sprites": s, "comment": c}
                                for i, (s, c) in enumerate(rows)])


def test_spec_validation_and_labels():
    assert PredictorSpec.parse("knn10").knn_k == 10
    assert PredictorSpec.parse("knn5").label == "knn5"
    assert PredictorSpec.parse("forest").label == "forest"
    for bad in (dict(kind="svm"), dict(knn_k=0), dict(trees=0), dict(max_depth=0)):
        with pytest.raises(ValueError):
            PredictorSpec(**bad)


def test_random_single_and_frequencies():
    one = corpus([({"a": 1}, "only this")])
    m = train_random(one.examples, 1)
    assert all(m.predict(SparseBag({}, 1)) == one[0].comment_bag for _ in range(5))
    four = corpus([({"a": 1}, w) for w in ("a", "b", "c", "d")])
    m = train_random(four.examples, 2)
    draws = m.predict_many([four[0].sprite_bag] * 10_000)
    sigma = np.sqrt(10_000 * 0.25 * 0.75)
    for e in four:
        assert abs(sum(d == e.comment_bag for d in draws) - 2500) <= 3 * sigma


def test_random_same_seed_same_sequence():
    c = corpus([({"a": 1}, w) for w in "abcdef"])
    a, b = train_random(c.examples, 7), train_random(c.examples, 7)
    xs = [c[0].sprite_bag] * 30
    assert a.predict_many(xs) == b.predict_many(xs)
    with pytest.raises(ValueError):
        train_random([], 0)


def test_forest_constant_comment():
    c = corpus([({"a": i + 1, "b": i % 2}, "same words here") for i in range(12)])
    m = train_forest(c.examples, PredictorSpec(trees=3, seed=1))
    for e in c:
        assert predict_forest(m, e.sprite_bag) == c[0].comment_bag


def test_forest_two_rows_exact():
    c = corpus([({"a": 1}, "left side"), ({"a": 3}, "right side words")])
    m = train_forest(c.examples, PredictorSpec(trees=1, bootstrap=False))
    for e in c:
        assert cosine_distance(predict_forest(m, e.sprite_bag), e.comment_bag) == 0.0


def test_forest_binary_feature_function():
    rows = [({"flag": i % 2, "noise": i % 5 + 1}, "on on" if i % 2 else "off") for i in range(40)]
    c = corpus(rows)
    m = train_forest(c.examples, PredictorSpec(trees=10, seed=3))
    d = [cosine_distance(p, e.comment_bag) for p, e in zip(m.predict_many([e.sprite_bag for e in c]), c)]
    assert np.mean(d) < 0.05


def test_forest_depth_limit_and_leaf_means():
    tr, _ = generate_synthetic_corpus(3, 60, 10, 4)
    m = train_forest(tr.examples, PredictorSpec(trees=2, max_depth=3, seed=0, bootstrap=False))
    Y = np.array([e.comment_bag.to_dense() for e in tr])
    X = np.array([e.sprite_bag.to_dense() for e in tr])
    for t in m.trees:
        assert t.depth <= 3
        leaves = t.apply(X)
        for leaf in set(leaves.tolist()):
            assert np.allclose(t.values[leaf], Y[leaves == leaf].mean(axis=0))


def test_forest_tree_order_invariant_and_threads():
    tr, te = generate_synthetic_corpus(3, 60, 10, 5)
    spec = PredictorSpec(trees=4, seed=8)
    a, b = train_forest(tr.examples, spec), train_forest(tr.examples, spec, threads=4)
    X = [e.sprite_bag for e in te]
    assert a.predict_many(X) == b.predict_many(X)
    dense = a.predict_dense(np.array([x.to_dense() for x in X]))
    a.trees.reverse()
    assert np.allclose(a.predict_dense(np.array([x.to_dense() for x in X])), dense, atol=1e-12)


def test_knn_examples():
    c = corpus([({"a": 1}, "a b"), ({"a": 1, "b": 1}, "b c"), ({"z": 1}, "far away")])
    m = train_knn(c.examples, PredictorSpec(kind="knn", knn_k=1))
    assert predict_knn(m, c[2].sprite_bag) == c[2].comment_bag.binarized()
    m2 = train_knn(c.examples, PredictorSpec(kind="knn", knn_k=2))
    assert predict_knn(m2, c[0].sprite_bag).named(c.word_vocab) == {"a": 1, "b": 1, "c": 1}
    m3 = train_knn(c.examples, PredictorSpec(kind="knn", knn_k=50))
    assert m3.clamped and m3.k == 3
    assert len(predict_knn(m3, c[0].sprite_bag)) == len(c.word_vocab)


def test_retrieve_comment():
    c = corpus([({"bowser": 1}, "parts like these on Bowser"), ({"bowser": 1}, "tie loser"),
                ({"coin": 1}, "shiny")])
    m = train_knn(c.examples, PredictorSpec(kind="knn", knn_k=1))
    assert retrieve_comment(m, c[0].sprite_bag) == "parts like these on Bowser"
    assert retrieve_comment(m, c[2].sprite_bag) == "shiny"


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(1, 50), st.sampled_from([1, 5, 10]))
def test_knn_matches_exhaustive_sort(seed, n, k):
    rng = np.random.default_rng(seed)
    rows = [({f"s{j}": int(rng.integers(1, 3)) for j in rng.choice(4, rng.integers(0, 3), replace=False)},
             " ".join(f"w{j}" for j in rng.choice(8, rng.integers(1, 4), replace=False)))
            for _ in range(n + 3)]
    c = corpus(rows)
    train, tests = c.examples[:n], c.examples[n:]
    m = train_knn(train, PredictorSpec(kind="knn", knn_k=k))
    for t in tests:
        ranked = sorted(range(n), key=lambda i: (cosine_distance(t.sprite_bag, train[i].sprite_bag), i))
        want = {w for i in ranked[:k] for w in train[i].comment_bag.entries}
        assert set(predict_knn(m, t.sprite_bag).entries) == want
        assert set(predict_knn(m, t.sprite_bag).entries.values()) <= {1}


def test_suite_modes_and_k1_equivalence():
    tr, te = generate_synthetic_corpus(6, 120, 30, 6)
    m6 = kmedoids(tr.examples, 6)
    suite = train_suite(tr.examples, m6, PredictorSpec(kind="forest", trees=2))
    assert suite.mode == "per-cluster" and len(suite.models) == 6
    m1 = kmedoids(tr.examples, 1)
    for spec in (PredictorSpec(kind="knn", knn_k=5), PredictorSpec(kind="forest", trees=2, seed=3),
                 PredictorSpec(kind="random", seed=2)):
        a = train_suite(tr.examples, None, spec).predict(te.examples)
        b = train_suite(tr.examples, m1, spec).predict(te.examples)
        assert a == b


def test_per_cluster_random_samples_within_cluster():
    tr, te = generate_synthetic_corpus(3, 90, 60, 7)
    m = kmedoids(tr.examples, 3)
    suite = train_suite(tr.examples, m, PredictorSpec(kind="random", seed=1))
    owners = suite.assign(te.examples)
    preds = suite.predict(te.examples)
    for c, p in zip(owners, preds):
        members = {tr[i].comment_bag for i, e in enumerate(tr) if m.assignment[e.id] == c}
        assert p in members


def test_suite_json_roundtrip():
    tr, te = generate_synthetic_corpus(3, 60, 20, 8)
    m = kmedoids(tr.examples, 3)
    for spec in (PredictorSpec(kind="forest", trees=3, seed=2), PredictorSpec(kind="knn", knn_k=5),
                 PredictorSpec(kind="random", seed=4)):
        for clusters in (None, m):
            suite = train_suite(tr.examples, clusters, spec)
            blob = json.loads(json.dumps(suite.to_dict()))
            again = PredictorSuite.from_dict(blob, tr.examples)
            assert again.predict(te.examples) == train_suite(tr.examples, clusters, spec).predict(te.examples)
