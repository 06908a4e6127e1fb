from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from actihybrid.exceptions import DomainError, ValidationError
from actihybrid.forest import (
    Forest, ForestParams, Leaf, Split, forest_from_json, forest_to_json, gini,
    predict_forest, train_forest, tree_predict, vote_counts,
)

SEPARABLE_X = [[0], [1], [2], [10], [11], [12]]
SEPARABLE_Y = [0, 0, 0, 1, 1, 1]


def exhaustive_stump(X, y, min_leaf=1):
    """Best (feature, threshold) by brute force over all midpoints.

    Ties go to the lowest feature, then the lowest threshold. Weighted Gini is
    compared as an exact fraction via cross-multiplication on integers.
    """
    X = [list(map(float, r)) for r in X]
    n = len(y)
    best = None
    for f in range(len(X[0])):
        vals = sorted(set(r[f] for r in X))
        for lo, hi in zip(vals, vals[1:]):
            t = (lo + hi) / 2
            left = [y[i] for i in range(n) if X[i][f] <= t]
            right = [y[i] for i in range(n) if X[i][f] > t]
            if len(left) < min_leaf or len(right) < min_leaf:
                continue
            # n * weighted gini = n - sum_child (c0^2 + c1^2) / n_child ; maximise the sum
            score = sum(Fraction(side.count(0) ** 2 + side.count(1) ** 2, len(side)) for side in (left, right))
            if best is None or score > best[0]:
                best = (score, f, t)
    return None if best is None else (best[1], best[2])


def stump_params(**kw):
    return ForestParams(n_estimators=1, max_depth=1, bootstrap=False, max_features=None, **kw)


def test_gini_values():
    assert gini((10, 0)) == 0
    assert gini((5, 5)) == 0.5
    assert gini((3, 1)) == pytest.approx(0.375, abs=1e-15)
    with pytest.raises(DomainError):
        gini((0, 0))


@given(st.integers(0, 1000), st.integers(0, 1000))
def test_gini_range(a, b):
    if a + b == 0:
        return
    g = gini((a, b))
    assert 0 <= g <= 0.5
    assert (g == 0) == (a == 0 or b == 0)


def test_single_class_gives_leaves():
    f = train_forest(np.random.default_rng(0).normal(size=(20, 3)), np.ones(20, int), ForestParams(n_estimators=10))
    assert all(isinstance(t, Leaf) for t in f.trees)
    assert predict_forest(f, np.zeros((4, 3))).tolist() == [1, 1, 1, 1]


def test_separable_training_accuracy():
    f = train_forest(SEPARABLE_X, SEPARABLE_Y)
    assert (predict_forest(f, SEPARABLE_X) == SEPARABLE_Y).all()


def test_separable_query_matches_hand_tree():
    hand = Split(0, 6.0, Leaf((3, 0)), Leaf((0, 3)))
    q = [[1.5], [10.5]]
    f = train_forest(SEPARABLE_X, SEPARABLE_Y)
    assert predict_forest(f, q).tolist() == tree_predict(hand, q).tolist() == [0, 1]


def test_stump_matches_oracle_on_separable():
    f = train_forest(SEPARABLE_X, SEPARABLE_Y, stump_params())
    root = f.trees[0]
    assert (root.feature_index, root.threshold) == exhaustive_stump(SEPARABLE_X, SEPARABLE_Y) == (0, 6.0)


@settings(max_examples=150, deadline=None)
@given(st.data())
def test_stump_matches_exhaustive_oracle(data):
    n = data.draw(st.integers(2, 14))
    d = data.draw(st.integers(1, 3))
    X = data.draw(st.lists(st.lists(st.integers(-4, 4).map(float), min_size=d, max_size=d), min_size=n, max_size=n))
    y = data.draw(st.lists(st.integers(0, 1), min_size=n, max_size=n))
    min_leaf = data.draw(st.integers(1, 3))
    f = train_forest(X, y, stump_params(min_samples_leaf=min_leaf))
    root = f.trees[0]
    expected = exhaustive_stump(X, y, min_leaf) if 0 < sum(y) < n and n >= 2 * min_leaf else None
    if expected is None:
        assert isinstance(root, Leaf)
    else:
        assert (root.feature_index, root.threshold) == expected


def test_determinism_runs_and_threads():
    rng = np.random.default_rng(5)
    X = rng.normal(size=(120, 5))
    y = (X[:, 0] + rng.normal(scale=0.8, size=120) > 0).astype(int)
    Q = rng.normal(size=(50, 5))
    a = train_forest(X, y, ForestParams(n_estimators=30))
    b = train_forest(X, y, ForestParams(n_estimators=30))
    c = train_forest(X, y, ForestParams(n_estimators=30), n_jobs=4)
    assert a.trees == b.trees == c.trees
    assert predict_forest(a, Q).tobytes() == predict_forest(c, Q).tobytes()
    d = train_forest(X, y, ForestParams(n_estimators=30, random_state=7))
    assert d.trees != a.trees


def test_structure_invariants():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(80, 4))
    y = rng.integers(0, 2, 80)
    params = ForestParams(n_estimators=15, min_samples_leaf=3, max_depth=4)
    f = train_forest(X, y, params)
    assert len(f.trees) == 15

    def walk(node, depth):
        if isinstance(node, Leaf):
            assert sum(node.class_counts) >= 3
            return depth
        assert 0 <= node.feature_index < 4
        return max(walk(node.left, depth + 1), walk(node.right, depth + 1))

    assert max(walk(t, 0) for t in f.trees) <= 4


def test_leaf_and_forest_ties_go_to_zero():
    p = ForestParams(n_estimators=2)
    f = Forest((Leaf((0, 5)), Leaf((5, 0))), p, 1)
    assert predict_forest(f, [[0.0]]).tolist() == [0]
    assert Leaf((2, 2)).vote == 0
    unanimous = Forest((Leaf((0, 5)),) * 2, p, 1)
    assert predict_forest(unanimous, [[3.0], [-3.0]]).tolist() == [1, 1]


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_vote_bound_and_query_permutation(seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(40, 3))
    y = rng.integers(0, 2, 40)
    f = train_forest(X, y, ForestParams(n_estimators=7, random_state=seed))
    Q = rng.normal(size=(25, 3))
    pred = predict_forest(f, Q)
    ones = vote_counts(f, Q)
    votes_for_pred = np.where(pred == 1, ones, 7 - ones)
    assert (2 * votes_for_pred >= 7).all()
    perm = rng.permutation(25)
    assert predict_forest(f, Q[perm]).tolist() == pred[perm].tolist()


def test_scale_invariance():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(60, 3)) * [1, 10, 100] + [5, -3, 40]
    y = (X[:, 0] > 5).astype(int) ^ (rng.random(60) < 0.2)
    a = train_forest(X, y, ForestParams(n_estimators=20))
    Z = (X - X.mean(0)) / X.std(0)
    b = train_forest(Z, y, ForestParams(n_estimators=20))
    assert predict_forest(a, X).tolist() == predict_forest(b, Z).tolist()


def test_validation_errors():
    with pytest.raises(ValidationError):
        train_forest([[1.0], [2.0]], [0])
    with pytest.raises(ValidationError):
        train_forest(np.zeros((0, 2)), [])
    f = train_forest(SEPARABLE_X, SEPARABLE_Y, ForestParams(n_estimators=3))
    with pytest.raises(ValidationError):
        predict_forest(f, [[1.0, 2.0]])
    for bad in (dict(n_estimators=0), dict(min_samples_split=1), dict(min_samples_leaf=0)):
        with pytest.raises(ValidationError):
            ForestParams(**bad)


def test_max_features_rule():
    p = ForestParams()
    assert [p.n_candidate_features(d) for d in (1, 2, 3, 4, 5, 9, 10)] == [1, 1, 1, 2, 2, 3, 3]


def test_json_round_trip():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(50, 4))
    y = rng.integers(0, 2, 50)
    f = train_forest(X, y, ForestParams(n_estimators=5))
    text = forest_to_json(f)
    g = forest_from_json(text)
    assert g.trees == f.trees and g.params == f.params
    assert forest_to_json(g) == text
