"""Random forest classifier for binary labels, written from scratch.

Trees are grown on bootstrap samples with Gini splits over midpoints of
consecutive distinct values. Tree ``t`` draws all of its randomness from
``seeding.make_rng(random_state, t)``, so a forest is the same whichever
order (or thread) its trees are built in.

Ties are broken deterministically: among equally good splits the lowest
feature index wins, then the lowest threshold; a leaf with equal class
counts votes 0; a forest vote split evenly predicts 0. Split quality is
compared in exact rational arithmetic, so ties are true ties.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import Optional, Union

import numpy as np

from .exceptions import DomainError, ValidationError
from .seeding import make_rng

FOREST_FORMAT_VERSION = 1


@dataclass(frozen=True)
class ForestParams:
    n_estimators: int = 100
    max_depth: Optional[int] = None
    min_samples_split: int = 2
    min_samples_leaf: int = 1
    random_state: int = 42
    max_features: Union[str, int, None] = "sqrt"  # "sqrt", "log2", an int, or None for all
    bootstrap: bool = True

    def __post_init__(self):
        if self.n_estimators < 1:
            raise ValidationError("n_estimators must be >= 1")
        if self.min_samples_split < 2:
            raise ValidationError("min_samples_split must be >= 2")
        if self.min_samples_leaf < 1:
            raise ValidationError("min_samples_leaf must be >= 1")
        if self.max_depth is not None and self.max_depth < 0:
            raise ValidationError("max_depth must be >= 0 or None")
        if isinstance(self.max_features, str) and self.max_features not in ("sqrt", "log2"):
            raise ValidationError(f"unknown max_features rule {self.max_features!r}")

    def n_candidate_features(self, d: int) -> int:
        rule = self.max_features
        if rule is None:
            k = d
        elif rule == "sqrt":
            k = math.isqrt(d)
        elif rule == "log2":
            k = int(math.log2(d)) if d > 0 else 0
        else:
            k = int(rule)
        return max(1, min(d, k))


@dataclass(frozen=True)
class Leaf:
    class_counts: tuple  # (n0, n1)

    @property
    def vote(self) -> int:
        return 1 if self.class_counts[1] > self.class_counts[0] else 0


@dataclass(frozen=True)
class Split:
    feature_index: int
    threshold: float
    left: "TreeNode"
    right: "TreeNode"


TreeNode = Union[Leaf, Split]


@dataclass(frozen=True)
class Forest:
    trees: tuple
    params: ForestParams
    n_features: int

    def __post_init__(self):
        if len(self.trees) != self.params.n_estimators:
            raise ValidationError("number of trees does not match n_estimators")


def gini(class_counts) -> float:
    n0, n1 = class_counts
    if n0 < 0 or n1 < 0:
        raise DomainError("class counts must be non-negative")
    n = n0 + n1
    if n == 0:
        raise DomainError("gini of an empty node is undefined")
    p0, p1 = n0 / n, n1 / n
    return 1.0 - (p0 * p0 + p1 * p1)


def _best_split_on_feature(x, y, min_leaf):
    """Best split of one feature column, or None.

    Returns ``(score, threshold)`` where ``score`` is the exact Fraction
    ``sum_children (c0^2 + c1^2) / n_child``; larger means lower weighted Gini,
    since ``n * weighted_gini = n - score``.
    """
    n = len(x)
    order = np.argsort(x, kind="stable")
    xs = x[order]
    ones = np.cumsum(y[order])
    total1 = int(ones[-1])
    i = np.arange(1, n)  # left child gets the first i sorted samples
    valid = (xs[1:] > xs[:-1]) & (i >= min_leaf) & (n - i >= min_leaf)
    if not valid.any():
        return None
    i = i[valid]
    l1 = ones[i - 1]
    l0 = i - l1
    r1 = total1 - l1
    r0 = (n - i) - r1
    fscore = (l0 * l0 + l1 * l1) / i + (r0 * r0 + r1 * r1) / (n - i)
    best = fscore.max()
    # float scores only pre-filter; exact comparison among near-ties
    near = np.flatnonzero(fscore >= best - 1e-9 * max(1.0, abs(best)))
    best_pos, best_exact = None, None
    for k in near:
        a, b, c, e, m = int(l0[k]), int(l1[k]), int(r0[k]), int(r1[k]), int(i[k])
        exact = Fraction(a * a + b * b, m) + Fraction(c * c + e * e, n - m)
        if best_exact is None or exact > best_exact:
            best_exact, best_pos = exact, m
    lo, hi = xs[best_pos - 1], xs[best_pos]
    threshold = (lo + hi) / 2.0
    if not (lo <= threshold < hi):
        threshold = lo
    return best_exact, float(threshold)


def _grow(X, y, depth, params: ForestParams, n_candidates, rng) -> TreeNode:
    n = len(y)
    n1 = int(y.sum())
    counts = (n - n1, n1)
    if (
        n1 == 0 or n1 == n
        or n < params.min_samples_split
        or n < 2 * params.min_samples_leaf
        or (params.max_depth is not None and depth >= params.max_depth)
    ):
        return Leaf(counts)

    # Visit features in random order and examine the first n_candidates that
    # are not constant at this node.
    best = None  # (score, feature, threshold)
    examined = 0
    for f in rng.permutation(X.shape[1]):
        if examined >= n_candidates:
            break
        col = X[:, f]
        if col.min() == col.max():
            continue
        examined += 1
        found = _best_split_on_feature(col, y, params.min_samples_leaf)
        if found is None:
            continue
        score, thr = found
        if best is None or score > best[0] or (score == best[0] and f < best[1]):
            best = (score, int(f), thr)
    if best is None:
        return Leaf(counts)
    _, f, thr = best
    mask = X[:, f] <= thr
    return Split(
        f, thr,
        _grow(X[mask], y[mask], depth + 1, params, n_candidates, rng),
        _grow(X[~mask], y[~mask], depth + 1, params, n_candidates, rng),
    )


def _check_xy(X, y):
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    if X.ndim != 2 or X.shape[0] == 0 or X.shape[1] == 0:
        raise ValidationError(f"X must be a non-empty 2-D matrix, got shape {X.shape}")
    if y.shape != (X.shape[0],):
        raise ValidationError(f"y has {y.shape[0] if y.ndim else 0} labels for {X.shape[0]} rows")
    if not np.isin(y, (0, 1)).all():
        raise ValidationError("labels must be 0 or 1")
    if not np.isfinite(X).all():
        raise ValidationError("X contains non-finite values")
    return X, y.astype(np.int64)


def train_tree(X, y, params: ForestParams, tree_index: int) -> TreeNode:
    rng = make_rng(params.random_state, tree_index)
    n = len(y)
    if params.bootstrap:
        idx = rng.integers(0, n, size=n)
        X, y = X[idx], y[idx]
    return _grow(X, y, 0, params, params.n_candidate_features(X.shape[1]), rng)


def train_forest(X, y, params: ForestParams = ForestParams(), n_jobs: int = 1) -> Forest:
    X, y = _check_xy(X, y)
    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            trees = list(pool.map(lambda t: train_tree(X, y, params, t), range(params.n_estimators)))
    else:
        trees = [train_tree(X, y, params, t) for t in range(params.n_estimators)]
    return Forest(tuple(trees), params, X.shape[1])


def _tree_votes(node: TreeNode, X, rows, out) -> None:
    if isinstance(node, Leaf):
        out[rows] = node.vote
        return
    go_left = X[rows, node.feature_index] <= node.threshold
    _tree_votes(node.left, X, rows[go_left], out)
    _tree_votes(node.right, X, rows[~go_left], out)


def tree_predict(node: TreeNode, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    out = np.zeros(len(X), dtype=np.int64)
    _tree_votes(node, X, np.arange(len(X)), out)
    return out


def vote_counts(forest: Forest, X) -> np.ndarray:
    """Number of trees voting class 1, per row."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != forest.n_features:
        raise ValidationError(f"expected rows of width {forest.n_features}, got shape {X.shape}")
    total = np.zeros(len(X), dtype=np.int64)
    for tree in forest.trees:
        total += tree_predict(tree, X)
    return total


def predict_forest(forest: Forest, X) -> np.ndarray:
    ones = vote_counts(forest, X)
    # strict majority for class 1; an even split goes to 0
    return (2 * ones > len(forest.trees)).astype(np.int64)


# ---------------------------------------------------------------------------
# persistence


def _node_to_dict(node: TreeNode) -> dict:
    if isinstance(node, Leaf):
        return {"leaf": list(node.class_counts)}
    return {
        "feature": node.feature_index,
        "threshold": node.threshold,
        "left": _node_to_dict(node.left),
        "right": _node_to_dict(node.right),
    }


def _node_from_dict(d: dict, n_features: int) -> TreeNode:
    if "leaf" in d:
        n0, n1 = d["leaf"]
        return Leaf((int(n0), int(n1)))
    f = int(d["feature"])
    if not 0 <= f < n_features:
        raise ValidationError(f"feature index {f} out of range")
    return Split(f, float(d["threshold"]), _node_from_dict(d["left"], n_features),
                 _node_from_dict(d["right"], n_features))


def forest_to_json(forest: Forest) -> str:
    doc = {
        "format": "actihybrid.forest",
        "version": FOREST_FORMAT_VERSION,
        "n_features": forest.n_features,
        "params": asdict(forest.params),
        "trees": [_node_to_dict(t) for t in forest.trees],
    }
    return json.dumps(doc, sort_keys=True)


def forest_from_json(text: str) -> Forest:
    doc = json.loads(text)
    if doc.get("format") != "actihybrid.forest" or doc.get("version") != FOREST_FORMAT_VERSION:
        raise ValidationError("not a supported forest document")
    n_features = int(doc["n_features"])
    trees = tuple(_node_from_dict(t, n_features) for t in doc["trees"])
    return Forest(trees, ForestParams(**doc["params"]), n_features)


def tree_depth(node: TreeNode) -> int:
    if isinstance(node, Leaf):
        return 0
    return 1 + max(tree_depth(node.left), tree_depth(node.right))
