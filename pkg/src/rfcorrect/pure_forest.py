"""Purely random forest: splits never consult the target, no bagging of rows
or features.  A diagnostic model, not a production regressor."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from joblib import Parallel, delayed

from .data import Dataset, RngStream
from .errors import EmptyDataError, ValidationError
from .forest import ForestModel, Leaf, Split, TreeNode, _attach, _make_leaf

# Fresh feature/pair draws attempted before declaring a node a leaf when
# random splits keep violating leaf_min.
MAX_SPLIT_RETRIES = 25


@dataclass(frozen=True)
class PureForestParams:
    ntree: int = 500
    leaf_min: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.ntree < 1:
            raise ValidationError(f"ntree: must be >= 1, got {self.ntree}")
        if self.leaf_min < 1:
            raise ValidationError(f"leaf_min: must be >= 1, got {self.leaf_min}")


def random_split(X, rows, rng: RngStream, leaf_min: int) -> Optional[tuple[int, float]]:
    """Uniformly pick a feature, then a midpoint between two adjacent distinct
    values of it at this node.

    A feature with fewer than two distinct values is redrawn up to p times
    before giving up.  A cutoff leaving either child below ``leaf_min`` is
    redrawn (feature and pair) up to MAX_SPLIT_RETRIES times.  Returns None
    when no acceptable split was found; never consults the target.
    """
    rows = np.asarray(rows, dtype=np.intp)
    n = rows.shape[0]
    if n < 2 * leaf_min:
        return None
    p = X.shape[1]
    for _ in range(MAX_SPLIT_RETRIES):
        values = None
        for _ in range(p):
            f = int(rng.integers(p))
            distinct = np.unique(X[rows, f])
            if distinct.shape[0] >= 2:
                values = distinct
                break
        if values is None:
            return None
        j = int(rng.integers(values.shape[0] - 1))
        cutoff = 0.5 * (values[j] + values[j + 1])
        n_left = int((X[rows, f] < cutoff).sum())
        if n_left >= leaf_min and n - n_left >= leaf_min:
            return f, float(cutoff)
    return None


def _build_pure_tree(X, y, params: PureForestParams, tree_index: int) -> TreeNode:
    rng = RngStream(params.seed).derive(tree_index)
    root = [None]
    stack = [(np.arange(X.shape[0], dtype=np.intp), None, root)]
    while stack:
        rows, parent, slot = stack.pop()
        found = random_split(X, rows, rng, params.leaf_min)
        if found is None:
            _attach(parent, slot, _make_leaf(y[rows]))
            continue
        f, cutoff = found
        node = Split(f, cutoff)
        _attach(parent, slot, node)
        mask = X[rows, f] < cutoff
        stack.append((rows[~mask], node, "right"))
        stack.append((rows[mask], node, "left"))
    return root[0]


def train_pure_forest(train: Dataset, params: PureForestParams, n_jobs: int = 1) -> ForestModel:
    """Train a purely random forest on all rows with all features eligible.

    The returned model is an ordinary ForestModel usable by predict and
    predict_batch; deterministic in ``params.seed``.
    """
    if train.n_rows == 0:
        raise EmptyDataError("cannot train on an empty dataset")
    X, y = train.features, train.target
    if n_jobs == 1:
        trees = [_build_pure_tree(X, y, params, t) for t in range(params.ntree)]
    else:
        trees = Parallel(n_jobs=n_jobs)(
            delayed(_build_pure_tree)(X, y, params, t) for t in range(params.ntree)
        )
    return ForestModel(trees=trees, params=params, feature_names=train.feature_names, kind="pure")
