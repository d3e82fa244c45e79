"""Standard random-forest regression: bagging, per-node feature bagging,
variance-minimizing splits, mean-of-leaf predictions averaged over trees."""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Union

import numpy as np
from joblib import Parallel, delayed

from .data import Dataset, RngStream
from .errors import EmptyDataError, SchemaError, ValidationError


def default_mtry(n_features: int) -> int:
    """Feature-bagging width used when none is given: max(1, floor(p / 3))."""
    return max(1, n_features // 3)


@dataclass(frozen=True)
class ForestParams:
    """Training hyperparameters for the standard forest.

    ``mtry=None`` resolves to ``default_mtry`` at training time.
    ``nodesize`` is the minimum number of rows either child of a split may
    hold; splits that would violate it are rejected.
    """

    ntree: int = 500
    mtry: Optional[int] = None
    nodesize: int = 5
    max_terminal_nodes: Optional[int] = None
    bootstrap: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.ntree < 1:
            raise ValidationError(f"ntree: must be >= 1, got {self.ntree}")
        if self.mtry is not None and self.mtry < 1:
            raise ValidationError(f"mtry: must be >= 1, got {self.mtry}")
        if self.nodesize < 1:
            raise ValidationError(f"nodesize: must be >= 1, got {self.nodesize}")
        if self.max_terminal_nodes is not None and self.max_terminal_nodes < 1:
            raise ValidationError(
                f"max_terminal_nodes: must be >= 1, got {self.max_terminal_nodes}"
            )

    def resolve_mtry(self, n_features: int) -> int:
        mtry = self.mtry if self.mtry is not None else default_mtry(n_features)
        if mtry > n_features:
            raise ValidationError(f"mtry={mtry} exceeds feature count {n_features}")
        return mtry


@dataclass
class Leaf:
    prediction: float
    count: int


@dataclass
class Split:
    """Routes feature value < cutoff to ``left``, >= cutoff to ``right``."""

    feature_index: int
    cutoff: float
    left: "TreeNode" = None
    right: "TreeNode" = None


TreeNode = Union[Leaf, Split]


class SplitChoice(NamedTuple):
    feature_index: int
    cutoff: float
    child_sse: float


def best_split(X, y, rows, candidate_features, nodesize: int) -> Optional[SplitChoice]:
    """Lowest total-child-SSE split of the given rows, or None.

    Candidate cutoffs are midpoints between adjacent distinct sorted values
    of each candidate feature.  A split is legal only if both children hold
    at least ``nodesize`` rows.  Returns None when the node target is
    constant or no legal split exists.  Ties break toward the lowest
    feature index, then the lowest cutoff.
    """
    rows = np.asarray(rows, dtype=np.intp)
    n = rows.shape[0]
    if n < 2 * nodesize:
        return None
    ysub = y[rows]
    if ysub.max() == ysub.min():
        return None

    best: Optional[SplitChoice] = None
    left_sizes = np.arange(1, n)
    size_legal = (left_sizes >= nodesize) & ((n - left_sizes) >= nodesize)
    for f in sorted(int(f) for f in candidate_features):
        x = X[rows, f]
        order = np.argsort(x, kind="stable")
        xs = x[order]
        legal = size_legal & (xs[:-1] < xs[1:])
        if not legal.any():
            continue
        ys = ysub[order]
        csum = np.cumsum(ys)
        csum2 = np.cumsum(ys * ys)
        total_sum, total_sq = csum[-1], csum2[-1]
        nl = left_sizes
        nr = n - nl
        sl, sl2 = csum[:-1], csum2[:-1]
        sse = (sl2 - sl * sl / nl) + (total_sq - sl2) - (total_sum - sl) ** 2 / nr
        sse = np.where(legal, sse, np.inf)
        j = int(np.argmin(sse))  # first minimum = lowest cutoff within the feature
        if best is None or sse[j] < best.child_sse:
            cutoff = 0.5 * (xs[j] + xs[j + 1])
            best = SplitChoice(f, float(cutoff), float(sse[j]))
    return best


def _node_sse(ysub: np.ndarray) -> float:
    return float(((ysub - ysub.mean()) ** 2).sum())


def _make_leaf(ysub: np.ndarray) -> Leaf:
    return Leaf(prediction=float(ysub.mean()), count=int(ysub.shape[0]))


def _attach(parent, slot, node) -> None:
    if parent is None:
        slot[0] = node
    else:
        setattr(parent, slot, node)


def _try_split(X, y, rows, mtry: int, nodesize: int, rng: RngStream) -> Optional[SplitChoice]:
    """Constant-target / size shortcuts, then an mtry feature draw and split search."""
    n = rows.shape[0]
    ysub = y[rows]
    if n < 2 * nodesize or ysub.max() == ysub.min():
        return None
    p = X.shape[1]
    candidates = rng.choice(p, size=mtry, replace=False)
    return best_split(X, y, rows, candidates, nodesize)


def _partition(X, rows, choice: SplitChoice) -> tuple[np.ndarray, np.ndarray]:
    mask = X[rows, choice.feature_index] < choice.cutoff
    return rows[mask], rows[~mask]


def _grow_depth_first(X, y, rows, mtry, nodesize, rng) -> TreeNode:
    root = [None]
    # (rows, parent, slot); pushing right before left reproduces recursion order
    stack = [(rows, None, root)]
    while stack:
        node_rows, parent, slot = stack.pop()
        choice = _try_split(X, y, node_rows, mtry, nodesize, rng)
        if choice is None:
            _attach(parent, slot, _make_leaf(y[node_rows]))
            continue
        node = Split(choice.feature_index, choice.cutoff)
        _attach(parent, slot, node)
        left_rows, right_rows = _partition(X, node_rows, choice)
        stack.append((right_rows, node, "right"))
        stack.append((left_rows, node, "left"))
    return root[0]


def _grow_best_first(X, y, rows, mtry, nodesize, max_terminal, rng) -> TreeNode:
    """Expand the frontier leaf with the largest SSE decrease until the
    terminal-node budget is reached, then freeze the rest as leaves."""
    root = [None]
    counter = itertools.count()
    heap: list = []

    def admit(node_rows, parent, slot):
        choice = _try_split(X, y, node_rows, mtry, nodesize, rng)
        if choice is None:
            _attach(parent, slot, _make_leaf(y[node_rows]))
            return
        gain = _node_sse(y[node_rows]) - choice.child_sse
        heapq.heappush(heap, (-gain, next(counter), node_rows, choice, parent, slot))

    admit(rows, None, root)
    n_leaves = 1
    while heap and n_leaves < max_terminal:
        _, _, node_rows, choice, parent, slot = heapq.heappop(heap)
        node = Split(choice.feature_index, choice.cutoff)
        _attach(parent, slot, node)
        left_rows, right_rows = _partition(X, node_rows, choice)
        admit(left_rows, node, "left")
        admit(right_rows, node, "right")
        n_leaves += 1
    for _, _, node_rows, _, parent, slot in heap:
        _attach(parent, slot, _make_leaf(y[node_rows]))
    return root[0]


def _build_tree(X, y, params: ForestParams, mtry: int, tree_index: int) -> TreeNode:
    rng = RngStream(params.seed).derive(tree_index)
    n = X.shape[0]
    rows = rng.integers(0, n, size=n).astype(np.intp) if params.bootstrap else np.arange(n, dtype=np.intp)
    if params.max_terminal_nodes is None:
        return _grow_depth_first(X, y, rows, mtry, params.nodesize, rng)
    return _grow_best_first(X, y, rows, mtry, params.nodesize, params.max_terminal_nodes, rng)


@dataclass
class ForestModel:
    """A trained ensemble; prediction is the arithmetic mean over trees."""

    trees: list
    params: object
    feature_names: tuple[str, ...]
    kind: str = "standard"

    def __post_init__(self):
        self.feature_names = tuple(self.feature_names)
        if self.kind not in ("standard", "pure"):
            raise ValidationError(f"unknown model kind {self.kind!r}")


def train_forest(train: Dataset, params: ForestParams, n_jobs: int = 1) -> ForestModel:
    """Train a standard random forest; deterministic in ``params.seed``.

    Each tree draws from an RngStream derived from (seed, tree index), so
    results are identical for any ``n_jobs``.
    """
    if train.n_rows == 0:
        raise EmptyDataError("cannot train on an empty dataset")
    mtry = params.resolve_mtry(train.n_features)
    X, y = train.features, train.target
    if n_jobs == 1:
        trees = [_build_tree(X, y, params, mtry, t) for t in range(params.ntree)]
    else:
        trees = Parallel(n_jobs=n_jobs)(
            delayed(_build_tree)(X, y, params, mtry, t) for t in range(params.ntree)
        )
    return ForestModel(trees=trees, params=params, feature_names=train.feature_names)


def _route_one(node: TreeNode, row: np.ndarray) -> float:
    while isinstance(node, Split):
        node = node.left if row[node.feature_index] < node.cutoff else node.right
    return node.prediction


def predict(model: ForestModel, feature_row) -> float:
    """Mean over trees of the leaf prediction the row routes to."""
    row = np.asarray(feature_row, dtype=np.float64).reshape(-1)
    if row.shape[0] != len(model.feature_names):
        raise SchemaError(
            f"feature row has {row.shape[0]} values, model expects {len(model.feature_names)}"
        )
    total = 0.0
    for tree in model.trees:
        total += _route_one(tree, row)
    return total / len(model.trees)


def _route_batch(tree: TreeNode, X: np.ndarray, out: np.ndarray) -> None:
    stack = [(tree, np.arange(X.shape[0], dtype=np.intp))]
    while stack:
        node, idx = stack.pop()
        if isinstance(node, Leaf):
            out[idx] = node.prediction
            continue
        mask = X[idx, node.feature_index] < node.cutoff
        stack.append((node.left, idx[mask]))
        stack.append((node.right, idx[~mask]))


def predict_batch(model: ForestModel, data: Dataset) -> np.ndarray:
    """Row-wise predictions, order preserved."""
    if data.feature_names != model.feature_names:
        raise SchemaError(
            f"dataset columns {data.feature_names} do not match model columns {model.feature_names}"
        )
    n = data.n_rows
    if n == 0:
        return np.empty(0)
    acc = np.zeros(n)
    scratch = np.empty(n)
    for tree in model.trees:
        _route_batch(tree, data.features, scratch)
        acc += scratch
    return acc / len(model.trees)


def iter_nodes(tree: TreeNode):
    """Preorder iteration over every node of a tree."""
    stack = [tree]
    while stack:
        node = stack.pop()
        yield node
        if isinstance(node, Split):
            stack.append(node.right)
            stack.append(node.left)


def count_leaves(tree: TreeNode) -> int:
    return sum(1 for node in iter_nodes(tree) if isinstance(node, Leaf))
