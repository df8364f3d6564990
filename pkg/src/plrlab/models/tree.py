"""Greedy CART regression tree with variance-reduction splits.

Trees operate on raw (unstandardized) features: monotone transforms map
splits through unchanged, so a scaler would be dead weight.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..errors import TrainingError


@dataclass
class TreeNode:
    # leaf when feature is None
    feature: Optional[int] = None
    threshold: float = 0.0
    left: Optional["TreeNode"] = None
    right: Optional["TreeNode"] = None
    value: float = 0.0

    @property
    def is_leaf(self) -> bool:
        return self.feature is None


@dataclass
class TreeModel:
    root: TreeNode
    max_depth: int
    min_samples_leaf: int
    training_meta: dict = field(default_factory=dict)

    kind = "tree"
    scaler = None

    def predict_raw(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        out = np.empty(X.shape[0])
        for i, row in enumerate(X):
            node = self.root
            while not node.is_leaf:
                node = node.left if row[node.feature] < node.threshold else node.right
            out[i] = node.value
        return out


def best_split(X: np.ndarray, y: np.ndarray, min_samples_leaf: int):
    """Exhaustive (feature, threshold) search maximizing SSE reduction.

    Thresholds are midpoints between consecutive distinct sorted values;
    rows go left when x < threshold. Ties keep the first candidate in
    (feature asc, threshold asc) scan order. Returns None when no split
    beats zero gain while respecting the leaf minimum.
    """
    n = len(y)
    total_sum = y.sum()
    total_sq = float(y @ y)
    parent_sse = total_sq - total_sum * total_sum / n
    best = None
    best_gain = 0.0
    for f in range(X.shape[1]):
        order = np.argsort(X[:, f], kind="stable")
        xs = X[order, f]
        ys = y[order]
        csum = np.cumsum(ys)
        csq = np.cumsum(ys * ys)
        # split after position i: left = rows [0..i], candidates only where
        # the value actually changes
        for i in range(n - 1):
            if xs[i + 1] == xs[i]:
                continue
            nl = i + 1
            nr = n - nl
            if nl < min_samples_leaf or nr < min_samples_leaf:
                continue
            sl, ql = csum[i], csq[i]
            sse_l = ql - sl * sl / nl
            sr, qr = total_sum - sl, total_sq - ql
            sse_r = qr - sr * sr / nr
            gain = parent_sse - (sse_l + sse_r)
            if gain > best_gain:
                best_gain = gain
                best = (f, (xs[i] + xs[i + 1]) / 2.0)
    return best


def _grow(X, y, depth, max_depth, min_samples_leaf) -> TreeNode:
    node = TreeNode(value=float(y.mean()))
    if depth >= max_depth or len(y) < 2 * min_samples_leaf or np.all(y == y[0]):
        return node
    found = best_split(X, y, min_samples_leaf)
    if found is None:
        return node
    f, thr = found
    mask = X[:, f] < thr
    node.feature = f
    node.threshold = thr
    node.left = _grow(X[mask], y[mask], depth + 1, max_depth, min_samples_leaf)
    node.right = _grow(X[~mask], y[~mask], depth + 1, max_depth, min_samples_leaf)
    return node


def train_tree(dataset, max_depth: int = 8, min_samples_leaf: int = 5) -> TreeModel:
    if max_depth < 0 or min_samples_leaf < 1:
        raise TrainingError("bad tree hyperparameters")
    X = dataset.matrix()
    y = dataset.labels()
    if X.shape[0] < min_samples_leaf or X.shape[0] == 0:
        raise TrainingError("tree training needs at least min_samples_leaf samples")
    root = _grow(X, y, 0, max_depth, min_samples_leaf)
    return TreeModel(
        root=root,
        max_depth=max_depth,
        min_samples_leaf=min_samples_leaf,
        training_meta={
            "n_samples": int(X.shape[0]),
            "interval_s": getattr(dataset, "interval_s", None),
        },
    )
