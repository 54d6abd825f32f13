"""Depth-limited least-squares regression trees with learned missing-value routing.

Split predicate is ``value <= threshold`` (ties go left). A NaN value follows
the node's ``missing_left`` flag, which is chosen during split search by
scoring both routings.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .data import EncodedMatrix

# Candidates whose SSE reduction is within this fraction of the parent SSE of
# the best one count as tied; the deterministic tie-break then decides.
TIE_RTOL = 1e-10


@dataclass(frozen=True)
class SplitCandidate:
    feature_index: int
    threshold: float
    missing_goes_left: bool
    sse_reduction: float


def _midpoint(a: float, b: float) -> float:
    a, b = float(a), float(b)
    mid = a + (b - a) / 2.0
    # adjacent floats: the midpoint may round up onto b, which would flip b's side
    if not a <= mid < b:
        mid = a
    return mid


def _search_sorted(xs: np.ndarray, gs: np.ndarray, n_missing: np.ndarray,
                   min_leaf: int, parent_sse: float, total: float,
                   allow_zero: bool = False):
    """Exhaustive split search over presorted columns.

    ``xs`` and ``gs`` are (d, m): each row holds the node's feature values
    sorted ascending with NaNs last, and the (centered) targets in the same
    order. Returns ``(feature, position, missing_left, reduction)`` or None.
    With ``allow_zero`` a best split of zero reduction is returned instead of
    None.
    """
    d, m = xs.shape
    if m < 2 * min_leaf or d == 0:
        return None
    csum = np.cumsum(gs, axis=1)
    row_total = csum[:, -1]
    base = total * total / m
    # left child holds sorted positions 0..k. k <= m-min_leaf-1 is needed under
    # either routing; k >= min_leaf-1 only when missing values go right, since
    # routing them left can make up the shortfall.
    miss_rows = np.flatnonzero(n_missing)
    lo = 0 if len(miss_rows) else min_leaf - 1
    hi = m - min_leaf
    ck = csum[:, lo:hi]
    nl = np.arange(lo + 1, hi + 1, dtype=float)
    nr = m - nl
    # NaN comparisons are False, so positions at or past the last non-missing
    # value are excluded automatically.
    valid = xs[:, lo:hi] < xs[:, lo + 1:hi + 1]
    sr = row_total[:, None] - ck
    red_right = ck * ck / nl + sr * sr / nr - base
    red_right[~(valid & (nl >= min_leaf))] = -np.inf

    red_left = np.full_like(red_right, -np.inf)
    if len(miss_rows):
        # missing values routed left: positions 0..k plus all missing rows
        cnt = m - n_missing[miss_rows]
        cs = csum[miss_rows]
        nonmiss_total = np.where(cnt > 0, cs[np.arange(len(miss_rows)), np.maximum(cnt - 1, 0)], 0.0)
        miss_total = row_total[miss_rows] - nonmiss_total
        ckm = cs[:, lo:hi]
        nl2 = nl[None, :] + n_missing[miss_rows, None]
        nr2 = cnt[:, None] - nl[None, :]
        sl2 = ckm + miss_total[:, None]
        sr2 = nonmiss_total[:, None] - ckm
        ok2 = valid[miss_rows] & (nl2 >= min_leaf) & (nr2 >= min_leaf)
        with np.errstate(divide="ignore", invalid="ignore"):
            vals = sl2 * sl2 / nl2 + sr2 * sr2 / nr2 - base
        red_left[miss_rows] = np.where(ok2, vals, -np.inf)

    best = max(red_right.max(), red_left.max())
    tol = TIE_RTOL * parent_sse
    if best == -np.inf or not (best > tol or allow_zero):
        return None
    thresh = best - tol
    # first candidate in (feature, position, missing_left=False before True) order
    hit = (red_right >= thresh) | (red_left >= thresh)
    f, kk = divmod(int(np.argmax(hit.ravel())), hit.shape[1])
    j = not red_right[f, kk] >= thresh
    r = float(red_left[f, kk] if j else red_right[f, kk])
    return f, kk + lo, j, r


def _node_stats(targets: np.ndarray) -> tuple[float, float]:
    mean = math.fsum(targets) / len(targets)
    centered = targets - mean
    return mean, math.fsum(centered * centered)


def best_split(feature_values: Sequence[float], targets: Sequence[float],
               min_leaf: int = 1) -> Optional[SplitCandidate]:
    """Best single-feature split by SSE reduction, or None if nothing improves."""
    x = np.asarray(feature_values, dtype=float)
    y = np.asarray(targets, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("feature_values and targets must be 1-d and equally long")
    if len(y) < 2 * max(min_leaf, 1) or np.all(y == y[0]):
        return None
    order = np.argsort(x, kind="stable")
    mean, sse = _node_stats(y)
    gs = (y - mean)[order][None, :]
    xs = x[order][None, :]
    n_missing = np.array([int(np.isnan(x).sum())])
    total = math.fsum(gs[0])
    found = _search_sorted(xs, gs, n_missing, max(min_leaf, 1), sse, total)
    if found is None:
        return None
    _, k, mleft, reduction = found
    return SplitCandidate(0, _midpoint(xs[0, k], xs[0, k + 1]), mleft, max(reduction, 0.0))


class RegressionTree:
    """Binary tree stored as flat preorder arrays.

    ``feature[i] == -1`` marks a leaf; ``left``/``right`` are child node ids.
    """

    def __init__(self, feature, threshold, missing_left, left, right, value,
                 max_depth: int, min_leaf: int):
        self.feature = np.asarray(feature, dtype=np.intp)
        self.threshold = np.asarray(threshold, dtype=float)
        self.missing_left = np.asarray(missing_left, dtype=bool)
        self.left = np.asarray(left, dtype=np.intp)
        self.right = np.asarray(right, dtype=np.intp)
        self.value = np.asarray(value, dtype=float)
        self.max_depth = max_depth
        self.min_leaf = min_leaf
        self.n_features: Optional[int] = None

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def n_leaves(self) -> int:
        return int((self.feature < 0).sum())

    def depth(self) -> int:
        def walk(i):
            if self.feature[i] < 0:
                return 0
            return 1 + max(walk(self.left[i]), walk(self.right[i]))
        return walk(0)

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf node id reached by each row of ``X``."""
        X = np.asarray(X, dtype=float)
        if X.ndim != 2:
            raise ValueError("expected a 2-d matrix")
        if self.n_features is not None and X.shape[1] != self.n_features:
            raise ValueError(f"expected {self.n_features} features, got {X.shape[1]}")
        node = np.zeros(X.shape[0], dtype=np.intp)
        rows = np.arange(X.shape[0])
        active = self.feature[node] >= 0
        while active.any():
            r = rows[active]
            nd = node[r]
            x = X[r, self.feature[nd]]
            go_left = np.where(np.isnan(x), self.missing_left[nd], x <= self.threshold[nd])
            node[r] = np.where(go_left, self.left[nd], self.right[nd])
            active[r] = self.feature[node[r]] >= 0
        return node

    def predict(self, X) -> np.ndarray:
        if isinstance(X, EncodedMatrix):
            X = X.values
        return self.value[self.apply(X)]

    def to_nodes(self) -> list[dict]:
        """Preorder node list for serialization."""
        out = []
        for i in range(self.n_nodes):
            if self.feature[i] < 0:
                out.append({"leaf": float(self.value[i])})
            else:
                out.append({"feature": int(self.feature[i]),
                            "threshold": float(self.threshold[i]),
                            "missing_left": bool(self.missing_left[i])})
        return out

    @classmethod
    def from_nodes(cls, nodes: list[dict], max_depth: int, min_leaf: int,
                   n_features: Optional[int] = None) -> "RegressionTree":
        feature, threshold, mleft, left, right, value = [], [], [], [], [], []
        pos = 0

        def build() -> int:
            nonlocal pos
            if pos >= len(nodes):
                raise ValueError("truncated preorder node list")
            node = nodes[pos]
            i = len(feature)
            pos += 1
            feature.append(-1)
            threshold.append(0.0)
            mleft.append(False)
            left.append(-1)
            right.append(-1)
            value.append(0.0)
            if "leaf" in node:
                value[i] = float(node["leaf"])
                return i
            feature[i] = int(node["feature"])
            threshold[i] = float(node["threshold"])
            mleft[i] = bool(node["missing_left"])
            left[i] = build()
            right[i] = build()
            return i

        build()
        if pos != len(nodes):
            raise ValueError("trailing nodes after complete tree")
        tree = cls(feature, threshold, mleft, left, right, value, max_depth, min_leaf)
        tree.n_features = n_features
        return tree


def presort(X: np.ndarray) -> np.ndarray:
    """Per-feature row order, NaNs last; shape (n_features, n_rows).

    Reusable across every tree fit on the same matrix.
    """
    return np.ascontiguousarray(np.argsort(X, axis=0, kind="stable").T)


def fit_tree(matrix, targets, max_depth: int, min_leaf: int = 5,
             order: Optional[np.ndarray] = None) -> RegressionTree:
    """Greedy top-down least-squares tree.

    Parameters
    ----------
    matrix : EncodedMatrix or ndarray of shape (n, d), NaN for missing
    targets : array of length n
    max_depth : depth limit; 0 gives a single leaf
    min_leaf : minimum training rows per leaf
    order : optional output of :func:`presort` for ``matrix``
    """
    X = matrix.values if isinstance(matrix, EncodedMatrix) else np.asarray(matrix, dtype=float)
    y = np.asarray(targets, dtype=float)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ValueError("matrix rows and targets length differ")
    n, d = X.shape
    if n == 0:
        raise ValueError("cannot fit a tree on empty input")
    if max_depth < 0 or min_leaf < 1:
        raise ValueError("max_depth must be >= 0 and min_leaf >= 1")
    if order is None:
        order = presort(X)

    feature: list[int] = []
    threshold: list[float] = []
    mleft: list[bool] = []
    left: list[int] = []
    right: list[int] = []
    value: list[float] = []

    def new_node() -> int:
        feature.append(-1)
        threshold.append(0.0)
        mleft.append(False)
        left.append(-1)
        right.append(-1)
        value.append(0.0)
        return len(feature) - 1

    go_left = np.zeros(n, dtype=bool)

    def grow(sorted_idx: np.ndarray, xs: np.ndarray, depth: int) -> int:
        i = new_node()
        rows = np.sort(sorted_idx[0]) if d else np.arange(n)
        yt = y[rows]
        mean, sse = _node_stats(yt)
        # a mean can round outside the covered range; clamp it back
        value[i] = min(max(mean, float(yt.min())), float(yt.max()))
        m = len(rows)
        if depth >= max_depth or m < 2 * min_leaf or d == 0 or np.all(yt == yt[0]):
            return i
        gs = y[sorted_idx] - mean
        n_missing = np.isnan(xs).sum(axis=1)
        # a zero-gain split is kept only while a deeper split could exploit it
        # (e.g. XOR-shaped targets)
        found = _search_sorted(xs, gs, n_missing, min_leaf, sse, math.fsum(yt - mean),
                               allow_zero=depth + 1 < max_depth)
        if found is None:
            return i
        f, k, ml, _ = found
        thr = _midpoint(xs[f, k], xs[f, k + 1])
        # sorted row f: positions 0..k go left, then the NaN tail follows ml
        go_left[rows] = False
        go_left[sorted_idx[f, :k + 1]] = True
        if ml:
            go_left[sorted_idx[f, m - n_missing[f]:]] = True
        n_left = int(go_left[rows].sum())
        mask = go_left[sorted_idx]
        left_idx = sorted_idx[mask].reshape(d, n_left)
        left_xs = xs[mask].reshape(d, n_left)
        mask = ~mask
        right_idx = sorted_idx[mask].reshape(d, m - n_left)
        right_xs = xs[mask].reshape(d, m - n_left)
        feature[i], threshold[i], mleft[i] = f, thr, ml
        left[i] = grow(left_idx, left_xs, depth + 1)
        right[i] = grow(right_idx, right_xs, depth + 1)
        return i

    order = np.ascontiguousarray(order)
    grow(order, np.take_along_axis(X.T, order, axis=1), 0)
    tree = RegressionTree(feature, threshold, mleft, left, right, value, max_depth, min_leaf)
    tree.n_features = d
    return tree


def predict_tree(tree: RegressionTree, row: Sequence[float]) -> float:
    row = np.asarray(row, dtype=float)
    if row.ndim != 1 or (tree.n_features is not None and row.shape[0] != tree.n_features):
        raise ValueError(f"row has {row.shape[0]} features, tree expects {tree.n_features}")
    i = 0
    while tree.feature[i] >= 0:
        x = row[tree.feature[i]]
        if math.isnan(x):
            i = tree.left[i] if tree.missing_left[i] else tree.right[i]
        else:
            i = tree.left[i] if x <= tree.threshold[i] else tree.right[i]
    return float(tree.value[i])
