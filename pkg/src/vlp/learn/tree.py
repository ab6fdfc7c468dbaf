"""CART regression trees with exact greedy squared-error splits.

Trees are stored as flat parallel node arrays rather than linked node
objects: node i is a split when feature[i] >= 0 (rows with
x[feature] <= threshold descend left), otherwise a leaf predicting
value[i]. Flat arrays keep batch prediction vectorizable and make the
JSON model format a direct dump.
"""

from __future__ import annotations

import numpy as np

__all__ = ["Tree", "fit_tree"]


class Tree:
    """Binary regression tree over flat node arrays. Root is node 0."""

    __slots__ = ("feature", "threshold", "left", "right", "value")

    def __init__(self, feature, threshold, left, right, value):
        self.feature = np.asarray(feature, dtype=np.int64)
        self.threshold = np.asarray(threshold, dtype=np.float64)
        self.left = np.asarray(left, dtype=np.int64)
        self.right = np.asarray(right, dtype=np.int64)
        self.value = np.asarray(value, dtype=np.float64)
        n = self.feature.size
        if not (self.threshold.size == self.left.size == self.right.size
                == self.value.size == n) or n == 0:
            raise ValueError("node arrays must be nonempty and equal length")

    @property
    def n_nodes(self) -> int:
        return int(self.feature.size)

    @property
    def n_leaves(self) -> int:
        return int(np.count_nonzero(self.feature < 0))

    def predict(self, features: np.ndarray) -> np.ndarray:
        """Predicted value for each row of an (N, n_features) matrix."""
        x = np.asarray(features, dtype=np.float64)
        if x.ndim == 1:
            x = x[None, :]
        node = np.zeros(x.shape[0], dtype=np.int64)
        while True:
            live = np.flatnonzero(self.feature[node] >= 0)
            if live.size == 0:
                return self.value[node]
            cur = node[live]
            goes_left = x[live, self.feature[cur]] <= self.threshold[cur]
            node[live] = np.where(goes_left, self.left[cur], self.right[cur])

    def __eq__(self, other):
        if not isinstance(other, Tree):
            return NotImplemented
        return (np.array_equal(self.feature, other.feature)
                and np.array_equal(self.threshold, other.threshold)
                and np.array_equal(self.left, other.left)
                and np.array_equal(self.right, other.right)
                and np.array_equal(self.value, other.value))

    __hash__ = None


class _Builder:
    """Accumulates node records during recursive growth."""

    def __init__(self):
        self.feature = []
        self.threshold = []
        self.left = []
        self.right = []
        self.value = []

    def add(self) -> int:
        idx = len(self.feature)
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(0.0)
        return idx

    def finish(self) -> Tree:
        return Tree(self.feature, self.threshold, self.left, self.right, self.value)


def _validate_xy(features, targets):
    x = np.asarray(features, dtype=np.float64)
    y = np.asarray(targets, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError("features must be a 2-D matrix")
    if y.ndim != 1 or y.size != x.shape[0]:
        raise ValueError("targets must be 1-D with one entry per feature row")
    if x.shape[0] == 0:
        raise ValueError("empty training set")
    if not (np.isfinite(x).all() and np.isfinite(y).all()):
        raise ValueError("non-finite training values")
    return x, y


def _best_split(x, y, idx, columns, min_leaf):
    """Lowest-SSE split of the rows `idx`, or None.

    Candidate thresholds are midpoints between consecutive distinct sorted
    values. Ties resolve to the lowest feature index, then the lowest
    threshold, which the ascending scan order gives for free.
    """
    n = idx.size
    best = None  # (sse, feature, threshold, order, left_count)
    for f in columns:
        order = np.argsort(x[idx, f], kind="stable")
        xs = x[idx[order], f]
        yo = y[idx[order]]
        c1 = np.cumsum(yo)
        c2 = np.cumsum(yo * yo)
        sizes = np.arange(min_leaf, n - min_leaf + 1)
        sizes = sizes[xs[sizes - 1] < xs[sizes]]
        if sizes.size == 0:
            continue
        sl = c1[sizes - 1]
        sse_l = c2[sizes - 1] - sl * sl / sizes
        sr = c1[-1] - sl
        nr = n - sizes
        sse_r = (c2[-1] - c2[sizes - 1]) - sr * sr / nr
        total = sse_l + sse_r
        j = int(np.argmin(total))  # first minimum: lowest threshold
        if best is None or total[j] < best[0]:
            i = int(sizes[j])
            thr = (xs[i - 1] + xs[i]) / 2.0
            best = (float(total[j]), int(f), thr, order, i)
    return best


def fit_tree(features, targets, *, max_depth: int | None = None,
             min_samples_leaf: int = 1, feature_subset: int | None = None,
             rng=None) -> Tree:
    """Grow a regression tree by exact greedy recursive partitioning.

    Every node scans all allowed features at midpoints between consecutive
    distinct sorted values and takes the split minimizing the summed squared
    error of the child means. Growth stops at max_depth (None = unlimited),
    when a child would fall below min_samples_leaf, or at zero variance.
    feature_subset, when smaller than the feature count, samples that many
    columns per node from rng (the bagging hook; unused by default).
    """
    x, y = _validate_xy(features, targets)
    if min_samples_leaf < 1:
        raise ValueError("min_samples_leaf must be >= 1")
    n_features = x.shape[1]
    if feature_subset is not None and not (1 <= feature_subset <= n_features):
        raise ValueError("feature_subset out of range")
    use_subset = feature_subset is not None and feature_subset < n_features
    if use_subset:
        rng = np.random.default_rng(rng)
    builder = _Builder()

    # explicit stack, preorder: deep trees must not hit the recursion limit
    stack = [(np.arange(x.shape[0]), 0, -1, "l")]
    while stack:
        idx, depth, parent, side = stack.pop()
        node = builder.add()
        if parent >= 0:
            if side == "l":
                builder.left[parent] = node
            else:
                builder.right[parent] = node
        ys = y[idx]
        # mean over ascending row order so the value is independent of how
        # the partition happened to be built
        builder.value[node] = float(y[np.sort(idx)].mean())
        if (idx.size < 2 * min_samples_leaf
                or (max_depth is not None and depth >= max_depth)
                or ys.min() == ys.max()):
            continue
        if use_subset:
            columns = np.sort(rng.choice(n_features, size=feature_subset, replace=False))
        else:
            columns = range(n_features)
        best = _best_split(x, y, idx, columns, min_samples_leaf)
        if best is None:
            continue
        _, f, thr, order, i = best
        builder.feature[node] = f
        builder.threshold[node] = thr
        stack.append((idx[order[i:]], depth + 1, node, "r"))
        stack.append((idx[order[:i]], depth + 1, node, "l"))
    return builder.finish()
