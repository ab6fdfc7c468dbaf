"""Independent oracles used by both the unit tests and the acceptance
suite. Everything here is written the slow, obvious way on purpose: these
functions must be trivially auditable, not fast."""

import numpy as np


def exhaustive_tree_sse(x: np.ndarray, y: np.ndarray, depth: int) -> float:
    """SSE of the greedy tree found by brute force: at every node, enumerate
    every (feature, midpoint-between-distinct-values) split, score it by
    recomputing both child means and squared errors from scratch, commit the
    winner, and recurse. Ties resolve to the lowest feature index, then the
    lowest threshold, which ascending scan order with strict improvement
    gives for free. Greedy, not globally optimal: the learner under test is
    greedy too, and a global optimum would diverge on interaction patterns
    no greedy sequence can reach.
    """
    sse_leaf = float(np.sum((y - y.mean()) ** 2)) if y.size else 0.0
    if depth == 0 or y.size < 2 or y.min() == y.max():
        return sse_leaf
    best = None  # (child sse total, mask)
    for f in range(x.shape[1]):
        vals = np.unique(x[:, f])
        for lo, hi in zip(vals, vals[1:]):
            t = (lo + hi) / 2.0
            mask = x[:, f] <= t
            yl, yr = y[mask], y[~mask]
            total = (float(np.sum((yl - yl.mean()) ** 2))
                     + float(np.sum((yr - yr.mean()) ** 2)))
            if best is None or total < best[0]:
                best = (total, mask)
    if best is None:
        return sse_leaf
    mask = best[1]
    return (exhaustive_tree_sse(x[mask], y[mask], depth - 1)
            + exhaustive_tree_sse(x[~mask], y[~mask], depth - 1))


def tree_sse(tree, x: np.ndarray, y: np.ndarray) -> float:
    pred = tree.predict(x)
    return float(np.sum((pred - y) ** 2))


def walk_leaves(tree, x: np.ndarray):
    """Yield (node_index, row_indices) for every leaf that receives at least
    one row of x, routing rows by the tree's own split rules."""
    stack = [(0, np.arange(x.shape[0]))]
    while stack:
        node, idx = stack.pop()
        f = int(tree.feature[node])
        if f < 0:
            yield node, idx
            continue
        goes_left = x[idx, f] <= tree.threshold[node]
        stack.append((int(tree.left[node]), idx[goes_left]))
        stack.append((int(tree.right[node]), idx[~goes_left]))


def gbt_leaf_identity_errors(model, x: np.ndarray, y: np.ndarray,
                             reg_lambda: float = 1.0) -> list:
    """Relative error |w - (-G/(H+lambda))| / max(|w|, 1e-12) for every
    populated leaf of every round, recomputing gradients independently.

    Squared loss: g_i = pred_before(x_i) - y_i, h_i = 1. reg_lambda must
    repeat whatever the model was fit with; it is not stored on the model.
    """
    lam = reg_lambda
    pred = np.full(x.shape[0], model.base_score, dtype=np.float64)
    errors = []
    for tree in model.trees:
        g = pred - y
        for node, idx in walk_leaves(tree, x):
            w = float(tree.value[node])
            want = -float(g[idx].sum()) / (idx.size + lam)
            errors.append((abs(w - want) / max(abs(w), 1e-12), w, want))
        pred = pred + model.learning_rate * tree.predict(x)
    return errors


def finite_difference_worst_rel(widths, n: int, seed: int) -> float:
    """Worst relative disagreement between analytic MLP gradients and central
    finite differences over every weight and bias of a random micro-net."""
    from vlp.learn import loss_and_grads

    g = np.random.default_rng(seed)
    weights = [g.normal(0.0, 0.5, size=(a, b))
               for a, b in zip(widths[:-1], widths[1:])]
    biases = [g.normal(0.0, 0.1, size=b) for b in widths[1:]]
    x = g.normal(size=(n, widths[0]))
    y = g.normal(size=n)
    _, gw, gb = loss_and_grads(weights, biases, x, y)
    eps = 1e-6
    worst = 0.0
    for params, grads in ((weights, gw), (biases, gb)):
        for p, grad in zip(params, grads):
            it = np.nditer(p, flags=["multi_index"])
            for _ in it:
                i = it.multi_index
                keep = p[i]
                p[i] = keep + eps
                up, _, _ = loss_and_grads(weights, biases, x, y)
                p[i] = keep - eps
                down, _, _ = loss_and_grads(weights, biases, x, y)
                p[i] = keep
                fd = (up - down) / (2.0 * eps)
                denom = max(abs(fd), abs(float(grad[i])), 1e-8)
                worst = max(worst, abs(fd - float(grad[i])) / denom)
    return worst


def point_in_convex_quad(pts: np.ndarray, quad: np.ndarray) -> np.ndarray:
    """Half-plane test against a convex quad in vertex order; points exactly
    on an edge count as inside."""
    quad = np.asarray(quad, dtype=np.float64)
    signs = []
    for i in range(4):
        a, b = quad[i], quad[(i + 1) % 4]
        cross = (b[0] - a[0]) * (pts[:, 1] - a[1]) - (b[1] - a[1]) * (pts[:, 0] - a[0])
        signs.append(cross)
    signs = np.stack(signs)
    return np.all(signs >= 0, axis=0) | np.all(signs <= 0, axis=0)


def distance_to_quad_edges(pts: np.ndarray, quad: np.ndarray) -> np.ndarray:
    """Distance from each point to the nearest quad edge segment."""
    quad = np.asarray(quad, dtype=np.float64)
    d = np.full(pts.shape[0], np.inf)
    for i in range(4):
        a, b = quad[i], quad[(i + 1) % 4]
        ab = b - a
        t = np.clip(((pts - a) @ ab) / (ab @ ab), 0.0, 1.0)
        proj = a + t[:, None] * ab
        d = np.minimum(d, np.hypot(*(pts - proj).T))
    return d
