"""Pure-numpy extra-tree growth kernel (fallback backend).

Grows one regression tree best-first: every frontier node carries its
best candidate split (one uniformly drawn threshold per non-constant
feature, scored by variance reduction), and the frontier node with the
greatest reduction splits next. That single code path serves plain
depth-limited growth and max_leaf_nodes caps alike.

The compiled kernel in _tree_core.pyx mirrors this file operation for
operation; both consume one uniform per non-constant feature per node
in ascending feature order, from the same splitmix64 stream.
"""

from __future__ import annotations

import numpy as np

from ._splitmix import SplitMix

#: Relative tolerance below which a node's target variance counts as zero.
ZERO_VAR_RTOL = 1e-12

NO_FEATURE = -1


def grow_tree(
    X: np.ndarray,
    y: np.ndarray,
    max_depth: int,
    min_samples_split: int,
    min_samples_leaf: int,
    max_leaf_nodes: int,
    seed: int,
) -> dict:
    """Grow one extra-tree; returns flat node arrays plus importances.

    Depth and leaf-count limits use 0x7fffffff as "unlimited". Node ids
    are assigned in creation order (root 0, then children of each split
    in left/right order).
    """
    n, k = X.shape
    rng = SplitMix(int(seed))
    order = np.arange(n)

    feature: list[int] = []
    threshold: list[float] = []
    left: list[int] = []
    right: list[int] = []
    value: list[float] = []
    n_samples: list[int] = []
    importances = np.zeros(k)

    # frontier entries: [node_id, start, end, depth, gain, feat, thr]
    frontier: list[list] = []

    def make_node(start: int, end: int, depth: int) -> int:
        """Create a node, evaluate its best split, queue it if splittable."""
        node_id = len(feature)
        rows = order[start:end]
        ys = y[rows]
        m = end - start
        s = float(ys.sum())
        feature.append(NO_FEATURE)
        threshold.append(0.0)
        left.append(NO_FEATURE)
        right.append(NO_FEATURE)
        value.append(s / m)
        n_samples.append(m)
        if depth >= max_depth or m < min_samples_split or m < 2 * min_samples_leaf:
            return node_id
        ss = float(ys @ ys)
        node_ssq = ss - s * s / m
        if node_ssq <= ZERO_VAR_RTOL * (abs(ss) + 1.0):
            return node_id
        Xn = X[rows]
        lo = Xn.min(axis=0)
        hi = Xn.max(axis=0)
        varying = hi > lo
        if not varying.any():
            return node_id
        u = rng.uniforms(int(varying.sum()))
        thresholds = np.where(varying, lo, 0.0)
        thresholds[varying] = lo[varying] + u * (hi[varying] - lo[varying])
        mask = Xn <= thresholds[None, :]
        n_left = mask.sum(axis=0)
        s_left = (ys[:, None] * mask).sum(axis=0)
        n_right = m - n_left
        valid = varying & (n_left >= min_samples_leaf) & (n_right >= min_samples_leaf)
        if not valid.any():
            return node_id
        with np.errstate(divide="ignore", invalid="ignore"):
            gains = s_left**2 / n_left + (s - s_left) ** 2 / n_right - s * s / m
        gains[~valid] = -np.inf
        best_f = int(np.argmax(gains))
        frontier.append(
            [node_id, start, end, depth, float(gains[best_f]), best_f,
             float(thresholds[best_f])]
        )
        return node_id

    make_node(0, n, 0)
    n_leaves = 1
    while frontier and n_leaves < max_leaf_nodes:
        best_i = 0
        for i in range(1, len(frontier)):
            if frontier[i][4] > frontier[best_i][4]:
                best_i = i
        node_id, start, end, depth, gain, f, thr = frontier.pop(best_i)
        rows = order[start:end]
        sel = X[rows, f] <= thr
        order[start:end] = np.concatenate([rows[sel], rows[~sel]])
        mid = start + int(sel.sum())
        importances[f] += max(gain, 0.0)  # shield the sum from fp cancellation
        feature[node_id] = f
        threshold[node_id] = thr
        left[node_id] = make_node(start, mid, depth + 1)
        right[node_id] = make_node(mid, end, depth + 1)
        n_leaves += 1

    return {
        "feature": np.asarray(feature, dtype=np.int32),
        "threshold": np.asarray(threshold, dtype=np.float64),
        "left": np.asarray(left, dtype=np.int32),
        "right": np.asarray(right, dtype=np.int32),
        "value": np.asarray(value, dtype=np.float64),
        "n_samples": np.asarray(n_samples, dtype=np.int32),
        "importances": importances,
    }
