# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled extra-tree growth kernel.

Mirrors _tree_py.grow_tree operation for operation: best-first growth,
one uniform threshold per non-constant feature per node in ascending
feature order, variance-reduction scoring with first-max tie-breaking,
and creation-order node ids. Uniform draws come from the same
counter-based splitmix64 stream as the numpy fallback.
"""

import numpy as np

cimport numpy as cnp
from libc.stdlib cimport free, malloc

cnp.import_array()

cdef extern from *:
    """
    #include <stdint.h>
    static inline uint64_t vx_mix64(uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }
    """
    cnp.uint64_t vx_mix64(cnp.uint64_t z) nogil

cdef cnp.uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL
cdef double U53 = 1.0 / 9007199254740992.0
cdef double ZERO_VAR_RTOL = 1e-12
cdef int NO_FEATURE = -1


cdef inline double next_uniform(cnp.uint64_t seed, cnp.uint64_t *counter) nogil:
    cdef cnp.uint64_t z = vx_mix64(seed + (counter[0] + 1) * GOLDEN)
    counter[0] += 1
    return <double> (z >> 11) * U53


cdef struct Frontier:
    int node_id
    int start
    int end
    int depth
    double gain
    int feat
    double thr


cdef int _make_node(
    double[:, ::1] X,
    double[:] y,
    int *order,
    int start,
    int end,
    int depth,
    int max_depth,
    int min_samples_split,
    int min_samples_leaf,
    cnp.uint64_t rng_seed,
    cnp.uint64_t *rng_counter,
    cnp.int32_t *feature,
    double *threshold,
    cnp.int32_t *left,
    cnp.int32_t *right,
    double *value,
    cnp.int32_t *n_samples,
    Frontier *frontier,
    int *n_frontier,
    int *n_nodes,
) nogil:
    """Create a node over order[start:end]; queue it when splittable."""
    cdef int node_id = n_nodes[0]
    n_nodes[0] += 1
    cdef int m = end - start
    cdef double m_d = <double> m
    cdef int i, f, row
    cdef double yv
    cdef double s = 0.0
    cdef double ss = 0.0

    for i in range(start, end):
        yv = y[order[i]]
        s += yv
        ss += yv * yv

    feature[node_id] = NO_FEATURE
    threshold[node_id] = 0.0
    left[node_id] = NO_FEATURE
    right[node_id] = NO_FEATURE
    value[node_id] = s / m_d
    n_samples[node_id] = m

    if depth >= max_depth or m < min_samples_split or m < 2 * min_samples_leaf:
        return node_id
    cdef double node_ssq = ss - s * s / m_d
    cdef double abs_ss = ss if ss >= 0.0 else -ss
    if node_ssq <= ZERO_VAR_RTOL * (abs_ss + 1.0):
        return node_id

    cdef int k = X.shape[1]
    cdef double lo, hi, xv, u, thr, s_left, gain
    cdef int n_left
    cdef double best_gain = 0.0
    cdef int best_f = NO_FEATURE
    cdef double best_thr = 0.0
    cdef bint have_best = False

    for f in range(k):
        row = order[start]
        lo = X[row, f]
        hi = lo
        for i in range(start + 1, end):
            xv = X[order[i], f]
            if xv < lo:
                lo = xv
            elif xv > hi:
                hi = xv
        if hi <= lo:
            continue
        u = next_uniform(rng_seed, rng_counter)
        thr = lo + u * (hi - lo)
        n_left = 0
        s_left = 0.0
        for i in range(start, end):
            row = order[i]
            if X[row, f] <= thr:
                n_left += 1
                s_left += y[row]
        if n_left < min_samples_leaf or m - n_left < min_samples_leaf:
            continue
        gain = (
            s_left * s_left / (<double> n_left)
            + (s - s_left) * (s - s_left) / (<double> (m - n_left))
            - s * s / m_d
        )
        if not have_best or gain > best_gain:
            have_best = True
            best_gain = gain
            best_f = f
            best_thr = thr

    if not have_best:
        return node_id

    frontier[n_frontier[0]].node_id = node_id
    frontier[n_frontier[0]].start = start
    frontier[n_frontier[0]].end = end
    frontier[n_frontier[0]].depth = depth
    frontier[n_frontier[0]].gain = best_gain
    frontier[n_frontier[0]].feat = best_f
    frontier[n_frontier[0]].thr = best_thr
    n_frontier[0] += 1
    return node_id


def grow_tree(
    X,
    y,
    int max_depth,
    int min_samples_split,
    int min_samples_leaf,
    int max_leaf_nodes,
    seed,
):
    """Grow one extra-tree; same contract as the numpy fallback."""
    cdef double[:, ::1] Xv = np.ascontiguousarray(X, dtype=np.float64)
    cdef double[:] yv = np.ascontiguousarray(y, dtype=np.float64)
    cdef int n = Xv.shape[0]
    cdef cnp.uint64_t rng_seed = <cnp.uint64_t> (int(seed) & ((1 << 64) - 1))
    cdef cnp.uint64_t rng_counter = 0

    cdef int cap = 2 * n + 2
    feature_arr = np.empty(cap, dtype=np.int32)
    threshold_arr = np.empty(cap, dtype=np.float64)
    left_arr = np.empty(cap, dtype=np.int32)
    right_arr = np.empty(cap, dtype=np.int32)
    value_arr = np.empty(cap, dtype=np.float64)
    n_samples_arr = np.empty(cap, dtype=np.int32)
    importances_arr = np.zeros(Xv.shape[1], dtype=np.float64)

    cdef cnp.int32_t[:] feature = feature_arr
    cdef double[:] threshold = threshold_arr
    cdef cnp.int32_t[:] left = left_arr
    cdef cnp.int32_t[:] right = right_arr
    cdef double[:] value = value_arr
    cdef cnp.int32_t[:] n_samples = n_samples_arr
    cdef double[:] importances = importances_arr

    cdef int *order = <int *> malloc(n * sizeof(int))
    cdef int *scratch = <int *> malloc(n * sizeof(int))
    cdef Frontier *frontier = <Frontier *> malloc((n + 1) * sizeof(Frontier))
    if order == NULL or scratch == NULL or frontier == NULL:
        free(order)
        free(scratch)
        free(frontier)
        raise MemoryError()

    cdef int n_nodes = 0
    cdef int n_frontier = 0
    cdef int n_leaves = 0
    cdef int i, row, node_id, start, end, depth
    cdef int best_i, mid, pos_l, pos_r, best_f
    cdef double gain, best_thr

    try:
        with nogil:
            for i in range(n):
                order[i] = i
            _make_node(
                Xv, yv, order, 0, n, 0,
                max_depth, min_samples_split, min_samples_leaf,
                rng_seed, &rng_counter,
                &feature[0], &threshold[0], &left[0], &right[0],
                &value[0], &n_samples[0],
                frontier, &n_frontier, &n_nodes,
            )
            n_leaves = 1
            while n_frontier > 0 and n_leaves < max_leaf_nodes:
                best_i = 0
                for i in range(1, n_frontier):
                    if frontier[i].gain > frontier[best_i].gain:
                        best_i = i
                node_id = frontier[best_i].node_id
                start = frontier[best_i].start
                end = frontier[best_i].end
                depth = frontier[best_i].depth
                gain = frontier[best_i].gain
                best_f = frontier[best_i].feat
                best_thr = frontier[best_i].thr
                # remove entry, preserving creation order of the rest
                for i in range(best_i, n_frontier - 1):
                    frontier[i] = frontier[i + 1]
                n_frontier -= 1

                # stable partition around the stored threshold
                pos_l = 0
                pos_r = 0
                for i in range(start, end):
                    row = order[i]
                    if Xv[row, best_f] <= best_thr:
                        order[start + pos_l] = row
                        pos_l += 1
                    else:
                        scratch[pos_r] = row
                        pos_r += 1
                for i in range(pos_r):
                    order[start + pos_l + i] = scratch[i]
                mid = start + pos_l

                if gain > 0.0:
                    importances[best_f] += gain
                feature[node_id] = best_f
                threshold[node_id] = best_thr
                left[node_id] = _make_node(
                    Xv, yv, order, start, mid, depth + 1,
                    max_depth, min_samples_split, min_samples_leaf,
                    rng_seed, &rng_counter,
                    &feature[0], &threshold[0], &left[0], &right[0],
                    &value[0], &n_samples[0],
                    frontier, &n_frontier, &n_nodes,
                )
                right[node_id] = _make_node(
                    Xv, yv, order, mid, end, depth + 1,
                    max_depth, min_samples_split, min_samples_leaf,
                    rng_seed, &rng_counter,
                    &feature[0], &threshold[0], &left[0], &right[0],
                    &value[0], &n_samples[0],
                    frontier, &n_frontier, &n_nodes,
                )
                n_leaves += 1
    finally:
        free(order)
        free(scratch)
        free(frontier)

    return {
        "feature": feature_arr[:n_nodes].copy(),
        "threshold": threshold_arr[:n_nodes].copy(),
        "left": left_arr[:n_nodes].copy(),
        "right": right_arr[:n_nodes].copy(),
        "value": value_arr[:n_nodes].copy(),
        "n_samples": n_samples_arr[:n_nodes].copy(),
        "importances": importances_arr,
    }
