"""Compiled CART kernels (Gini impurity, weighted samples, threshold splits)."""

import numpy as np
from numba import njit


@njit(cache=True)
def _split_point(a, b):
    t = a + (b - a) / 2.0
    if t >= b:
        t = a
    return t


@njit(cache=True)
def grow_tree(X, y, w, n_classes, max_features, min_samples_split, max_depth, seed):
    """Grow one tree on rows with positive weight.

    X is (n, d) float64, y int64 class codes, w float64 sample weights.
    ``max_features`` < d draws a random feature order per node (seeded);
    otherwise features are scanned in index order. ``max_depth`` < 0 means
    unlimited. Returns node arrays (feature, threshold, left, right, value);
    leaves have feature == -1.
    """
    n, d = X.shape
    np.random.seed(seed)
    idx = np.empty(n, dtype=np.int64)
    m = 0
    for i in range(n):
        if w[i] > 0:
            idx[m] = i
            m += 1
    cap = 2 * m + 1
    feature = np.full(cap, -1, dtype=np.int64)
    threshold = np.zeros(cap)
    left = np.full(cap, -1, dtype=np.int64)
    right = np.full(cap, -1, dtype=np.int64)
    value = np.zeros((cap, n_classes))

    st_node = np.empty(cap, dtype=np.int64)
    st_start = np.empty(cap, dtype=np.int64)
    st_end = np.empty(cap, dtype=np.int64)
    st_depth = np.empty(cap, dtype=np.int64)
    top = 0
    st_node[0], st_start[0], st_end[0], st_depth[0] = 0, 0, m, 0
    top = 1
    n_nodes = 1

    feats = np.arange(d)
    vals = np.empty(m)
    rows = np.empty(m, dtype=np.int64)
    cl = np.zeros(n_classes)
    counts = np.zeros(n_classes)

    while top > 0:
        top -= 1
        node, start, end, depth = st_node[top], st_start[top], st_end[top], st_depth[top]
        counts[:] = 0.0
        for j in range(start, end):
            counts[y[idx[j]]] += w[idx[j]]
        value[node, :] = counts
        wsum = counts.sum()
        sq = 0.0
        for c in range(n_classes):
            sq += counts[c] * counts[c]
        impurity = 1.0 - sq / (wsum * wsum)
        size = end - start
        if impurity <= 0.0 or size < min_samples_split or (max_depth >= 0 and depth >= max_depth):
            continue

        if max_features < d:
            for i in range(d - 1, 0, -1):
                k = np.random.randint(0, i + 1)
                feats[i], feats[k] = feats[k], feats[i]
        best_crit = np.inf
        best_f = -1
        best_t = 0.0
        evaluated = 0
        for fi in range(d):
            f = feats[fi]
            for j in range(size):
                rows[j] = idx[start + j]
                vals[j] = X[idx[start + j], f]
            order = np.argsort(vals[:size], kind="mergesort")
            if vals[order[0]] == vals[order[size - 1]]:
                continue
            evaluated += 1
            cl[:] = 0.0
            wl = 0.0
            sql = 0.0
            sqr = sq
            for j in range(size - 1):
                r = rows[order[j]]
                c = y[r]
                wt = w[r]
                # move row r from the right child to the left child
                cr = counts[c] - cl[c]
                sqr += (cr - wt) * (cr - wt) - cr * cr
                sql += (cl[c] + wt) * (cl[c] + wt) - cl[c] * cl[c]
                cl[c] += wt
                wl += wt
                a = vals[order[j]]
                b = vals[order[j + 1]]
                if a < b:
                    wr = wsum - wl
                    crit = (wl - sql / wl) + (wr - sqr / wr)
                    if crit < best_crit - 1e-12:
                        best_crit = crit
                        best_f = f
                        best_t = _split_point(a, b)
            if evaluated >= max_features:
                break
        if best_f < 0:
            continue

        # partition idx[start:end] so that rows with x <= t come first
        lo = start
        hi = end - 1
        while lo <= hi:
            if X[idx[lo], best_f] <= best_t:
                lo += 1
            else:
                tmp = idx[lo]
                idx[lo] = idx[hi]
                idx[hi] = tmp
                hi -= 1
        feature[node] = best_f
        threshold[node] = best_t
        left[node] = n_nodes
        right[node] = n_nodes + 1
        # push right first so the left subtree is grown first
        st_node[top], st_start[top], st_end[top], st_depth[top] = n_nodes + 1, lo, end, depth + 1
        top += 1
        st_node[top], st_start[top], st_end[top], st_depth[top] = n_nodes, start, lo, depth + 1
        top += 1
        n_nodes += 2

    return (feature[:n_nodes].copy(), threshold[:n_nodes].copy(), left[:n_nodes].copy(),
            right[:n_nodes].copy(), value[:n_nodes].copy())


@njit(cache=True)
def apply_tree(X, feature, threshold, left, right, offset):
    """Leaf index (relative to ``offset``) reached by every row of X."""
    n = X.shape[0]
    out = np.empty(n, dtype=np.int64)
    for i in range(n):
        node = 0
        while feature[offset + node] >= 0:
            if X[i, feature[offset + node]] <= threshold[offset + node]:
                node = left[offset + node]
            else:
                node = right[offset + node]
        out[i] = node
    return out
