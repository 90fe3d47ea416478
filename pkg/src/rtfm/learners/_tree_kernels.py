"""Numba kernels for tree growing and prediction.

The split search dominates forest and boosting runtime, so it lives in
nopython-compiled code. All randomness (feature subsets) is driven by an
in-kernel 64-bit LCG seeded from the caller, keeping fits deterministic.
"""

from __future__ import annotations

import numpy as np
from numba import njit

_LCG_MULT = np.uint64(6364136223846793005)
_LCG_INC = np.uint64(1442695040888963407)


@njit(cache=True, inline="always")
def _lcg_next(state):
    return state * _LCG_MULT + _LCG_INC


@njit(cache=True)
def build_classification_tree(x, y, n_classes, sample_idx, max_depth, min_leaf, n_feat_split, seed):
    """Grow one Gini CART tree on x[sample_idx]; arrays encode the tree.

    Returns (feature, threshold, left, right, leaf_probs). Internal nodes
    have feature >= 0; leaves carry class proportions.
    """
    n = sample_idx.shape[0]
    p = x.shape[1]
    max_nodes = 2 * n + 1
    feat = np.full(max_nodes, -1, np.int64)
    thr = np.zeros(max_nodes, np.float64)
    left = np.full(max_nodes, -1, np.int64)
    right = np.full(max_nodes, -1, np.int64)
    leaf_probs = np.zeros((max_nodes, n_classes), np.float64)

    idx = sample_idx.copy()
    stack = np.zeros((max_nodes, 4), np.int64)  # node, start, end, depth
    stack[0, 0], stack[0, 1], stack[0, 2], stack[0, 3] = 0, 0, n, 0
    n_stack = 1
    n_nodes = 1
    state = np.uint64(seed)
    feat_order = np.empty(p, np.int64)

    while n_stack > 0:
        n_stack -= 1
        node = stack[n_stack, 0]
        start = stack[n_stack, 1]
        end = stack[n_stack, 2]
        depth = stack[n_stack, 3]
        m = end - start

        counts = np.zeros(n_classes, np.float64)
        for i in range(start, end):
            counts[y[idx[i]]] += 1.0
        total = float(m)
        for c in range(n_classes):
            leaf_probs[node, c] = counts[c] / total

        pure = False
        for c in range(n_classes):
            if counts[c] == total:
                pure = True
        if depth >= max_depth or m < 2 * min_leaf or pure:
            continue

        gini_parent = 1.0
        for c in range(n_classes):
            pr = counts[c] / total
            gini_parent -= pr * pr

        # Partial Fisher-Yates: first n_feat_split entries are the subset.
        for f in range(p):
            feat_order[f] = f
        k = n_feat_split if n_feat_split < p else p
        for f in range(k):
            state = _lcg_next(state)
            j = f + int((state >> np.uint64(33)) % np.uint64(p - f))
            tmp = feat_order[f]
            feat_order[f] = feat_order[j]
            feat_order[j] = tmp

        best_gain = 1e-12
        best_f = -1
        best_t = 0.0
        vals = np.empty(m, np.float64)
        labs = np.empty(m, np.int64)
        lc = np.empty(n_classes, np.float64)
        rc = np.empty(n_classes, np.float64)
        for fi in range(k):
            f = feat_order[fi]
            for i in range(m):
                vals[i] = x[idx[start + i], f]
                labs[i] = y[idx[start + i]]
            order = np.argsort(vals, kind="mergesort")
            for c in range(n_classes):
                lc[c] = 0.0
                rc[c] = counts[c]
            for pos in range(m - 1):
                cc = labs[order[pos]]
                lc[cc] += 1.0
                rc[cc] -= 1.0
                v0 = vals[order[pos]]
                v1 = vals[order[pos + 1]]
                if v1 <= v0:
                    continue
                nl = float(pos + 1)
                nr = total - nl
                if nl < min_leaf or nr < min_leaf:
                    continue
                gl = 1.0
                gr = 1.0
                for c in range(n_classes):
                    pl = lc[c] / nl
                    pr = rc[c] / nr
                    gl -= pl * pl
                    gr -= pr * pr
                gain = gini_parent - (nl / total) * gl - (nr / total) * gr
                if gain > best_gain:
                    best_gain = gain
                    best_f = f
                    best_t = 0.5 * (v0 + v1)

        if best_f < 0:
            continue
        mid = start
        for i in range(start, end):
            if x[idx[i], best_f] <= best_t:
                tmp2 = idx[mid]
                idx[mid] = idx[i]
                idx[i] = tmp2
                mid += 1
        if mid == start or mid == end:
            continue

        feat[node] = best_f
        thr[node] = best_t
        left[node] = n_nodes
        right[node] = n_nodes + 1
        stack[n_stack, 0], stack[n_stack, 1], stack[n_stack, 2], stack[n_stack, 3] = n_nodes, start, mid, depth + 1
        n_stack += 1
        stack[n_stack, 0], stack[n_stack, 1], stack[n_stack, 2], stack[n_stack, 3] = n_nodes + 1, mid, end, depth + 1
        n_stack += 1
        n_nodes += 2

    return feat[:n_nodes], thr[:n_nodes], left[:n_nodes], right[:n_nodes], leaf_probs[:n_nodes]


@njit(cache=True)
def accumulate_tree_probs(x, feat, thr, left, right, leaf_probs, out):
    """Route rows of x to leaves and add leaf class proportions into out."""
    n = x.shape[0]
    for i in range(n):
        node = 0
        while feat[node] >= 0:
            if x[i, feat[node]] <= thr[node]:
                node = left[node]
            else:
                node = right[node]
        for c in range(out.shape[1]):
            out[i, c] += leaf_probs[node, c]


@njit(cache=True)
def build_regression_tree(x, target, max_depth, min_leaf):
    """Least-squares CART over all features; returns tree arrays with
    per-leaf (sum, count) of targets for later Newton scaling."""
    n, p = x.shape
    max_nodes = 2 * n + 1
    feat = np.full(max_nodes, -1, np.int64)
    thr = np.zeros(max_nodes, np.float64)
    left = np.full(max_nodes, -1, np.int64)
    right = np.full(max_nodes, -1, np.int64)
    leaf_id = np.full(max_nodes, -1, np.int64)

    idx = np.arange(n)
    stack = np.zeros((max_nodes, 4), np.int64)
    stack[0, 0], stack[0, 1], stack[0, 2], stack[0, 3] = 0, 0, n, 0
    n_stack = 1
    n_nodes = 1
    n_leaves = 0
    # sample -> leaf assignment, filled when nodes finalize
    assign = np.full(n, -1, np.int64)

    vals = np.empty(n, np.float64)
    tgt = np.empty(n, np.float64)

    while n_stack > 0:
        n_stack -= 1
        node = stack[n_stack, 0]
        start = stack[n_stack, 1]
        end = stack[n_stack, 2]
        depth = stack[n_stack, 3]
        m = end - start

        s_total = 0.0
        for i in range(start, end):
            s_total += target[idx[i]]

        make_leaf = depth >= max_depth or m < 2 * min_leaf
        best_f = -1
        best_t = 0.0
        if not make_leaf:
            # maximize s_l^2/n_l + s_r^2/n_r (equivalent to SSE reduction)
            best_score = (s_total * s_total) / m + 1e-12
            for f in range(p):
                for i in range(m):
                    vals[i] = x[idx[start + i], f]
                    tgt[i] = target[idx[start + i]]
                order = np.argsort(vals[:m], kind="mergesort")
                s_left = 0.0
                for pos in range(m - 1):
                    s_left += tgt[order[pos]]
                    v0 = vals[order[pos]]
                    v1 = vals[order[pos + 1]]
                    if v1 <= v0:
                        continue
                    nl = float(pos + 1)
                    nr = float(m) - nl
                    if nl < min_leaf or nr < min_leaf:
                        continue
                    s_right = s_total - s_left
                    score = (s_left * s_left) / nl + (s_right * s_right) / nr
                    if score > best_score:
                        best_score = score
                        best_f = f
                        best_t = 0.5 * (v0 + v1)
            if best_f < 0:
                make_leaf = True

        if make_leaf:
            leaf_id[node] = n_leaves
            for i in range(start, end):
                assign[idx[i]] = n_leaves
            n_leaves += 1
            continue

        mid = start
        for i in range(start, end):
            if x[idx[i], best_f] <= best_t:
                tmp = idx[mid]
                idx[mid] = idx[i]
                idx[i] = tmp
                mid += 1
        if mid == start or mid == end:
            leaf_id[node] = n_leaves
            for i in range(start, end):
                assign[idx[i]] = n_leaves
            n_leaves += 1
            continue

        feat[node] = best_f
        thr[node] = best_t
        left[node] = n_nodes
        right[node] = n_nodes + 1
        stack[n_stack, 0], stack[n_stack, 1], stack[n_stack, 2], stack[n_stack, 3] = n_nodes, start, mid, depth + 1
        n_stack += 1
        stack[n_stack, 0], stack[n_stack, 1], stack[n_stack, 2], stack[n_stack, 3] = n_nodes + 1, mid, end, depth + 1
        n_stack += 1
        n_nodes += 2

    return feat[:n_nodes], thr[:n_nodes], left[:n_nodes], right[:n_nodes], leaf_id[:n_nodes], assign, n_leaves


@njit(cache=True)
def apply_regression_tree(x, feat, thr, left, right, leaf_id, leaf_values, out):
    """Add leaf_values[leaf] to out for each row of x."""
    n = x.shape[0]
    for i in range(n):
        node = 0
        while feat[node] >= 0:
            if x[i, feat[node]] <= thr[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] += leaf_values[leaf_id[node]]
