"""Random forest and boosted-tree baselines over the numba kernels."""

from __future__ import annotations

import numpy as np

from ..probs import stable_softmax
from ._tree_kernels import (
    accumulate_tree_probs,
    apply_regression_tree,
    build_classification_tree,
    build_regression_tree,
)

# Newton leaf steps can explode in near-pure leaves; bound them.
_MAX_LEAF_STEP = 10.0


def random_forest_probs(xt, yt, xs, n_classes, seed, n_trees=100, max_depth=12, min_leaf=1):
    """Bagged Gini trees with sqrt(p) features per split; probabilities are
    the mean of per-tree leaf class proportions."""
    rng = np.random.default_rng(seed)
    n, p = xt.shape
    n_feat_split = max(1, int(np.sqrt(p)))
    xt = np.ascontiguousarray(xt, dtype=np.float64)
    xs = np.ascontiguousarray(xs, dtype=np.float64)
    yt = np.ascontiguousarray(yt, dtype=np.int64)
    out = np.zeros((len(xs), n_classes))
    for _ in range(n_trees):
        boot = rng.integers(0, n, size=n, dtype=np.int64)
        tree_seed = int(rng.integers(1, 1 << 62))
        feat, thr, left, right, leaf_probs = build_classification_tree(
            xt, yt, n_classes, boot, max_depth, min_leaf, n_feat_split, tree_seed
        )
        accumulate_tree_probs(xs, feat, thr, left, right, leaf_probs, out)
    return out / n_trees


def boosted_stumps_probs(xt, yt, xs, n_classes, n_rounds=200, lr=0.1, max_depth=2, min_leaf=1):
    """Multiclass gradient boosting with depth-2 least-squares trees.

    Per round and class, a tree is fit to the softmax residual and its
    leaves are rescaled by the usual Newton step before being added to the
    class score.
    """
    xt = np.ascontiguousarray(xt, dtype=np.float64)
    xs = np.ascontiguousarray(xs, dtype=np.float64)
    n = len(xt)
    target = np.zeros((n, n_classes))
    target[np.arange(n), yt] = 1.0
    f_train = np.zeros((n, n_classes))
    f_test = np.zeros((len(xs), n_classes))
    newton_factor = (n_classes - 1.0) / n_classes
    for _ in range(n_rounds):
        probs = stable_softmax(f_train)
        for c in range(n_classes):
            resid = np.ascontiguousarray(target[:, c] - probs[:, c])
            feat, thr, left, right, leaf_id, assign, n_leaves = build_regression_tree(
                xt, resid, max_depth, min_leaf
            )
            sums = np.bincount(assign, weights=resid, minlength=n_leaves)
            denom = np.bincount(assign, weights=np.abs(resid) * (1.0 - np.abs(resid)), minlength=n_leaves)
            gamma = newton_factor * sums / np.maximum(denom, 1e-12)
            gamma = np.clip(gamma, -_MAX_LEAF_STEP, _MAX_LEAF_STEP) * lr
            col_train = np.ascontiguousarray(f_train[:, c])
            col_test = np.ascontiguousarray(f_test[:, c])
            col_train += gamma[assign]
            apply_regression_tree(xs, feat, thr, left, right, leaf_id, gamma, col_test)
            f_train[:, c] = col_train
            f_test[:, c] = col_test
    return stable_softmax(f_test)
