"""Linear, neighbor, and shallow-net baselines (pure numpy)."""

from __future__ import annotations

import numpy as np

from ..probs import one_hot, stable_softmax


def logistic_regression_probs(xt, yt, xs, n_classes, n_iters=500, lr=0.1, l2=1e-4):
    """Multinomial logistic regression via full-batch gradient descent.

    The intercept column is not regularized. Zero init makes the fit
    deterministic without a seed.
    """
    n, p = xt.shape
    xb = np.hstack([xt, np.ones((n, 1))])
    w = np.zeros((p + 1, n_classes))
    target = one_hot(yt, n_classes)
    for _ in range(n_iters):
        probs = stable_softmax(xb @ w)
        grad = xb.T @ (probs - target) / n
        grad[:p] += l2 * w[:p]
        w -= lr * grad
    xs_b = np.hstack([xs, np.ones((len(xs), 1))])
    return stable_softmax(xs_b @ w)


def knn_probs(xt, yt, xs, n_classes, k=5):
    """Distance-weighted k-nearest-neighbor class frequencies."""
    k = min(int(k), len(xt))
    d2 = np.maximum(
        (xs * xs).sum(axis=1)[:, None] + (xt * xt).sum(axis=1)[None, :] - 2.0 * xs @ xt.T,
        0.0,
    )
    dist = np.sqrt(d2)
    nearest = np.argpartition(dist, k - 1, axis=1)[:, :k]
    probs = np.zeros((len(xs), n_classes))
    rows = np.arange(len(xs))[:, None]
    weights = 1.0 / (dist[rows, nearest] + 1e-12)
    for c in range(n_classes):
        probs[:, c] = (weights * (yt[nearest] == c)).sum(axis=1)
    return probs / probs.sum(axis=1, keepdims=True)


def mlp_probs(xt, yt, xs, n_classes, seed, hidden=64, n_epochs=300, lr=1e-2):
    """One-hidden-layer ReLU net trained by full-batch gradient descent."""
    rng = np.random.default_rng(seed)
    n, p = xt.shape
    w1 = rng.normal(0.0, np.sqrt(2.0 / p), size=(p, hidden))
    b1 = np.zeros(hidden)
    w2 = rng.normal(0.0, np.sqrt(2.0 / hidden), size=(hidden, n_classes))
    b2 = np.zeros(n_classes)
    target = one_hot(yt, n_classes)
    for _ in range(n_epochs):
        a1 = np.maximum(xt @ w1 + b1, 0.0)
        probs = stable_softmax(a1 @ w2 + b2)
        dz2 = (probs - target) / n
        dw2 = a1.T @ dz2
        db2 = dz2.sum(axis=0)
        da1 = dz2 @ w2.T
        da1[a1 <= 0.0] = 0.0
        dw1 = xt.T @ da1
        db1 = da1.sum(axis=0)
        w2 -= lr * dw2
        b2 -= lr * db2
        w1 -= lr * dw1
        b1 -= lr * db1
    a1 = np.maximum(xs @ w1 + b1, 0.0)
    return stable_softmax(a1 @ w2 + b2)
