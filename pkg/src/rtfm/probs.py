"""Class-probability matrices and the shared cross-entropy evaluator."""

from __future__ import annotations

import numpy as np

EPS_CLIP = 1e-7


def clip_and_renormalize(probs: np.ndarray, eps: float = EPS_CLIP) -> np.ndarray:
    """Force rows onto the simplex with entries in [eps, 1].

    Clip, renormalize, then clip again; the second clip perturbs row sums
    by at most ~C^2 * eps^2, far inside the 1e-9 row-sum tolerance.
    """
    p = np.clip(np.asarray(probs, dtype=np.float64), eps, 1.0)
    p = p / p.sum(axis=1, keepdims=True)
    return np.clip(p, eps, 1.0)


def validate_prob_matrix(probs: np.ndarray, eps: float = EPS_CLIP) -> None:
    assert probs.ndim == 2
    assert np.all(probs >= eps - 1e-15)
    assert np.all(probs <= 1.0)
    assert np.allclose(probs.sum(axis=1), 1.0, atol=1e-9)


def cross_entropy(probs: np.ndarray, labels) -> float:
    """Mean negative log-probability of the true labels (natural log)."""
    labels = np.asarray(labels, dtype=np.int64)
    probs = np.asarray(probs, dtype=np.float64)
    if probs.ndim != 2:
        raise ValueError("probs must be a 2-D matrix")
    if len(labels) != probs.shape[0]:
        raise ValueError(f"{len(labels)} labels for {probs.shape[0]} prediction rows")
    if len(labels) == 0:
        raise ValueError("empty label list")
    if labels.min() < 0 or labels.max() >= probs.shape[1]:
        raise ValueError("label outside [0, C)")
    clipped = clip_and_renormalize(probs)
    return float(-np.log(clipped[np.arange(len(labels)), labels]).mean())


def stable_softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax, shifted by the row max for stability."""
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def one_hot(labels, n_classes: int) -> np.ndarray:
    labels = np.asarray(labels, dtype=np.int64)
    out = np.zeros((len(labels), n_classes))
    out[np.arange(len(labels)), labels] = 1.0
    return out
