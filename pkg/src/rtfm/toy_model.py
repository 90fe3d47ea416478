"""A 3-parameter kernel classifier standing in for a large in-context model.

For a test point x and class c the model scores

    score_c = exp(s) + sum_{j in train, y_j = c} exp(-exp(beta) * |x - x_j|^2 / p)

and predicts softmax_c(exp(tau) * log score_c). All three parameters live
in log domain so bandwidth, smoothing, and temperature stay positive. The
loss is the mean test cross-entropy over a batch of datasets, and the
gradient is computed analytically (no autodiff), which keeps finite
difference checks exact and training steps cheap.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .generator import TabularDataset
from .preprocessing import design_matrices
from .probs import clip_and_renormalize, one_hot

_EXP_CAP = 690.0  # exp() stays finite below this


@dataclass(frozen=True)
class ToyWeights:
    """Log-domain parameters: bandwidth, smoothing, temperature."""

    beta: float = 0.0
    s: float = 0.0
    tau: float = 0.0

    def __post_init__(self):
        if not all(np.isfinite([self.beta, self.s, self.tau])):
            raise ValueError("weights must be finite")

    def as_array(self) -> np.ndarray:
        return np.array([self.beta, self.s, self.tau])

    def to_dict(self) -> dict:
        return {"beta": self.beta, "s": self.s, "tau": self.tau}

    @classmethod
    def from_dict(cls, d: dict) -> "ToyWeights":
        return cls(float(d["beta"]), float(d["s"]), float(d["tau"]))


def _scores_and_parts(w: ToyWeights, data: TabularDataset):
    """Shared forward pass; returns (scores, weighted-distance sums, labels)."""
    xt, yt, xs, ys = design_matrices(data)
    p = max(1, xt.shape[1])
    b = np.exp(min(w.beta, _EXP_CAP))
    smooth = np.exp(min(w.s, _EXP_CAP))
    d2n = np.maximum(
        (xs * xs).sum(axis=1)[:, None] + (xt * xt).sum(axis=1)[None, :] - 2.0 * xs @ xt.T,
        0.0,
    ) / p
    kernel = np.exp(-b * d2n)
    n_classes = data.n_classes
    scores = np.full((len(xs), n_classes), smooth)
    weighted = np.zeros((len(xs), n_classes))
    for c in range(n_classes):
        members = yt == c
        if members.any():
            scores[:, c] += kernel[:, members].sum(axis=1)
            weighted[:, c] = (kernel[:, members] * d2n[:, members]).sum(axis=1)
    return scores, weighted, ys, b, smooth


def predict(w: ToyWeights, data: TabularDataset) -> np.ndarray:
    """Test-row class probabilities under the probability-matrix contract."""
    scores, _, _, _, _ = _scores_and_parts(w, data)
    temp = np.exp(min(w.tau, _EXP_CAP))
    logits = temp * np.log(scores)
    logits -= logits.max(axis=1, keepdims=True)
    e = np.exp(logits)
    return clip_and_renormalize(e / e.sum(axis=1, keepdims=True))


def _dataset_loss_grad(w: ToyWeights, data: TabularDataset) -> tuple[float, np.ndarray]:
    scores, weighted, ys, b, smooth = _scores_and_parts(w, data)
    temp = np.exp(min(w.tau, _EXP_CAP))
    log_scores = np.log(scores)
    z = temp * log_scores
    z_shift = z - z.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(z_shift).sum(axis=1))
    n_test = len(ys)
    rows = np.arange(n_test)
    loss = float((log_norm - z_shift[rows, ys]).mean())

    probs = np.exp(z_shift) / np.exp(z_shift).sum(axis=1, keepdims=True)
    dz = (probs - one_hot(ys, scores.shape[1])) / n_test
    g_tau = float((dz * z).sum())
    dscore = dz * (temp / scores)
    g_s = float((dscore * smooth).sum())
    g_beta = float((dscore * (-b) * weighted).sum())
    return loss, np.array([g_beta, g_s, g_tau])


def loss_and_grad(w: ToyWeights, batch: list[TabularDataset]) -> tuple[float, np.ndarray]:
    """Mean test cross-entropy over the batch and its exact gradient with
    respect to (beta, s, tau)."""
    if not batch:
        raise ValueError("empty batch")
    total_loss = 0.0
    total_grad = np.zeros(3)
    for data in batch:
        loss, grad = _dataset_loss_grad(w, data)
        total_loss += loss
        total_grad += grad
    k = len(batch)
    return total_loss / k, total_grad / k


def sgd_step(w: ToyWeights, grad: np.ndarray, lr: float) -> ToyWeights:
    if lr <= 0:
        raise ValueError("lr must be positive")
    grad = np.asarray(grad, dtype=np.float64)
    return ToyWeights(w.beta - lr * grad[0], w.s - lr * grad[1], w.tau - lr * grad[2])
