"""Entropy-constrained adversarial weighting over observed gap estimates.

The maximizer's optimal distribution over evaluated parameter points is a
softmax in the gaps, q_i proportional to exp(eta * gap_i), with the inverse
temperature eta fixed by requiring H(Q) to equal a floor H_min. H(Q(eta))
is strictly decreasing in eta for non-constant gaps, so eta is found by
bracketing plus bisection on the entropy.

Convention: eta is the public parameter throughout. Stated in terms of a
temperature lambda = 1/eta, the same entropy is strictly increasing in
lambda on (0, inf); both phrasings identify the same unique solution.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .theta import ThetaParams

ETA_UPPER_LIMIT = 1e6
DEFAULT_TOL = 1e-9


def softmax_weights(gaps, eta: float) -> np.ndarray:
    """q_i = exp(eta * gap_i) / sum_j exp(eta * gap_j), log-sum-exp stabilized."""
    gaps = np.asarray(gaps, dtype=np.float64)
    if gaps.size == 0:
        raise ValueError("empty gap list")
    if not np.all(np.isfinite(gaps)):
        raise ValueError("non-finite gaps")
    if eta < 0:
        raise ValueError("eta must be non-negative")
    z = eta * gaps
    z -= z.max()
    e = np.exp(z)
    return e / e.sum()


def entropy(q) -> float:
    """Shannon entropy in nats, with 0 * log 0 = 0."""
    q = np.asarray(q, dtype=np.float64)
    nz = q[q > 0.0]
    return float(-(nz * np.log(nz)).sum())


def _entropy_at(gaps: np.ndarray, eta: float) -> float:
    return entropy(softmax_weights(gaps, eta))


def solve_eta(gaps, h_min: float, tol: float = DEFAULT_TOL) -> float:
    """Find eta >= 0 such that the softmax weights have entropy h_min.

    Returns 0 when the gaps are constant (the uniform distribution is the
    unique softmax and satisfies any feasible floor) or when h_min equals
    the maximum entropy log(n). If the entropy cannot be driven down to
    h_min before eta exceeds a large cap, the cap is returned with a
    warning; this only happens for nearly constant gaps.
    """
    gaps = np.asarray(gaps, dtype=np.float64)
    if gaps.size == 0 or not np.all(np.isfinite(gaps)):
        raise ValueError("gaps must be a non-empty finite list")
    if tol <= 0:
        raise ValueError("tol must be positive")
    n = gaps.size
    log_n = np.log(n)
    if not 0 < h_min <= log_n:
        raise ValueError(f"h_min must be in (0, log n] = (0, {log_n:.6g}], got {h_min}")

    if np.ptp(gaps) == 0.0 or h_min == log_n:
        return 0.0

    lo, hi = 0.0, 1.0
    while _entropy_at(gaps, hi) > h_min:
        hi *= 2.0
        if hi > ETA_UPPER_LIMIT:
            warnings.warn(
                "entropy floor unreachable below the eta cap; gaps are nearly constant",
                RuntimeWarning,
            )
            return hi
    # Invariant: H(lo) >= h_min >= H(hi); entropy is continuous and strictly
    # decreasing, so bisection converges to |H - h_min| <= tol.
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        h_mid = _entropy_at(gaps, mid)
        if abs(h_mid - h_min) <= tol:
            return mid
        if h_mid > h_min:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass
class DroWeights:
    """The adversary's distribution over evaluated parameter points."""

    thetas: list[ThetaParams]
    gaps: list[float]
    eta: float
    weights: np.ndarray
    entropy: float
    h_min: float
    c_frac: float

    def validate(self) -> None:
        assert abs(self.weights.sum() - 1.0) <= 1e-12
        expected = softmax_weights(np.asarray(self.gaps), self.eta)
        assert np.allclose(self.weights, expected, rtol=1e-10, atol=1e-300)
        assert self.entropy >= self.h_min - 1e-8


def build_dro_weights(thetas, gaps, c_frac: float, tol: float = DEFAULT_TOL) -> DroWeights:
    """Solve for eta at H_min = c_frac * log(n) and assemble the weights."""
    if not 0 < c_frac < 1:
        raise ValueError("c_frac must be in (0, 1)")
    gaps = [float(g) for g in gaps]
    if len(thetas) != len(gaps):
        raise ValueError("thetas and gaps must align")
    if len(gaps) == 1:
        # A single surviving point is a point mass; the entropy floor is 0.
        return DroWeights(list(thetas), gaps, 0.0, np.ones(1), 0.0, 0.0, c_frac)
    h_min = c_frac * np.log(len(gaps))
    eta = solve_eta(gaps, h_min, tol)
    weights = softmax_weights(gaps, eta)
    return DroWeights(list(thetas), gaps, eta, weights, entropy(weights), h_min, c_frac)
