"""Sequential proposal of generator parameters to evaluate.

The surrogate is a per-dimension categorical density-ratio model in the
tree-structured Parzen estimator family: trials are split at a quantile of
the observed gaps, smoothed frequency models l (good side) and g (bad
side) are built independently per dimension, and the candidate maximizing
prod l/g among n_candidates draws from l is proposed. Every parameter is
sampled independently, matching the factorized prior of the generator
space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .theta import THETA_SUPPORT, ThetaParams, random_theta

MIN_TRIALS_FOR_TPE = 5


@dataclass(frozen=True)
class SearchStrategy:
    """Proposal policy: pure random, or the TPE density-ratio model."""

    tag: str = "tpe"
    gamma: float = 0.25
    n_candidates: int = 24
    prior_weight: float = 1.0

    def __post_init__(self):
        if self.tag not in ("tpe", "random"):
            raise ValueError(f"unknown strategy {self.tag!r}")
        if not 0 < self.gamma < 1:
            raise ValueError("gamma must be in (0, 1)")
        if self.n_candidates < 1:
            raise ValueError("n_candidates must be >= 1")
        if self.prior_weight <= 0:
            raise ValueError("prior_weight must be positive")


def _smoothed_frequencies(values: list, support: tuple, prior_weight: float) -> np.ndarray:
    counts = np.full(len(support), prior_weight, dtype=np.float64)
    index = {v: i for i, v in enumerate(support)}
    for v in values:
        counts[index[v]] += 1.0
    return counts / counts.sum()


def suggest(completed: list[tuple[ThetaParams, float]], strategy: SearchStrategy, rng: np.random.Generator) -> ThetaParams:
    """Propose the next theta given (theta, gap) pairs already evaluated.

    Falls back to a uniform draw when random search is requested or too few
    trials exist to split.
    """
    if strategy.tag == "random" or len(completed) < MIN_TRIALS_FOR_TPE:
        return random_theta(rng)

    ordered = sorted(completed, key=lambda tg: tg[1], reverse=True)
    n_good = max(1, math.ceil(strategy.gamma * len(ordered)))
    good = [t for t, _ in ordered[:n_good]]
    bad = [t for t, _ in ordered[n_good:]]

    l_models: dict[str, np.ndarray] = {}
    g_models: dict[str, np.ndarray] = {}
    for name, support in THETA_SUPPORT.items():
        l_models[name] = _smoothed_frequencies([getattr(t, name) for t in good], support, strategy.prior_weight)
        g_models[name] = _smoothed_frequencies([getattr(t, name) for t in bad], support, strategy.prior_weight)

    # Re-evaluating an already-tried point wastes a trial in a discrete
    # space, so unseen candidates win ties with seen ones at any score.
    seen = {t for t, _ in completed}
    best_score = -np.inf
    best_theta = None
    best_seen_score = -np.inf
    best_seen_theta = None
    for _ in range(strategy.n_candidates):
        fields = {}
        score = 0.0
        for name, support in THETA_SUPPORT.items():
            i = int(rng.choice(len(support), p=l_models[name]))
            fields[name] = support[i]
            score += np.log(l_models[name][i]) - np.log(g_models[name][i])
        theta = ThetaParams(**fields)
        if theta in seen:
            if score > best_seen_score:
                best_seen_score = score
                best_seen_theta = theta
        elif score > best_score:
            best_score = score
            best_theta = theta
    return best_theta if best_theta is not None else best_seen_theta
