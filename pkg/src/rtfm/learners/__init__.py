"""Desk-scale baseline estimators used to lower-bound the achievable loss."""

from .base import DEFAULT_BASELINE_SET, LearnerKind, fit_predict, learner

__all__ = ["LearnerKind", "learner", "fit_predict", "DEFAULT_BASELINE_SET"]
