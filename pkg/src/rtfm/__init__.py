"""Adversarial max-min training engine for in-context tabular predictors.

The engine searches a discrete space of synthetic-data-generator parameters
for regions where a predictor underperforms strong baselines (the optimality
gap), reweights those regions with an entropy-constrained softmax
distribution, and trains the predictor against datasets drawn from the
reweighted mixture.
"""

__version__ = "0.1.0"
