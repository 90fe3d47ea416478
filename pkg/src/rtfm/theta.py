"""The discrete generator-parameter space searched by the adversary.

A point in the space fixes the means of the truncated-normal sampling
distributions for the numeric generator hyperparameters and the preferred
choice for the categorical ones. MLP width, depth, and input count are
coupled into five joint size settings rather than varied independently.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

# (hidden size, num layers, num inputs) means, from smallest to largest net.
MLP_SIZES: tuple[tuple[int, int, int], ...] = (
    (5, 3, 2),
    (10, 5, 3),
    (32, 8, 3),
    (64, 10, 8),
    (128, 12, 13),
)

NUM_FEATURE_CHOICES: tuple[int, ...] = (2, 25, 50, 100, 150, 200)
NUM_CLASS_CHOICES: tuple[int, ...] = (2, 4, 6, 8, 10)
RATIO_CHOICES: tuple[float, ...] = tuple(round(0.1 * i, 1) for i in range(11))
ACTIVATIONS: tuple[str, ...] = ("relu", "elu", "identity", "tanh")
INPUT_DISTRIBUTIONS: tuple[str, ...] = ("exponential", "uniform", "normal")

# Dimension name -> admissible values, in declaration order.
THETA_SUPPORT: dict[str, tuple] = {
    "mlp_size_index": tuple(range(len(MLP_SIZES))),
    "mu_num_features": NUM_FEATURE_CHOICES,
    "mu_num_classes": NUM_CLASS_CHOICES,
    "mu_cat_ratio": RATIO_CHOICES,
    "mu_ordered_cat_ratio": RATIO_CHOICES,
    "mu_missing_ratio": RATIO_CHOICES,
    "activation": ACTIVATIONS,
    "input_distribution": INPUT_DISTRIBUTIONS,
}


@dataclass(frozen=True)
class ThetaParams:
    """One point of the discrete generator-parameter space."""

    mlp_size_index: int
    mu_num_features: int
    mu_num_classes: int
    mu_cat_ratio: float
    mu_ordered_cat_ratio: float
    mu_missing_ratio: float
    activation: str
    input_distribution: str

    def __post_init__(self):
        for name, support in THETA_SUPPORT.items():
            value = getattr(self, name)
            if value not in support:
                raise ValueError(f"{name}={value!r} not in support {support}")

    @property
    def mlp_size(self) -> tuple[int, int, int]:
        """Coupled (hidden size, num layers, num inputs) means."""
        return MLP_SIZES[self.mlp_size_index]

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_dict(cls, d: dict) -> "ThetaParams":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown theta fields: {sorted(unknown)}")
        missing = known - set(d)
        if missing:
            raise ValueError(f"missing theta fields: {sorted(missing)}")
        d = dict(d)
        for name in ("mu_cat_ratio", "mu_ordered_cat_ratio", "mu_missing_ratio"):
            d[name] = round(float(d[name]), 1)
        return cls(**d)


def random_theta(rng: np.random.Generator) -> ThetaParams:
    """Uniform draw over the full discrete space."""
    values = {name: support[rng.integers(len(support))] for name, support in THETA_SUPPORT.items()}
    return ThetaParams(**values)


def theta_space_size() -> int:
    size = 1
    for support in THETA_SUPPORT.values():
        size *= len(support)
    return size
