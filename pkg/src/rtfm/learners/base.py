"""Learner registry and the shared fit-then-predict entry point."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..dataset_io import stable_seed_base
from ..generator import TabularDataset
from ..preprocessing import design_matrices
from ..probs import clip_and_renormalize
from ..seeding import derive_seed
from .simple import knn_probs, logistic_regression_probs, mlp_probs
from .trees import boosted_stumps_probs, random_forest_probs

LEARNER_DEFAULTS: dict[str, dict] = {
    "logistic_regression": {"n_iters": 500, "lr": 0.1, "l2": 1e-4},
    "random_forest": {"n_trees": 100, "max_depth": 12, "min_leaf": 1},
    "boosted_stumps": {"n_rounds": 200, "lr": 0.1, "max_depth": 2, "min_leaf": 1},
    "knn": {"k": 5},
    "mlp": {"hidden": 64, "n_epochs": 300, "lr": 1e-2},
    "frozen_external": {},
}


@dataclass
class LearnerKind:
    """A baseline family tag plus hyperparameter overrides."""

    tag: str
    params: dict = field(default_factory=dict)
    name: str | None = None

    def __post_init__(self):
        if self.tag not in LEARNER_DEFAULTS:
            raise ValueError(f"unknown learner tag {self.tag!r}")
        merged = dict(LEARNER_DEFAULTS[self.tag])
        unknown = set(self.params) - set(merged) - ({"predictor"} if self.tag == "frozen_external" else set())
        if unknown:
            raise ValueError(f"unknown {self.tag} params: {sorted(unknown)}")
        merged.update(self.params)
        self.params = merged
        for key in ("n_trees", "n_rounds", "k", "n_iters", "n_epochs", "hidden", "max_depth", "min_leaf"):
            if key in self.params and self.params[key] < 1:
                raise ValueError(f"{self.tag}: {key} must be >= 1")
        for key in ("lr",):
            if key in self.params and self.params[key] <= 0:
                raise ValueError(f"{self.tag}: {key} must be positive")
        if self.name is None:
            self.name = self.tag

    def label(self) -> str:
        return self.name or self.tag


def learner(tag: str, name: str | None = None, **overrides) -> LearnerKind:
    return LearnerKind(tag, dict(overrides), name=name)


DEFAULT_BASELINE_SET = (
    "logistic_regression",
    "mlp",
    "random_forest",
    "boosted_stumps",
    "knn",
)


def default_baseline_set() -> list[LearnerKind]:
    """All five trainable baseline families at their default settings."""
    return [learner(tag) for tag in DEFAULT_BASELINE_SET]


def fit_predict(kind: LearnerKind, data: TabularDataset) -> np.ndarray:
    """Fit the learner on the train split only and return test-row class
    probabilities under the shared preprocessing contract.

    Deterministic given (kind, data): internal randomness is seeded from
    the dataset's provenance seed (or content hash) and the learner tag.
    """
    if kind.tag == "frozen_external":
        predictor = kind.params.get("predictor")
        if predictor is None:
            raise ValueError("frozen_external requires a 'predictor' param")
        return clip_and_renormalize(predictor.predict(data))

    xt, yt, xs, _ = design_matrices(data)
    n_classes = data.n_classes

    classes_present = np.unique(yt)
    if len(classes_present) == 1:
        probs = np.zeros((len(xs), n_classes))
        probs[:, classes_present[0]] = 1.0
        return clip_and_renormalize(probs)

    seed = derive_seed(stable_seed_base(data), "learner", kind.tag)
    p = kind.params
    if kind.tag == "logistic_regression":
        probs = logistic_regression_probs(xt, yt, xs, n_classes, p["n_iters"], p["lr"], p["l2"])
    elif kind.tag == "knn":
        probs = knn_probs(xt, yt, xs, n_classes, p["k"])
    elif kind.tag == "mlp":
        probs = mlp_probs(xt, yt, xs, n_classes, seed, p["hidden"], p["n_epochs"], p["lr"])
    elif kind.tag == "random_forest":
        probs = random_forest_probs(xt, yt, xs, n_classes, seed, p["n_trees"], p["max_depth"], p["min_leaf"])
    elif kind.tag == "boosted_stumps":
        probs = boosted_stumps_probs(xt, yt, xs, n_classes, p["n_rounds"], p["lr"], p["max_depth"], p["min_leaf"])
    else:  # pragma: no cover - tags validated in __post_init__
        raise ValueError(kind.tag)
    return clip_and_renormalize(probs)
