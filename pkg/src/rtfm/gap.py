"""Optimality-gap estimation: model loss minus the best baseline loss.

The conditional-entropy term of the idealized objective is never computed;
the minimum cross-entropy over the baseline battery stands in for it,
giving a lower bound on the true gap. Per-dataset seeds are hashed from
(trial seed, dataset index) so evaluation order cannot change results.
"""

from __future__ import annotations

import abc
from dataclasses import dataclass

import numpy as np

from .canonical import content_hash
from .generator import GeneratorError, TabularDataset, generate_dataset
from .learners import LearnerKind, fit_predict
from .parallel import parallel_map
from .probs import clip_and_renormalize, cross_entropy
from .seeding import derive_seed
from .theta import ThetaParams
from .toy_model import ToyWeights, loss_and_grad, predict, sgd_step


class ThetaUnusableError(RuntimeError):
    """Every dataset drawn for a theta came back degenerate."""


class Predictor(abc.ABC):
    """The model under adversarial training, seen through its predictions.

    Implementations must keep ``predict`` pure: parameter search freezes
    the model and relies on prediction not mutating any state.
    """

    description: str = "predictor"

    @abc.abstractmethod
    def predict(self, data: TabularDataset) -> np.ndarray:
        """Test-row class probabilities (rows on the simplex)."""

    def train_step(self, batch: list[TabularDataset], lr: float) -> float:
        raise NotImplementedError(f"{self.description} is not trainable")

    def snapshot(self) -> dict:
        raise NotImplementedError(f"{self.description} has no snapshot support")

    def restore(self, snap: dict) -> None:
        raise NotImplementedError(f"{self.description} has no snapshot support")

    def frozen_copy(self) -> "Predictor":
        raise NotImplementedError(f"{self.description} cannot be frozen in-process")

    def frozen_from_snapshot(self, snap: dict) -> "Predictor":
        """Prediction-only predictor pinned to an earlier snapshot."""
        raise NotImplementedError(f"{self.description} cannot rebuild from snapshots")

    def state_hash(self) -> str:
        return content_hash(self.snapshot())


class ToyPredictor(Predictor):
    """Trainable wrapper around the 3-parameter kernel model."""

    description = "toy"

    def __init__(self, weights: ToyWeights | None = None):
        self.weights = weights or ToyWeights()

    def predict(self, data: TabularDataset) -> np.ndarray:
        return predict(self.weights, data)

    def train_step(self, batch: list[TabularDataset], lr: float) -> float:
        loss, grad = loss_and_grad(self.weights, batch)
        self.weights = sgd_step(self.weights, grad, lr)
        return loss

    def snapshot(self) -> dict:
        return self.weights.to_dict()

    def restore(self, snap: dict) -> None:
        self.weights = ToyWeights.from_dict(snap)

    def frozen_copy(self) -> "Predictor":
        return FrozenPredictor(ToyPredictor(self.weights), name="toy-frozen")

    def frozen_from_snapshot(self, snap: dict) -> "Predictor":
        return FrozenPredictor(ToyPredictor(ToyWeights.from_dict(snap)), name="toy-frozen")


class FrequencyPredictor(Predictor):
    """Predicts the train-split label frequencies for every test row.

    Context-only, feature-blind; used as a protocol reference model and in
    tests where closed-form expected losses are needed.
    """

    description = "freq"

    def predict(self, data: TabularDataset) -> np.ndarray:
        y_train = data.y[data.train_indices]
        counts = np.bincount(y_train, minlength=data.n_classes).astype(np.float64)
        freqs = counts / counts.sum()
        return clip_and_renormalize(np.tile(freqs, (len(data.test_indices), 1)))

    def train_step(self, batch: list[TabularDataset], lr: float) -> float:
        # No parameters to update; reports the batch loss of the fixed model.
        losses = [cross_entropy(self.predict(ds), ds.y[ds.test_indices]) for ds in batch]
        return float(np.mean(losses))

    def snapshot(self) -> dict:
        return {"kind": "freq"}

    def restore(self, snap: dict) -> None:
        pass

    def frozen_copy(self) -> "Predictor":
        return FrozenPredictor(FrequencyPredictor(), name="freq-frozen")

    def frozen_from_snapshot(self, snap: dict) -> "Predictor":
        return self.frozen_copy()


class FrozenPredictor(Predictor):
    """Prediction-only view of another predictor (used when the original
    model joins the baseline set)."""

    def __init__(self, inner: Predictor, name: str = "frozen"):
        self._inner = inner
        self.description = name

    def predict(self, data: TabularDataset) -> np.ndarray:
        return self._inner.predict(data)

    def snapshot(self) -> dict:
        return self._inner.snapshot()


@dataclass
class GapEstimate:
    """Monte Carlo lower bound on the optimality gap at one theta."""

    theta: ThetaParams
    gap: float
    model_losses: list[float]
    best_baseline_losses: list[float]
    n_effective: int

    def validate(self) -> None:
        diffs = np.asarray(self.model_losses) - np.asarray(self.best_baseline_losses)
        assert self.n_effective == len(self.model_losses) == len(self.best_baseline_losses)
        assert abs(self.gap - diffs.mean()) <= 1e-12


def estimate_gap(
    model: Predictor,
    baselines: list[LearnerKind],
    theta: ThetaParams,
    n_ds: int,
    n_train: int,
    n_test: int,
    seed: int,
    workers: int = 1,
) -> GapEstimate:
    """Sample n_ds datasets from theta's prior and average the per-dataset
    excess of the model's test cross-entropy over the best baseline's.

    Degenerate generator draws are skipped; if every draw fails the theta
    is unusable. Model and baselines score the identical split of each
    dataset, and each (dataset, learner) evaluation is an independent job.
    """
    if n_ds < 1:
        raise ValueError("n_ds must be >= 1")
    if not baselines:
        raise ValueError("baselines must be non-empty")

    def _generate(j: int) -> TabularDataset | None:
        try:
            return generate_dataset(theta, derive_seed(seed, "dataset", j), n_train, n_test)
        except GeneratorError:
            return None

    datasets = parallel_map(_generate, range(n_ds), workers)
    live = [(j, ds) for j, ds in enumerate(datasets) if ds is not None]
    if not live:
        raise ThetaUnusableError(f"theta-unusable: all {n_ds} datasets degenerate")

    jobs = []
    for j, ds in live:
        y_test = ds.y[ds.test_indices]
        jobs.append((j, "model", lambda ds=ds, y=y_test: cross_entropy(model.predict(ds), y)))
        for k, kind in enumerate(baselines):
            jobs.append((j, k, lambda kind=kind, ds=ds, y=y_test: cross_entropy(fit_predict(kind, ds), y)))

    results = parallel_map(lambda job: (job[0], job[1], job[2]()), jobs, workers)
    by_key = {(j, which): loss for j, which, loss in results}

    model_losses, best_losses = [], []
    for j, _ in live:
        model_losses.append(by_key[(j, "model")])
        best_losses.append(min(by_key[(j, k)] for k in range(len(baselines))))

    diffs = np.asarray(model_losses) - np.asarray(best_losses)
    return GapEstimate(
        theta=theta,
        gap=float(diffs.mean()),
        model_losses=model_losses,
        best_baseline_losses=best_losses,
        n_effective=len(live),
    )
