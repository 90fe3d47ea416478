"""The maximization stage: search the parameter space for large gaps.

One trial = propose a theta, estimate its gap over n_ds fresh datasets,
record the result. The model is frozen throughout; trials whose dataset
draws mostly fail are marked failed and excluded from later weighting.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from pathlib import Path

import json

import numpy as np

from .canonical import canonical_dumps
from .gap import GapEstimate, Predictor, ThetaUnusableError, estimate_gap
from .learners import LearnerKind
from .seeding import derive_seed
from .theta import ThetaParams
from .tpe import SearchStrategy, suggest


@dataclass
class Trial:
    theta: ThetaParams
    gap: float | None
    per_dataset_gaps: list[float]
    failed: bool
    timestamp: float = 0.0

    def to_record(self, index: int) -> dict:
        return {
            "trial": index,
            "theta": self.theta.to_dict(),
            "gap": self.gap,
            "per_dataset_gaps": self.per_dataset_gaps,
            "failed": self.failed,
        }

    @classmethod
    def from_record(cls, rec: dict) -> "Trial":
        return cls(
            theta=ThetaParams.from_dict(rec["theta"]),
            gap=rec["gap"],
            per_dataset_gaps=list(rec["per_dataset_gaps"]),
            failed=bool(rec["failed"]),
        )


@dataclass
class TrialLog:
    trials: list[Trial] = field(default_factory=list)

    def surviving(self) -> list[Trial]:
        return [t for t in self.trials if not t.failed]

    def completed_pairs(self) -> list[tuple[ThetaParams, float]]:
        return [(t.theta, t.gap) for t in self.surviving()]

    def best_gap(self) -> float:
        gaps = [t.gap for t in self.surviving()]
        return max(gaps) if gaps else float("nan")

    def to_jsonl(self) -> str:
        return "".join(canonical_dumps(t.to_record(i)) + "\n" for i, t in enumerate(self.trials))

    def save(self, path) -> None:
        Path(path).write_text(self.to_jsonl())

    @classmethod
    def load(cls, path) -> "TrialLog":
        trials = []
        for line in Path(path).read_text().splitlines():
            if line.strip():
                trials.append(Trial.from_record(json.loads(line)))
        return cls(trials)


def search_loop(objective, n_trials: int, strategy: SearchStrategy, rng: np.random.Generator) -> TrialLog:
    """Ask/tell loop: ``objective(theta, trial_index) -> Trial``."""
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    log = TrialLog()
    for i in range(n_trials):
        theta = suggest(log.completed_pairs(), strategy, rng)
        trial = objective(theta, i)
        trial.timestamp = time.time()
        log.trials.append(trial)
    return log


def parameter_search(
    model: Predictor,
    baselines: list[LearnerKind],
    n_trials: int,
    n_ds: int,
    strategy: SearchStrategy,
    seed: int,
    n_train: int = 256,
    n_test: int = 128,
    workers: int = 1,
) -> TrialLog:
    """Run the full gap-maximization search with a frozen model.

    A trial is failed (and later excluded from weighting) when fewer than
    max(1, n_ds / 2) of its dataset draws succeed.
    """
    if n_ds < 1:
        raise ValueError("n_ds must be >= 1")
    min_effective = max(1.0, n_ds / 2.0)

    def objective(theta: ThetaParams, index: int) -> Trial:
        trial_seed = derive_seed(seed, "trial", index)
        try:
            est: GapEstimate = estimate_gap(model, baselines, theta, n_ds, n_train, n_test, trial_seed, workers)
        except ThetaUnusableError:
            return Trial(theta=theta, gap=None, per_dataset_gaps=[], failed=True)
        per_ds = [m - b for m, b in zip(est.model_losses, est.best_baseline_losses)]
        failed = est.n_effective < min_effective
        return Trial(theta=theta, gap=est.gap, per_dataset_gaps=per_ds, failed=failed)

    rng = np.random.default_rng(derive_seed(seed, "suggest"))
    return search_loop(objective, n_trials, strategy, rng)
