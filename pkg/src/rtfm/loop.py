"""Alternating max-min training: search for hard regions, reweight, train.

Each round freezes the model and searches the generator-parameter space
for large optimality gaps, solves the entropy-constrained softmax weights
over the surviving trials, then trains the model on batches whose
datasets are drawn from thetas sampled under those weights. After a
configured number of rounds, a frozen snapshot of the initial model joins
the baseline set so the adversary can also surface regions where training
made things worse.
"""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .bridge import BridgeError, BridgePredictor
from .canonical import canonical_dumps
from .dro import DroWeights, build_dro_weights
from .gap import Predictor
from .generator import GeneratorError, TabularDataset, generate_dataset
from .learners import LearnerKind, learner
from .parallel import parallel_map
from .search import TrialLog, parameter_search
from .seeding import derive_seed, rng_for
from .tpe import SearchStrategy

DEFAULT_LR_TOY = 5e-2
DEFAULT_LR_BRIDGE = 1e-5
MAX_BATCH_SLOT_RETRIES = 50


class LoopError(RuntimeError):
    pass


@dataclass
class LoopConfig:
    """Resolved knobs of one max-min run (JSON round-trippable)."""

    n_epochs: int = 30
    n_iter: int = 3000
    batch_size: int = 64
    lr: float | None = None  # resolved per model kind when unset
    n_trials: int = 100
    n_ds: int = 20
    c_frac: float = 0.5
    n_train: int = 256
    n_test: int = 128
    add_original_baseline_after_epoch: int = 5
    seed: int = 0

    def __post_init__(self):
        counts = {
            "n_iter": self.n_iter,
            "batch_size": self.batch_size,
            "n_trials": self.n_trials,
            "n_ds": self.n_ds,
            "n_train": self.n_train,
            "n_test": self.n_test,
            "add_original_baseline_after_epoch": self.add_original_baseline_after_epoch,
        }
        for name, v in counts.items():
            if v < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.n_epochs < 0:
            raise ValueError("n_epochs must be >= 0")
        if not 0 < self.c_frac < 1:
            raise ValueError("c_frac must be in (0, 1)")
        if self.lr is not None and self.lr <= 0:
            raise ValueError("lr must be positive")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "LoopConfig":
        known = {f for f in cls.__dataclass_fields__}
        return cls(**{k: v for k, v in d.items() if k in known})

    def resolved_lr(self, model: Predictor) -> float:
        if self.lr is not None:
            return self.lr
        return DEFAULT_LR_BRIDGE if isinstance(model, BridgePredictor) else DEFAULT_LR_TOY


@dataclass
class EpochReport:
    """Post-epoch summary: the search's best gap and the weighted objective."""

    epoch: int
    max_gap: float
    weighted_objective: float
    eta: float
    wall_time: float

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "EpochReport":
        return cls(**{k: d[k] for k in ("epoch", "max_gap", "weighted_objective", "eta", "wall_time")})


def weights_from_log(log: TrialLog, c_frac: float) -> DroWeights:
    """Softmax weights over the surviving trials of one search."""
    surviving = log.surviving()
    if not surviving:
        raise LoopError("no surviving trials; parameter space entirely degenerate")
    return build_dro_weights([t.theta for t in surviving], [t.gap for t in surviving], c_frac)


def sample_theta_indices(q: DroWeights, n: int, rng: np.random.Generator) -> np.ndarray:
    return rng.choice(len(q.weights), size=n, p=q.weights)


def sample_training_batch(q: DroWeights, config: LoopConfig, rng: np.random.Generator, workers: int = 1) -> list[TabularDataset]:
    """Draw batch_size datasets, each from an independently Q-sampled theta.

    Thetas whose generator draws come back degenerate are resampled a
    bounded number of times. Draws are made sequentially from ``rng`` so
    the batch is deterministic; generation itself may run in parallel.
    """
    slots: list[TabularDataset | None] = [None] * config.batch_size
    pending = list(range(config.batch_size))
    for _ in range(MAX_BATCH_SLOT_RETRIES):
        if not pending:
            break
        draws = []
        for slot in pending:
            i = int(rng.choice(len(q.weights), p=q.weights))
            ds_seed = int(rng.integers(1 << 63))
            draws.append((slot, q.thetas[i], ds_seed))

        def _gen(draw):
            slot, theta, ds_seed = draw
            try:
                return slot, generate_dataset(theta, ds_seed, config.n_train, config.n_test)
            except GeneratorError:
                return slot, None

        results = parallel_map(_gen, draws, workers)
        pending = []
        for slot, ds in results:
            if ds is None:
                pending.append(slot)
            else:
                slots[slot] = ds
    if pending:
        raise GeneratorError(f"batch slots {pending} still degenerate after {MAX_BATCH_SLOT_RETRIES} theta resamples")
    return slots  # type: ignore[return-value]


class _RunDir:
    """Run-directory layout and persistence helpers."""

    def __init__(self, root):
        self.root = Path(root)
        (self.root / "snapshots").mkdir(parents=True, exist_ok=True)

    def trial_log_path(self, epoch: int) -> Path:
        return self.root / f"trials_epoch_{epoch:03d}.jsonl"

    def snapshot_path(self, epoch: int) -> Path:
        return self.root / "snapshots" / f"epoch_{epoch:03d}.json"

    def write_snapshot(self, epoch: int, snap: dict, step: int) -> None:
        payload = dict(snap)
        payload["step"] = step
        self.snapshot_path(epoch).write_text(canonical_dumps(payload) + "\n")

    def read_snapshot(self, epoch: int) -> dict:
        payload = json.loads(self.snapshot_path(epoch).read_text())
        payload.pop("step", None)
        return payload

    def write_state(self, state: dict) -> None:
        (self.root / "state.json").write_text(canonical_dumps(state) + "\n")

    def read_state(self) -> dict | None:
        path = self.root / "state.json"
        return json.loads(path.read_text()) if path.exists() else None

    def append_report(self, report: EpochReport) -> None:
        with open(self.root / "reports.jsonl", "a") as fh:
            fh.write(canonical_dumps(report.to_dict()) + "\n")

    def write_config(self, config: LoopConfig) -> None:
        (self.root / "config.json").write_text(canonical_dumps(config.to_dict()) + "\n")


def run_rtfm(
    config: LoopConfig,
    model: Predictor,
    baselines: list[LearnerKind],
    strategy: SearchStrategy | None = None,
    run_dir=None,
    workers: int = 1,
    resume: bool = False,
    log=None,
) -> tuple[Predictor, list[EpochReport]]:
    """Run the max-min loop and return the trained model plus per-epoch
    reports (empty when n_epochs = 0).

    With a run directory, every stage is persisted (trial logs, model
    snapshots, reports, state) and an interrupted run restarted with
    ``resume=True`` reproduces the continuation bit-for-bit: all seeds are
    pure functions of (config.seed, stage, index).
    """
    if config.n_epochs == 0:
        return model, []
    strategy = strategy or SearchStrategy()
    lr = config.resolved_lr(model)
    rd = _RunDir(run_dir) if run_dir is not None else None
    say = log or (lambda msg: None)

    def run_search(epoch: int, active_baselines: list[LearnerKind]) -> TrialLog:
        tl = parameter_search(
            model,
            active_baselines,
            config.n_trials,
            config.n_ds,
            strategy,
            seed=derive_seed(config.seed, "search", epoch),
            n_train=config.n_train,
            n_test=config.n_test,
            workers=workers,
        )
        if rd:
            tl.save(rd.trial_log_path(epoch))
        return tl

    baselines_live = list(baselines)
    reports: list[EpochReport] = []
    state = rd.read_state() if (rd and resume) else None

    if state is not None:
        completed = int(state["completed_epoch"])
        baseline_added = bool(state["baseline_added"])
        original_snapshot = state["original_snapshot"]
        model.restore(rd.read_snapshot(completed))
        trial_log = TrialLog.load(rd.trial_log_path(completed))
        original = model.frozen_from_snapshot(original_snapshot)
        if baseline_added:
            baselines_live.append(learner("frozen_external", predictor=original, name="original-model"))
        say(f"resumed after epoch {completed}")
    else:
        completed = 0
        baseline_added = False
        original_snapshot = model.snapshot()
        original = model.frozen_from_snapshot(original_snapshot)
        if rd:
            rd.write_config(config)
            rd.write_snapshot(0, model.snapshot(), step=0)
        trial_log = run_search(0, baselines_live)
        say(f"initial search: max gap {trial_log.best_gap():.4f}")
        if rd:
            rd.write_state(
                {"completed_epoch": 0, "baseline_added": False, "original_snapshot": original_snapshot}
            )

    q = weights_from_log(trial_log, config.c_frac)

    for epoch in range(completed + 1, config.n_epochs + 1):
        t0 = time.time()
        try:
            for step in range(1, config.n_iter + 1):
                rng = rng_for(config.seed, "train", epoch, step)
                batch = sample_training_batch(q, config, rng, workers)
                model.train_step(batch, lr)

            if rd:
                rd.write_snapshot(epoch, model.snapshot(), step=epoch * config.n_iter)
            if epoch >= config.add_original_baseline_after_epoch and not baseline_added:
                baselines_live.append(learner("frozen_external", predictor=original, name="original-model"))
                baseline_added = True
                say(f"epoch {epoch}: original model joined the baseline set")

            trial_log = run_search(epoch, baselines_live)
        except BridgeError as err:
            raise LoopError(
                f"bridge failure during epoch {epoch}; rerun with resume=True to continue from epoch {completed}"
            ) from err
        q = weights_from_log(trial_log, config.c_frac)
        report = EpochReport(
            epoch=epoch,
            max_gap=trial_log.best_gap(),
            weighted_objective=float(np.dot(q.weights, q.gaps)),
            eta=q.eta,
            wall_time=time.time() - t0,
        )
        reports.append(report)
        say(
            f"epoch {epoch}: max gap {report.max_gap:.4f}, "
            f"weighted objective {report.weighted_objective:.4f}, eta {report.eta:.3f}"
        )
        if rd:
            rd.append_report(report)
            rd.write_state(
                {"completed_epoch": epoch, "baseline_added": baseline_added, "original_snapshot": original_snapshot}
            )
        completed = epoch

    return model, reports
