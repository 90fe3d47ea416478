#!/usr/bin/env python3
"""Desk-scale end-to-end run of the adversarial training loop.

Trains the toy kernel model against three baselines, printing the
per-epoch maximum estimated gap and weighted objective, and persists the
run directory (trial logs, snapshots, reports, manifest).

Usage:
  python scripts/run_mini_rtfm.py --seed 0 --out runs/mini --epochs 3
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO / "src"))

from rtfm.gap import ToyPredictor  # noqa: E402
from rtfm.learners import learner  # noqa: E402
from rtfm.loop import LoopConfig, run_rtfm  # noqa: E402
from rtfm.manifest import build_manifest, write_manifest  # noqa: E402
from rtfm.parallel import default_workers  # noqa: E402


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", type=str, default="runs/mini")
    parser.add_argument("--epochs", type=int, default=3)
    parser.add_argument("--n-trials", type=int, default=20)
    parser.add_argument("--n-ds", type=int, default=5)
    parser.add_argument("--n-iter", type=int, default=200)
    parser.add_argument("--batch-size", type=int, default=16)
    parser.add_argument("--lr", type=float, default=0.01)
    parser.add_argument("--workers", type=int, default=None)
    args = parser.parse_args()

    config = LoopConfig(
        n_epochs=args.epochs,
        n_iter=args.n_iter,
        batch_size=args.batch_size,
        lr=args.lr,
        n_trials=args.n_trials,
        n_ds=args.n_ds,
        c_frac=0.5,
        n_train=64,
        n_test=32,
        add_original_baseline_after_epoch=2,
        seed=args.seed,
    )
    baselines = [learner("logistic_regression"), learner("knn"), learner("random_forest")]
    run_dir = Path(args.out)
    run_dir.mkdir(parents=True, exist_ok=True)

    _, reports = run_rtfm(
        config,
        ToyPredictor(),
        baselines,
        run_dir=run_dir,
        workers=args.workers or default_workers(),
        log=print,
    )
    write_manifest(
        build_manifest(config.to_dict(), config.seed, [("search", e) for e in range(config.n_epochs + 1)], run_dir),
        run_dir,
    )

    print("\nepoch  max_gap  weighted_objective  eta")
    for r in reports:
        print(f"{r.epoch:>5}  {r.max_gap:7.4f}  {r.weighted_objective:18.4f}  {r.eta:6.3f}")
    print(f"\nrun directory: {run_dir}")


if __name__ == "__main__":
    main()
