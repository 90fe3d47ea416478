"""Unified command-line entry point.

Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.
Global flags --seed / --workers / --config apply to every subcommand;
RTFM_WORKERS is the environment fallback for --workers.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .bridge import BridgeClient, BridgePredictor, connect_tcp, serve
from .canonical import canonical_dumps
from .dataset_io import export_dataset, load_dataset
from .dro import build_dro_weights
from .gap import FrequencyPredictor, Predictor, ToyPredictor
from .generator import generate_dataset
from .learners import LearnerKind, fit_predict, learner
from .learners.base import DEFAULT_BASELINE_SET
from .loop import LoopConfig, run_rtfm
from .manifest import build_manifest, write_manifest
from .metrics import ScoreTable, auc, auc_ovo, summarize
from .parallel import default_workers
from .search import parameter_search
from .seeding import derive_seed
from .theta import ThetaParams
from .toy_model import ToyWeights
from .tpe import SearchStrategy


class UsageError(ValueError):
    """Bad flags or config; maps to exit code 2."""


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=0, help="root seed (default 0)")
    parser.add_argument("--workers", type=int, default=None, help="worker pool size (env RTFM_WORKERS, then cores)")
    parser.add_argument("--config", type=str, default=None, help="JSON config file; flags win over config values")


def _load_config_file(path: str | None) -> dict:
    if not path:
        return {}
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError as err:
        raise UsageError(f"config file not found: {path}") from err
    except json.JSONDecodeError as err:
        raise UsageError(f"config file is not valid JSON: {err}") from err


def _parse_theta(spec: str) -> ThetaParams:
    text = Path(spec[1:]).read_text() if spec.startswith("@") else spec
    try:
        return ThetaParams.from_dict(json.loads(text))
    except (json.JSONDecodeError, ValueError) as err:
        raise UsageError(f"bad --theta: {err}") from err


def resolve_model(spec: str) -> Predictor:
    """Model specs: toy | toy:CKPT.json | freq | bridge:HOST:PORT."""
    if spec == "toy":
        return ToyPredictor()
    if spec.startswith("toy:"):
        ckpt = json.loads(Path(spec[4:]).read_text())
        return ToyPredictor(ToyWeights.from_dict(ckpt))
    if spec == "freq":
        return FrequencyPredictor()
    if spec.startswith("bridge:"):
        try:
            host, port = spec[7:].rsplit(":", 1)
            client = BridgeClient(connect_tcp(host, int(port)))
        except (ValueError, OSError) as err:
            raise UsageError(f"bad bridge address {spec!r}: {err}") from err
        client.ping()
        return BridgePredictor(client)
    raise UsageError(f"unknown model spec {spec!r}")


def _resolve_baselines(names: str | None, config: dict) -> list[LearnerKind]:
    overrides = {entry["tag"]: {k: v for k, v in entry.items() if k != "tag"} for entry in config.get("baselines", [])}
    tags = [t.strip() for t in names.split(",")] if names else list(overrides) or list(DEFAULT_BASELINE_SET)
    try:
        return [learner(tag, **overrides.get(tag, {})) for tag in tags]
    except ValueError as err:
        raise UsageError(str(err)) from err


def _strategy_from(args, config: dict) -> SearchStrategy:
    fields = dict(config.get("strategy", {}))
    if getattr(args, "strategy", None):
        fields["tag"] = args.strategy
    try:
        return SearchStrategy(**fields)
    except (TypeError, ValueError) as err:
        raise UsageError(f"bad strategy: {err}") from err


def _cmd_generate(args) -> int:
    config = _load_config_file(args.config)
    theta = _parse_theta(args.theta)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for i in range(args.count):
        ds = generate_dataset(theta, derive_seed(args.seed, "generate", i), args.n_train, args.n_test)
        export_dataset(ds, out_dir, f"ds_{i:04d}")
    manifest = build_manifest(
        {
            "command": "generate",
            "theta": theta.to_dict(),
            "count": args.count,
            "n_train": args.n_train,
            "n_test": args.n_test,
            **config,
        },
        args.seed,
        [("generate", i) for i in range(args.count)],
        out_dir,
    )
    write_manifest(manifest, out_dir)
    print(f"wrote {args.count} datasets to {out_dir}")
    return 0


def _cmd_search(args) -> int:
    config = _load_config_file(args.config)
    model = resolve_model(args.model)
    baselines = _resolve_baselines(args.baselines, config)
    strategy = _strategy_from(args, config)
    workers = args.workers or default_workers()
    log = parameter_search(
        model,
        baselines,
        args.n_trials,
        args.n_ds,
        strategy,
        seed=args.seed,
        n_train=args.n_train,
        n_test=args.n_test,
        workers=workers,
    )
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    log.save(out)
    best = log.best_gap()
    print(f"{len(log.trials)} trials -> {out} (max gap {best:.6f})")
    return 0


def _cmd_dro_solve(args) -> int:
    try:
        gaps = [float(v) for v in args.gaps.split(",") if v.strip() != ""]
    except ValueError as err:
        raise UsageError(f"bad --gaps: {err}") from err
    if not gaps:
        raise UsageError("--gaps must list at least one value")
    if not 0 < args.c < 1:
        raise UsageError("--c must be in (0, 1)")
    q = build_dro_weights([None] * len(gaps), gaps, args.c, tol=args.tol)
    print(
        canonical_dumps(
            {
                "eta": q.eta,
                "weights": [float(w) for w in q.weights],
                "entropy": q.entropy,
                "h_min": q.h_min,
                "n": len(gaps),
            }
        )
    )
    return 0


def _cmd_train(args) -> int:
    config_dict = _load_config_file(args.config)
    flag_overrides = {
        name: getattr(args, name)
        for name in (
            "n_epochs",
            "n_iter",
            "batch_size",
            "lr",
            "n_trials",
            "n_ds",
            "c_frac",
            "n_train",
            "n_test",
            "add_original_baseline_after_epoch",
        )
        if getattr(args, name) is not None
    }
    known_keys = set(LoopConfig.__dataclass_fields__) | {"baselines", "strategy"}
    unknown = set(config_dict) - known_keys
    if unknown:
        raise UsageError(f"unknown train config keys: {sorted(unknown)}")
    merged = {**config_dict, **flag_overrides, "seed": args.seed}
    try:
        loop_config = LoopConfig.from_dict(merged)
    except (TypeError, ValueError) as err:
        raise UsageError(f"bad train config: {err}") from err
    model = resolve_model(args.model)
    baselines = _resolve_baselines(args.baselines, config_dict)
    strategy = _strategy_from(args, config_dict)
    workers = args.workers or default_workers()
    run_dir = Path(args.out)
    run_dir.mkdir(parents=True, exist_ok=True)

    _, reports = run_rtfm(
        loop_config,
        model,
        baselines,
        strategy=strategy,
        run_dir=run_dir,
        workers=workers,
        resume=args.resume,
        log=lambda msg: print(msg, flush=True),
    )
    manifest = build_manifest(
        {"command": "train", **loop_config.to_dict()},
        loop_config.seed,
        [("search", e) for e in range(loop_config.n_epochs + 1)],
        run_dir,
    )
    write_manifest(manifest, run_dir)
    print(f"run complete: {len(reports)} epoch reports in {run_dir}")
    return 0


def _model_or_learner_scores(spec: str, datasets) -> list[float]:
    known_tags = set(DEFAULT_BASELINE_SET)
    scores = []
    if spec in known_tags:
        kind = learner(spec)
        predict = lambda ds: fit_predict(kind, ds)
    else:
        model = resolve_model(spec)
        predict = model.predict
    for ds in datasets:
        probs = predict(ds)
        y_test = ds.y[ds.test_indices]
        if ds.n_classes == 2:
            scores.append(auc(probs[:, 1], y_test))
        else:
            scores.append(auc_ovo(probs, y_test))
    return scores


def _cmd_eval(args) -> int:
    data_dir = Path(args.data_dir)
    csv_paths = sorted(data_dir.glob("*.csv"))
    if not csv_paths:
        raise FileNotFoundError(f"no dataset CSVs under {data_dir}")
    datasets = [load_dataset(p) for p in csv_paths]
    scores = _model_or_learner_scores(args.model, datasets)
    lines = ["dataset,auc"] + [f"{p.stem},{format(s, '.17g')}" for p, s in zip(csv_paths, scores)]
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
        print(f"wrote {len(scores)} scores to {args.out}")
    else:
        sys.stdout.write(text)
    return 0


def _cmd_report(args) -> int:
    table = ScoreTable.from_csv(Path(args.scores).read_text())
    summary = summarize(table)
    text = canonical_dumps(summary) + "\n"
    if args.out:
        Path(args.out).write_text(text)
        print(f"wrote summary to {args.out}")
    else:
        sys.stdout.write(text)
    return 0


def _cmd_serve_toy(args) -> int:
    weights = ToyWeights()
    if args.checkpoint:
        weights = ToyWeights.from_dict(json.loads(Path(args.checkpoint).read_text()))
    serve(ToyPredictor(weights), args.transport)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rtfm", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="sample datasets from one theta and export CSV + metadata")
    p.add_argument("--theta", required=True, help="theta JSON (inline or @file)")
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--n-train", type=int, default=256)
    p.add_argument("--n-test", type=int, default=128)
    p.add_argument("--out-dir", required=True)
    _add_common(p)
    p.set_defaults(fn=_cmd_generate)

    p = sub.add_parser("search", help="run the gap-maximization parameter search")
    p.add_argument("--model", required=True, help="toy | toy:CKPT | freq | bridge:HOST:PORT")
    p.add_argument("--baselines", default=None, help="comma-separated learner tags")
    p.add_argument("--n-trials", type=int, default=100)
    p.add_argument("--n-ds", type=int, default=20)
    p.add_argument("--n-train", type=int, default=256)
    p.add_argument("--n-test", type=int, default=128)
    p.add_argument("--strategy", choices=["tpe", "random"], default=None)
    p.add_argument("--out", required=True, help="trials JSONL output path")
    _add_common(p)
    p.set_defaults(fn=_cmd_search)

    p = sub.add_parser("dro-solve", help="solve the entropy-constrained softmax weights for given gaps")
    p.add_argument("--gaps", required=True, help="comma-separated gap values")
    p.add_argument("--c", type=float, required=True, help="entropy floor as a fraction of log(n)")
    p.add_argument("--tol", type=float, default=1e-9)
    _add_common(p)
    p.set_defaults(fn=_cmd_dro_solve)

    p = sub.add_parser("train", help="run the full max-min training loop")
    p.add_argument("--model", required=True)
    p.add_argument("--baselines", default=None)
    p.add_argument("--out", required=True, help="run directory")
    p.add_argument("--resume", action="store_true")
    p.add_argument("--strategy", choices=["tpe", "random"], default=None)
    for name in ("n-epochs", "n-iter", "batch-size", "n-trials", "n-ds", "n-train", "n-test", "add-original-baseline-after-epoch"):
        p.add_argument(f"--{name}", type=int, default=None)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--c-frac", type=float, default=None)
    _add_common(p)
    p.set_defaults(fn=_cmd_train)

    p = sub.add_parser("eval", help="score a model on a directory of exported datasets")
    p.add_argument("--data-dir", required=True)
    p.add_argument("--model", required=True, help="model spec or baseline tag")
    p.add_argument("--out", default=None, help="output CSV (stdout when omitted)")
    _add_common(p)
    p.set_defaults(fn=_cmd_eval)

    p = sub.add_parser("report", help="summarize a score table (ranks, wins, significance tests)")
    p.add_argument("--scores", required=True, help="score table CSV")
    p.add_argument("--out", default=None, help="output JSON (stdout when omitted)")
    _add_common(p)
    p.set_defaults(fn=_cmd_report)

    p = sub.add_parser("serve-toy", help="host the toy model behind the bridge protocol")
    p.add_argument("--transport", default="stdio", help="stdio | tcp:HOST:PORT")
    p.add_argument("--checkpoint", default=None)
    _add_common(p)
    p.set_defaults(fn=_cmd_serve_toy)

    return parser


def dispatch(argv) -> int:
    """Route argv to a subcommand; returns the process exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as err:
        return int(err.code or 0)
    try:
        return args.fn(args)
    except UsageError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except KeyboardInterrupt:
        return 1
    except Exception as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
