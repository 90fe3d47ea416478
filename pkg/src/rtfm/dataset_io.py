"""Dataset serialization: canonical payloads, CSV export, sidecar metadata.

The same payload schema is inlined on the wire protocol and used for
content hashing, so it must be canonical: masked cells are ``null``, keys
sorted, floats at 17 significant digits.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .canonical import canonical_dumps, content_hash
from .generator import FeatureKind, TabularDataset
from .theta import ThetaParams


def dataset_payload(data: TabularDataset) -> dict:
    """JSON-ready dict with the full dataset inlined (masked cells null)."""
    x_rows = []
    for i in range(data.n_rows):
        row = []
        for j in range(data.n_features):
            row.append(None if data.missing_mask[i, j] else float(data.x[i, j]))
        x_rows.append(row)
    return {
        "x": x_rows,
        "y": [int(v) for v in data.y],
        "feature_kinds": [k.to_dict() for k in data.feature_kinds],
        "train_indices": [int(i) for i in data.train_indices],
        "test_indices": [int(i) for i in data.test_indices],
        "n_classes": int(data.n_classes),
        "theta": data.theta.to_dict() if data.theta is not None else None,
        "seed": int(data.seed) if data.seed is not None else None,
    }


def dataset_from_payload(payload: dict) -> TabularDataset:
    x_rows = payload["x"]
    n = len(x_rows)
    p = len(x_rows[0]) if n else 0
    x = np.empty((n, p), dtype=np.float64)
    mask = np.zeros((n, p), dtype=bool)
    for i, row in enumerate(x_rows):
        for j, v in enumerate(row):
            if v is None:
                x[i, j] = np.nan
                mask[i, j] = True
            else:
                x[i, j] = float(v)
    theta = payload.get("theta")
    return TabularDataset(
        x=x,
        missing_mask=mask,
        feature_kinds=[FeatureKind.from_dict(d) for d in payload["feature_kinds"]],
        y=np.asarray(payload["y"], dtype=np.int64),
        train_indices=np.asarray(payload["train_indices"], dtype=np.int64),
        test_indices=np.asarray(payload["test_indices"], dtype=np.int64),
        n_classes=int(payload["n_classes"]),
        theta=ThetaParams.from_dict(theta) if theta is not None else None,
        seed=payload.get("seed"),
    )


def dataset_hash(data: TabularDataset) -> str:
    return content_hash(dataset_payload(data))


def stable_seed_base(data: TabularDataset) -> int:
    """Per-dataset integer for deriving learner seeds; falls back to a
    content hash when the dataset carries no generation seed."""
    if data.seed is not None:
        return int(data.seed)
    return int(dataset_hash(data)[:16], 16)


def _format_cell(v: float) -> str:
    if np.isnan(v):
        return ""
    return format(float(v), ".17g")


def export_dataset(data: TabularDataset, out_dir, name: str) -> tuple[Path, Path]:
    """Write ``<name>.csv`` plus ``<name>.meta.json`` under ``out_dir``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / f"{name}.csv"
    meta_path = out_dir / f"{name}.meta.json"

    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"f{j}" for j in range(data.n_features)] + ["y"])
        for i in range(data.n_rows):
            row = [_format_cell(data.x[i, j]) for j in range(data.n_features)]
            row.append(str(int(data.y[i])))
            writer.writerow(row)

    meta = {
        "theta": data.theta.to_dict() if data.theta is not None else None,
        "seed": int(data.seed) if data.seed is not None else None,
        "feature_kinds": [k.to_dict() for k in data.feature_kinds],
        "train_indices": [int(i) for i in data.train_indices],
        "test_indices": [int(i) for i in data.test_indices],
        "n_classes": int(data.n_classes),
    }
    meta_path.write_text(canonical_dumps(meta) + "\n")
    return csv_path, meta_path


def load_dataset(csv_path) -> TabularDataset:
    """Read a dataset exported by :func:`export_dataset`."""
    csv_path = Path(csv_path)
    meta_path = csv_path.parent / (csv_path.stem + ".meta.json")
    meta = json.loads(meta_path.read_text())

    rows = []
    with open(csv_path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        p = len(header) - 1
        for row in reader:
            rows.append(row)
    n = len(rows)
    x = np.empty((n, p), dtype=np.float64)
    mask = np.zeros((n, p), dtype=bool)
    y = np.empty(n, dtype=np.int64)
    for i, row in enumerate(rows):
        for j in range(p):
            if row[j] == "":
                x[i, j] = np.nan
                mask[i, j] = True
            else:
                x[i, j] = float(row[j])
        y[i] = int(row[p])

    theta = meta.get("theta")
    return TabularDataset(
        x=x,
        missing_mask=mask,
        feature_kinds=[FeatureKind.from_dict(d) for d in meta["feature_kinds"]],
        y=y,
        train_indices=np.asarray(meta["train_indices"], dtype=np.int64),
        test_indices=np.asarray(meta["test_indices"], dtype=np.int64),
        n_classes=int(meta["n_classes"]),
        theta=ThetaParams.from_dict(theta) if theta is not None else None,
        seed=meta.get("seed"),
    )
