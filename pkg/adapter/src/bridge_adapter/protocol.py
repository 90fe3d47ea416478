"""Wire-format primitives: canonical JSON and dataset payload decoding."""

from __future__ import annotations

import hashlib
import json
import math

import numpy as np

EPS_CLIP = 1e-7


def canonical_dumps(obj) -> str:
    """Canonical JSON: sorted keys, compact, floats at 17 significant digits."""
    out: list[str] = []
    _encode(obj, out)
    return "".join(out)


def _encode(obj, out: list[str]) -> None:
    if obj is None:
        out.append("null")
    elif obj is True:
        out.append("true")
    elif obj is False:
        out.append("false")
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x) or math.isinf(x):
            raise ValueError("non-finite float in payload")
        out.append(format(x, ".17g"))
    elif isinstance(obj, str):
        out.append(json.dumps(obj, ensure_ascii=True))
    elif isinstance(obj, (list, tuple)):
        out.append("[")
        for i, item in enumerate(obj):
            if i:
                out.append(",")
            _encode(item, out)
        out.append("]")
    elif isinstance(obj, dict):
        out.append("{")
        for i, key in enumerate(sorted(obj)):
            if i:
                out.append(",")
            _encode(key, out)
            out.append(":")
            _encode(obj[key], out)
        out.append("}")
    else:
        raise TypeError(f"cannot encode {type(obj).__name__}")


def clip_and_renormalize(probs: np.ndarray, eps: float = EPS_CLIP) -> np.ndarray:
    p = np.clip(np.asarray(probs, dtype=np.float64), eps, 1.0)
    p = p / p.sum(axis=1, keepdims=True)
    return np.clip(p, eps, 1.0)


class DecodedDataset:
    """Arrays decoded from a dataset payload (missing cells become NaN)."""

    def __init__(self, payload: dict):
        x_rows = payload["x"]
        n = len(x_rows)
        p = len(x_rows[0]) if n else 0
        self.x = np.empty((n, p), dtype=np.float64)
        self.missing = np.zeros((n, p), dtype=bool)
        for i, row in enumerate(x_rows):
            for j, v in enumerate(row):
                if v is None:
                    self.x[i, j] = np.nan
                    self.missing[i, j] = True
                else:
                    self.x[i, j] = float(v)
        self.y = np.asarray(payload["y"], dtype=np.int64)
        self.train_indices = np.asarray(payload["train_indices"], dtype=np.int64)
        self.test_indices = np.asarray(payload["test_indices"], dtype=np.int64)
        self.n_classes = int(payload["n_classes"])
        self.feature_kinds = payload.get("feature_kinds", [])

    @property
    def x_train(self) -> np.ndarray:
        return self.x[self.train_indices]

    @property
    def y_train(self) -> np.ndarray:
        return self.y[self.train_indices]

    @property
    def x_test(self) -> np.ndarray:
        return self.x[self.test_indices]

    @property
    def y_test(self) -> np.ndarray:
        return self.y[self.test_indices]


def mean_test_cross_entropy(probs: np.ndarray, labels: np.ndarray) -> float:
    clipped = clip_and_renormalize(probs)
    return float(-np.log(clipped[np.arange(len(labels)), labels]).mean())


def payload_hash(payload: dict) -> str:
    return hashlib.sha256(canonical_dumps(payload).encode("utf-8")).hexdigest()
