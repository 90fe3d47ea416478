"""Train-statistics preprocessing shared by every predictor.

The in-context model and all baseline learners must see exactly the same
design matrices: missing numerics imputed by the train-column mean,
missing categoricals by the train mode, categorical codes kept as ordinal
integers, and numeric columns standardized by train statistics.
"""

from __future__ import annotations

import numpy as np

from .generator import TabularDataset


def _train_mode(values: np.ndarray) -> float:
    # Most frequent value; ties broken toward the smallest code.
    if len(values) == 0:
        return 0.0
    codes, counts = np.unique(values, return_counts=True)
    return float(codes[np.argmax(counts)])


def design_matrices(data: TabularDataset) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Return (x_train, y_train, x_test, y_test) ready for fitting.

    All statistics (imputation values, standardization moments) come from
    the train split only. Results are cached on the dataset and shared
    between callers; treat the returned arrays as read-only.
    """
    cached = getattr(data, "_design_cache", None)
    if cached is not None:
        return cached

    tr, te = data.train_indices, data.test_indices
    xt = data.x[tr].copy()
    xs = data.x[te].copy()
    numeric = np.array([k.kind == "numeric" for k in data.feature_kinds], dtype=bool)

    nan_t = np.isnan(xt)
    fill = np.zeros(xt.shape[1])
    if nan_t.any() or np.isnan(xs).any():
        observed_count = (~nan_t).sum(axis=0)
        sums = np.where(nan_t, 0.0, xt).sum(axis=0)
        means = np.divide(sums, observed_count, out=np.zeros_like(sums), where=observed_count > 0)
        fill = np.where(numeric, means, 0.0)
        for col in np.nonzero(~numeric)[0]:
            fill[col] = _train_mode(xt[:, col][~nan_t[:, col]])
        xt = np.where(nan_t, fill, xt)
        xs = np.where(np.isnan(xs), fill, xs)

    if numeric.any():
        mu = xt[:, numeric].mean(axis=0)
        sd = xt[:, numeric].std(axis=0)
        sd[sd < 1e-12] = 1.0
        xt[:, numeric] = (xt[:, numeric] - mu) / sd
        xs[:, numeric] = (xs[:, numeric] - mu) / sd

    result = (xt, data.y[tr].copy(), xs, data.y[te].copy())
    data._design_cache = result
    return result
