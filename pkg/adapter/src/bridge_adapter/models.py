"""Wrapped models: anything with fit / predict_proba can sit behind PREDICT.

The adapter fits the wrapped model per PREDICT request (in-context
predictors condition on each context independently), so models here are
cheap train-split learners.
"""

from __future__ import annotations

import importlib

import numpy as np


class EchoFrequencyModel:
    """Predicts the train-split label frequencies for every test row."""

    def __init__(self):
        self._freqs = None

    def fit(self, x_train, y_train, n_classes):
        counts = np.bincount(y_train, minlength=n_classes).astype(np.float64)
        self._freqs = counts / counts.sum()
        return self

    def predict_proba(self, x_test):
        return np.tile(self._freqs, (len(x_test), 1))

    def get_state(self) -> dict:
        return {"freqs": None if self._freqs is None else [float(v) for v in self._freqs]}

    def set_state(self, state: dict) -> None:
        freqs = state.get("freqs")
        self._freqs = None if freqs is None else np.asarray(freqs, dtype=np.float64)


class SklearnStyleModel:
    """Wraps an import-spec'd classifier exposing fit / predict_proba.

    Missing values are imputed with train-column means before fitting,
    since generic estimators choke on NaN.
    """

    def __init__(self, import_spec: str):
        module_name, _, class_name = import_spec.partition(":")
        if not class_name:
            raise ValueError(f"model spec {import_spec!r} must look like module:ClassName")
        self._factory = getattr(importlib.import_module(module_name), class_name)
        self._model = None
        self._fill = None
        self._n_classes = None

    def fit(self, x_train, y_train, n_classes):
        x_train = np.asarray(x_train, dtype=np.float64).copy()
        self._fill = np.zeros(x_train.shape[1])
        for j in range(x_train.shape[1]):
            observed = x_train[:, j][~np.isnan(x_train[:, j])]
            self._fill[j] = observed.mean() if len(observed) else 0.0
            x_train[np.isnan(x_train[:, j]), j] = self._fill[j]
        self._n_classes = n_classes
        self._model = self._factory()
        self._model.fit(x_train, y_train)
        return self

    def predict_proba(self, x_test):
        x_test = np.asarray(x_test, dtype=np.float64).copy()
        for j in range(x_test.shape[1]):
            x_test[np.isnan(x_test[:, j]), j] = self._fill[j]
        raw = self._model.predict_proba(x_test)
        # estimators only emit columns for classes seen in train
        full = np.zeros((len(x_test), self._n_classes))
        for col, cls in enumerate(getattr(self._model, "classes_", range(raw.shape[1]))):
            full[:, int(cls)] = raw[:, col]
        return full

    def get_state(self) -> dict:
        return {}

    def set_state(self, state: dict) -> None:
        pass


def make_model(spec: str):
    if spec == "echo-freq":
        return EchoFrequencyModel()
    return SklearnStyleModel(spec)
