"""Synthetic tabular data generation from randomized-MLP structural models.

A generator instance is a randomly initialized MLP. Hidden-unit activations
become dataset features, one final-layer unit's activation is binned into
class labels, and post-processing adds categorical encodings, label
permutations, and missing values. Generator hyperparameters are drawn from
truncated normals (numeric) or epsilon-greedy choices (categorical) whose
means are fixed by a :class:`~rtfm.theta.ThetaParams` point.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr, ndtri

from .theta import ACTIVATIONS, INPUT_DISTRIBUTIONS, ThetaParams

EPSILON_GREEDY = 0.3
MAX_HYPERPARAM_RETRIES = 10
MAX_WEIGHT_RESAMPLES = 10
MAX_SPLIT_RESAMPLES = 20


class GeneratorError(RuntimeError):
    """Raised when bounded retries against a degenerate configuration run out."""


class IncompatibleScmError(GeneratorError):
    """Requested feature count exceeds the available hidden units."""


class DegenerateGeneratorError(GeneratorError):
    """The target unit's activation is constant; no label signal exists."""


def truncated_normal(mean: float, sd: float, lo: float, hi: float, rng: np.random.Generator, size=None):
    """Sample Normal(mean, sd) conditioned on [lo, hi] by inverse-CDF.

    Returns a scalar when ``size`` is None, else an ndarray.
    """
    for name, v in (("mean", mean), ("sd", sd), ("lo", lo), ("hi", hi)):
        if not np.isfinite(v):
            raise ValueError(f"non-finite {name}: {v!r}")
    if sd <= 0:
        raise ValueError(f"sd must be positive, got {sd}")
    if not lo < hi:
        raise ValueError(f"empty interval [{lo}, {hi}]")
    a = ndtr((lo - mean) / sd)
    b = ndtr((hi - mean) / sd)
    u = rng.uniform(a, b, size=size)
    x = mean + sd * ndtri(u)
    x = np.clip(x, lo, hi)
    return float(x) if size is None else x


def _epsilon_greedy(preferred, options, rng: np.random.Generator, eps: float = EPSILON_GREEDY):
    # With probability eps the choice is uniform over *all* options, so the
    # preferred option keeps total probability 1 - eps + eps/len(options).
    if rng.uniform() < eps:
        return options[int(rng.integers(len(options)))]
    return preferred


@dataclass(frozen=True)
class ScmHyperparams:
    """Materialized hyperparameters of one generator draw."""

    hidden_size: int
    num_layers: int
    num_inputs: int
    num_features: int
    num_classes: int
    cat_ratio: float
    ordered_cat_ratio: float
    missing_ratio: float
    activation: str
    input_distribution: str

    def __post_init__(self):
        checks = [
            (3 <= self.hidden_size <= 256, "hidden_size"),
            (1 <= self.num_layers <= 12, "num_layers"),
            (1 <= self.num_inputs <= 15, "num_inputs"),
            (2 <= self.num_features <= 200, "num_features"),
            (2 <= self.num_classes <= 10, "num_classes"),
            (0.0 <= self.cat_ratio <= 1.0, "cat_ratio"),
            (0.0 <= self.ordered_cat_ratio <= 1.0, "ordered_cat_ratio"),
            (0.0 <= self.missing_ratio <= 1.0, "missing_ratio"),
            (self.activation in ACTIVATIONS, "activation"),
            (self.input_distribution in INPUT_DISTRIBUTIONS, "input_distribution"),
        ]
        for ok, name in checks:
            if not ok:
                raise ValueError(f"{name}={getattr(self, name)!r} out of range")


def sample_hyperparams(theta: ThetaParams, rng: np.random.Generator) -> ScmHyperparams:
    """Draw one hyperparameter setting from the prior centered on ``theta``.

    Numeric fields come from truncated normals with the fixed per-field
    spread and range, rounded to the nearest integer where integral;
    categorical fields are epsilon-greedy around theta's choice.
    """
    mu_h, mu_l, mu_xin = theta.mlp_size
    h = int(round(truncated_normal(mu_h, 10.0, 3, 256, rng)))
    l = int(round(truncated_normal(mu_l, 1.0, 1, 12, rng)))
    x_in = int(round(truncated_normal(mu_xin, 1.0, 1, 15, rng)))
    z_x = int(round(truncated_normal(theta.mu_num_features, theta.mu_num_features / 4.0, 2, 200, rng)))
    c = int(round(truncated_normal(theta.mu_num_classes, 1.0, 2, 10, rng)))
    r_cat = truncated_normal(theta.mu_cat_ratio, 0.1, 0.0, 1.0, rng)
    r_s = truncated_normal(theta.mu_ordered_cat_ratio, 0.1, 0.0, 1.0, rng)
    m = truncated_normal(theta.mu_missing_ratio, 0.1, 0.0, 1.0, rng)
    a = _epsilon_greedy(theta.activation, ACTIVATIONS, rng)
    d = _epsilon_greedy(theta.input_distribution, INPUT_DISTRIBUTIONS, rng)
    return ScmHyperparams(h, l, x_in, z_x, c, r_cat, r_s, m, a, d)


@dataclass(frozen=True)
class CategoricalSpec:
    """Binning recipe for one feature column."""

    num_bins: int
    is_ordered: bool
    label_permutation: tuple[int, ...] | None

    def __post_init__(self):
        if self.is_ordered != (self.label_permutation is None):
            raise ValueError("label_permutation present iff unordered")


@dataclass
class ScmInstance:
    """One materialized generator: MLP weights plus feature/target wiring.

    Hidden units are addressed as (layer, unit); features are read from
    arbitrary hidden layers, the target from the final hidden layer.
    """

    hyperparams: ScmHyperparams
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    feature_node_indices: list[tuple[int, int]]
    target_node_index: tuple[int, int]
    categorical_feature_spec: dict[int, CategoricalSpec]
    seed: int = 0


def build_scm(hp: ScmHyperparams, rng: np.random.Generator, seed: int = 0) -> ScmInstance:
    """Materialize MLP weights and node wiring for one generator.

    Raises :class:`IncompatibleScmError` if the net has too few hidden
    units to host ``num_features`` feature nodes plus the target node.
    """
    h, l = hp.hidden_size, hp.num_layers
    total_units = h * l
    if hp.num_features + 1 > total_units:
        raise IncompatibleScmError(
            f"need {hp.num_features} feature nodes + target but only {total_units} hidden units"
        )

    weights, biases = [], []
    fan_in = hp.num_inputs
    for _ in range(l):
        weights.append(rng.normal(0.0, 1.0 / np.sqrt(fan_in), size=(fan_in, h)))
        biases.append(rng.normal(0.0, 0.1, size=h))
        fan_in = h

    target_unit = int(rng.integers(h))
    target_flat = (l - 1) * h + target_unit
    pool = np.delete(np.arange(total_units), target_flat)
    feature_flat = rng.choice(pool, size=hp.num_features, replace=False)
    feature_nodes = [(int(f) // h, int(f) % h) for f in feature_flat]

    n_cat = int(round(hp.cat_ratio * hp.num_features))
    cat_columns = sorted(int(i) for i in rng.choice(hp.num_features, size=n_cat, replace=False))
    n_ordered = int(round(hp.ordered_cat_ratio * n_cat))
    ordered_set = {cat_columns[int(i)] for i in rng.choice(n_cat, size=n_ordered, replace=False)} if n_cat else set()

    cat_spec: dict[int, CategoricalSpec] = {}
    for col in cat_columns:
        k = int(rng.integers(2, 11))
        ordered = col in ordered_set
        perm = None if ordered else tuple(int(v) for v in rng.permutation(k))
        cat_spec[col] = CategoricalSpec(k, ordered, perm)

    return ScmInstance(
        hyperparams=hp,
        weights=weights,
        biases=biases,
        feature_node_indices=feature_nodes,
        target_node_index=(l - 1, target_unit),
        categorical_feature_spec=cat_spec,
        seed=seed,
    )


@dataclass(frozen=True)
class FeatureKind:
    """Column type marker: numeric, or categorical with a cardinality."""

    kind: str  # "numeric" | "categorical"
    cardinality: int | None = None
    ordered: bool | None = None

    def to_dict(self) -> dict:
        if self.kind == "numeric":
            return {"kind": "numeric"}
        return {"kind": "categorical", "cardinality": self.cardinality, "ordered": self.ordered}

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureKind":
        if d["kind"] == "numeric":
            return cls("numeric")
        return cls("categorical", int(d["cardinality"]), bool(d["ordered"]))


@dataclass
class TabularDataset:
    """A labeled table with missing-value mask and a fixed train/test split.

    ``x`` holds NaN at masked cells; test rows are always fully observed.
    """

    x: np.ndarray
    missing_mask: np.ndarray
    feature_kinds: list[FeatureKind]
    y: np.ndarray
    train_indices: np.ndarray
    test_indices: np.ndarray
    n_classes: int
    theta: ThetaParams | None = None
    seed: int | None = None

    @property
    def n_rows(self) -> int:
        return self.x.shape[0]

    @property
    def n_features(self) -> int:
        return self.x.shape[1]

    def validate(self) -> None:
        n, p = self.x.shape
        assert self.missing_mask.shape == (n, p)
        assert len(self.feature_kinds) == p
        assert self.y.shape == (n,)
        assert self.y.min() >= 0 and self.y.max() < self.n_classes
        combined = np.sort(np.concatenate([self.train_indices, self.test_indices]))
        assert np.array_equal(combined, np.arange(n)), "split must partition rows"
        assert not self.missing_mask[self.test_indices].any(), "test rows must be fully observed"
        assert np.array_equal(np.isnan(self.x), self.missing_mask)
        train_classes = set(np.unique(self.y[self.train_indices]).tolist())
        assert set(np.unique(self.y).tolist()) <= train_classes, "train must cover observed classes"
        for col, kind in enumerate(self.feature_kinds):
            if kind.kind == "categorical":
                vals = self.x[:, col][~self.missing_mask[:, col]]
                assert vals.min() >= 0 and vals.max() < kind.cardinality


def _equal_mass_bins(values: np.ndarray, k: int) -> np.ndarray:
    """Rank-based binning into k near-equal-count bins (ties split by index)."""
    n = len(values)
    order = np.argsort(values, kind="stable")
    ranks = np.empty(n, dtype=np.int64)
    ranks[order] = np.arange(n)
    return (ranks * k) // n


_ACTIVATION_FNS = {
    "relu": lambda v: np.maximum(v, 0.0),
    "elu": lambda v: np.where(v > 0.0, v, np.expm1(v)),
    "identity": lambda v: v,
    "tanh": np.tanh,
}


def _draw_inputs(dist: str, n: int, x_in: int, rng: np.random.Generator) -> np.ndarray:
    if dist == "exponential":
        raw = rng.exponential(1.0, size=(n, x_in))
    elif dist == "uniform":
        raw = rng.uniform(0.0, 1.0, size=(n, x_in))
    else:
        raw = rng.normal(0.0, 1.0, size=(n, x_in))
    mean = raw.mean(axis=0)
    std = raw.std(axis=0)
    std[std < 1e-12] = 1.0
    return (raw - mean) / std


def _propagate(scm: ScmInstance, inputs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Forward pass; returns (feature matrix, target activation vector)."""
    act = _ACTIVATION_FNS[scm.hyperparams.activation]
    layer_acts = []
    h = inputs
    for w, b in zip(scm.weights, scm.biases):
        h = act(h @ w + b)
        layer_acts.append(h)
    features = np.column_stack([layer_acts[layer][:, unit] for layer, unit in scm.feature_node_indices])
    t_layer, t_unit = scm.target_node_index
    return features, layer_acts[t_layer][:, t_unit]


def sample_dataset(scm: ScmInstance, n_train: int, n_test: int, rng: np.random.Generator) -> TabularDataset:
    """Draw one labeled dataset from a generator instance.

    Labels are equal-mass quantile bins of the target unit's activation.
    A constant target activation triggers a bounded number of weight
    resamples before failing as degenerate.
    """
    hp = scm.hyperparams
    if n_train < hp.num_classes:
        raise ValueError("n_train must be at least the class count")
    if n_test < 1:
        raise ValueError("n_test must be positive")
    n = n_train + n_test

    current = scm
    for _ in range(MAX_WEIGHT_RESAMPLES + 1):
        inputs = _draw_inputs(hp.input_distribution, n, hp.num_inputs, rng)
        features, target = _propagate(current, inputs)
        if np.ptp(target) > 1e-12:
            break
        current = build_scm(hp, rng, seed=scm.seed)
    else:
        raise DegenerateGeneratorError("degenerate-generator: constant target activation")

    y = _equal_mass_bins(target, hp.num_classes)

    x = features.astype(np.float64, copy=True)
    kinds: list[FeatureKind] = []
    for col in range(hp.num_features):
        spec = current.categorical_feature_spec.get(col)
        if spec is None:
            kinds.append(FeatureKind("numeric"))
            continue
        codes = _equal_mass_bins(x[:, col], spec.num_bins)
        if not spec.is_ordered:
            codes = np.asarray(spec.label_permutation)[codes]
        x[:, col] = codes.astype(np.float64)
        kinds.append(FeatureKind("categorical", spec.num_bins, spec.is_ordered))

    observed = set(np.unique(y).tolist())
    for _ in range(MAX_SPLIT_RESAMPLES):
        perm = rng.permutation(n)
        train_idx = np.sort(perm[:n_train])
        if observed <= set(np.unique(y[train_idx]).tolist()):
            break
    else:
        raise GeneratorError("class-coverage: could not place every class in train")
    test_idx = np.sort(perm[n_train:])

    missing_mask = np.zeros((n, hp.num_features), dtype=bool)
    if hp.missing_ratio > 0:
        train_mask = rng.uniform(size=(n_train, hp.num_features)) < hp.missing_ratio
        missing_mask[train_idx] = train_mask
        x[missing_mask] = np.nan

    return TabularDataset(
        x=x,
        missing_mask=missing_mask,
        feature_kinds=kinds,
        y=y.astype(np.int64),
        train_indices=train_idx.astype(np.int64),
        test_indices=test_idx.astype(np.int64),
        n_classes=hp.num_classes,
        seed=scm.seed,
    )


def generate_dataset(theta: ThetaParams, seed: int, n_train: int, n_test: int) -> TabularDataset:
    """Deterministic end-to-end draw: theta -> hyperparams -> SCM -> dataset.

    Identical arguments produce a bit-identical dataset. Hyperparameter
    draws incompatible with the net size are retried a bounded number of
    times before the theta is reported unusable.
    """
    rng = np.random.default_rng(seed)
    last_err: GeneratorError | None = None
    for _ in range(MAX_HYPERPARAM_RETRIES):
        hp = sample_hyperparams(theta, rng)
        try:
            scm = build_scm(hp, rng, seed=seed)
        except IncompatibleScmError as err:
            last_err = err
            continue
        ds = sample_dataset(scm, n_train, n_test, rng)
        ds.theta = theta
        return ds
    raise IncompatibleScmError(f"no compatible hyperparameters after {MAX_HYPERPARAM_RETRIES} tries: {last_err}")
