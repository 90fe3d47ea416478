"""Benchmark reporting: AUC variants, per-dataset normalization, ranks,
and the nonparametric significance tests used to compare model columns."""

from __future__ import annotations

import csv
import io
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr
from scipy.stats import chi2 as chi2_dist
from scipy.stats import rankdata

WILCOXON_EXACT_MAX_N = 25


class UndefinedMetricError(ValueError):
    """The metric is not defined for the given inputs (e.g. one class)."""


@dataclass
class ScoreTable:
    """datasets x models score matrix with names on both axes."""

    scores: np.ndarray
    model_names: list[str]
    dataset_names: list[str]

    def __post_init__(self):
        self.scores = np.asarray(self.scores, dtype=np.float64)
        n, k = self.scores.shape
        if len(self.model_names) != k or len(self.dataset_names) != n:
            raise ValueError("name lengths must match the score matrix")
        if np.isnan(self.scores).any():
            raise ValueError("score table has missing cells")
        if self.scores.min() < 0 or self.scores.max() > 1:
            raise ValueError("scores must lie in [0, 1]")

    def column(self, model: str) -> np.ndarray:
        return self.scores[:, self.model_names.index(model)]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["dataset"] + self.model_names)
        for name, row in zip(self.dataset_names, self.scores):
            writer.writerow([name] + [format(v, ".17g") for v in row])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "ScoreTable":
        rows = list(csv.reader(io.StringIO(text)))
        header = rows[0]
        model_names = header[1:]
        dataset_names = [r[0] for r in rows[1:] if r]
        scores = np.array([[float(v) for v in r[1:]] for r in rows[1:] if r])
        return cls(scores, model_names, dataset_names)


def auc(scores, labels) -> float:
    """Rank-based (Mann-Whitney) AUC; tied scores count half."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if set(np.unique(labels).tolist()) - {0, 1}:
        raise ValueError("labels must be binary 0/1")
    n_pos = int((labels == 1).sum())
    n_neg = int((labels == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError("both classes must be present")
    ranks = rankdata(scores)
    pos_rank_sum = ranks[labels == 1].sum()
    return float((pos_rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def auc_ovo(probs, labels) -> float:
    """Unweighted mean of binary AUC over all unordered class pairs.

    For pair (a, b) only rows of those classes are scored, using the
    renormalized probability p(a) / (p(a) + p(b)). Pairs missing a class
    are skipped.
    """
    probs = np.asarray(probs, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    present = np.unique(labels)
    if len(present) < 2:
        raise UndefinedMetricError("need at least two classes")
    pair_aucs = []
    n_classes = probs.shape[1]
    for a in range(n_classes):
        for b in range(a + 1, n_classes):
            mask = (labels == a) | (labels == b)
            if not ((labels == a).any() and (labels == b).any()):
                continue
            denom = probs[mask, a] + probs[mask, b]
            score = np.divide(probs[mask, a], denom, out=np.full(mask.sum(), 0.5), where=denom > 0)
            pair_aucs.append(auc(score, (labels[mask] == a).astype(int)))
    if not pair_aucs:
        raise UndefinedMetricError("no class pair with both classes present")
    return float(np.mean(pair_aucs))


def normalize_per_dataset(table: ScoreTable) -> ScoreTable:
    """Min-max rescale each dataset row to [0, 1]; constant rows map to 0.5."""
    out = np.empty_like(table.scores)
    for i, row in enumerate(table.scores):
        lo, hi = row.min(), row.max()
        if hi - lo <= 0:
            warnings.warn(f"constant score row {table.dataset_names[i]!r}; normalized to 0.5", RuntimeWarning)
            out[i] = 0.5
        else:
            out[i] = (row - lo) / (hi - lo)
    return ScoreTable(out, list(table.model_names), list(table.dataset_names))


def _descending_ranks(row: np.ndarray) -> np.ndarray:
    # rank 1 = best; ties share the average rank
    return rankdata(-row)


def mean_rank(table: ScoreTable) -> dict[str, float]:
    ranks = np.vstack([_descending_ranks(row) for row in table.scores])
    means = ranks.mean(axis=0)
    return {name: float(m) for name, m in zip(table.model_names, means)}


def rank1_wins(table: ScoreTable) -> dict[str, int]:
    """Datasets where a model strictly beats every other model."""
    wins = {name: 0 for name in table.model_names}
    if len(table.model_names) < 2:
        return wins
    for row in table.scores:
        order = np.argsort(row)[::-1]
        best, second = order[0], order[1]
        if row[best] > row[second]:
            wins[table.model_names[best]] += 1
    return wins


def friedman_test(table: ScoreTable) -> float:
    """Friedman chi-square test across model columns, with tie correction.

    Returns the p-value at k - 1 degrees of freedom. Fully tied data gives
    p = 1.0.
    """
    n, k = table.scores.shape
    if k < 3:
        raise ValueError("Friedman test needs at least 3 models")
    if n < 2:
        raise ValueError("Friedman test needs at least 2 datasets")
    ranks = np.vstack([_descending_ranks(row) for row in table.scores])
    rank_sums = ranks.sum(axis=0)
    chi2 = 12.0 / (n * k * (k + 1)) * (rank_sums**2).sum() - 3.0 * n * (k + 1)
    tie_term = 0.0
    for row in ranks:
        _, counts = np.unique(row, return_counts=True)
        tie_sizes = counts[counts > 1].astype(np.float64)
        # average ranks appear `t` times for a tie group of size t
        tie_term += float((tie_sizes**3 - tie_sizes).sum())
    correction = 1.0 - tie_term / (n * k * (k * k - 1))
    if correction <= 0:
        return 1.0
    stat = chi2 / correction
    return float(chi2_dist.sf(stat, k - 1))


def _exact_wilcoxon_p(ranks: np.ndarray, w_plus: float) -> float:
    # Subset-sum DP over doubled ranks (average ranks are half-integers).
    doubled = np.rint(2.0 * ranks).astype(np.int64)
    total = int(doubled.sum())
    counts = np.zeros(total + 1)
    counts[0] = 1.0
    for v in doubled:
        counts[v:] = counts[v:] + counts[: total + 1 - v]
    n_assignments = 2.0 ** len(ranks)
    w2 = int(np.rint(2.0 * w_plus))
    cdf = counts[: w2 + 1].sum() / n_assignments
    sf = counts[w2:].sum() / n_assignments
    return float(min(1.0, 2.0 * min(cdf, sf)))


def wilcoxon_signed_rank(a, b) -> float:
    """Two-sided paired Wilcoxon signed-rank test.

    Zero differences are dropped. Up to n = 25 the null distribution is
    enumerated exactly; beyond that a normal approximation with tie and
    continuity corrections is used. All differences zero gives p = 1.0.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError("paired lists must have equal length")
    d = a - b
    d = d[d != 0.0]
    n = len(d)
    if n == 0:
        return 1.0
    ranks = rankdata(np.abs(d))
    w_plus = float(ranks[d > 0].sum())
    if n <= WILCOXON_EXACT_MAX_N:
        return _exact_wilcoxon_p(ranks, w_plus)
    mu = n * (n + 1) / 4.0
    _, counts = np.unique(ranks, return_counts=True)
    tie_sizes = counts.astype(np.float64)
    var = n * (n + 1) * (2 * n + 1) / 24.0 - ((tie_sizes**3 - tie_sizes).sum()) / 48.0
    if var <= 0:
        return 1.0
    diff = w_plus - mu
    if diff == 0:
        return 1.0
    z = (diff - 0.5 * np.sign(diff)) / np.sqrt(var)
    return float(min(1.0, 2.0 * ndtr(-abs(z))))


def summarize(table: ScoreTable) -> dict:
    """Benchmark-summary bundle: ranks, wins, normalized means, test p-values."""
    normalized = normalize_per_dataset(table)
    norm_means = normalized.scores.mean(axis=0)
    pairwise: dict[str, dict[str, float]] = {}
    for i, m1 in enumerate(table.model_names):
        pairwise[m1] = {}
        for j, m2 in enumerate(table.model_names):
            if i == j:
                continue
            pairwise[m1][m2] = wilcoxon_signed_rank(table.scores[:, i], table.scores[:, j])
    return {
        "models": list(table.model_names),
        "n_datasets": len(table.dataset_names),
        "mean_rank": mean_rank(table),
        "rank1_wins": rank1_wins(table),
        "mean_normalized_auc": {name: float(v) for name, v in zip(table.model_names, norm_means)},
        "friedman_p": friedman_test(table),
        "wilcoxon_p": pairwise,
    }
