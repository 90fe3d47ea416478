import itertools
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats as scipy_stats

from rtfm.metrics import (
    ScoreTable,
    UndefinedMetricError,
    auc,
    auc_ovo,
    friedman_test,
    mean_rank,
    normalize_per_dataset,
    rank1_wins,
    summarize,
    wilcoxon_signed_rank,
)


def brute_force_auc(scores, labels):
    """Pair-counting oracle: wins + half-ties over all pos/neg pairs."""
    pos = [s for s, l in zip(scores, labels) if l == 1]
    neg = [s for s, l in zip(scores, labels) if l == 0]
    total = 0.0
    for p in pos:
        for n in neg:
            total += 1.0 if p > n else (0.5 if p == n else 0.0)
    return total / (len(pos) * len(neg))


def enumerate_wilcoxon_p(d):
    """Oracle: exact two-sided p by enumerating all 2^n sign assignments."""
    d = np.asarray(d, dtype=float)
    d = d[d != 0]
    ranks = scipy_stats.rankdata(np.abs(d))
    w_obs = ranks[d > 0].sum()
    n = len(d)
    sums = []
    for signs in itertools.product([0, 1], repeat=n):
        sums.append(sum(r for r, s in zip(ranks, signs) if s))
    sums = np.asarray(sums)
    cdf = (sums <= w_obs).mean()
    sf = (sums >= w_obs).mean()
    return min(1.0, 2.0 * min(cdf, sf))


class TestAuc:
    def test_perfect_ranking(self):
        assert auc([0.1, 0.2, 0.8, 0.9], [0, 0, 1, 1]) == 1.0

    def test_all_ties(self):
        assert auc([0.5, 0.5, 0.5, 0.5], [0, 1, 0, 1]) == 0.5

    def test_three_of_four_pairs(self):
        scores, labels = [0.1, 0.4, 0.35, 0.8], [0, 0, 1, 1]
        assert brute_force_auc(scores, labels) == 0.75
        assert auc(scores, labels) == pytest.approx(0.75, abs=1e-12)

    def test_single_class_undefined(self):
        with pytest.raises(UndefinedMetricError):
            auc([0.1, 0.2], [1, 1])

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.tuples(st.floats(-5, 5), st.integers(0, 1)), min_size=2, max_size=40))
    def test_matches_pair_counting_oracle(self, pairs):
        scores = [p[0] for p in pairs]
        labels = [p[1] for p in pairs]
        if len(set(labels)) < 2:
            return
        assert auc(scores, labels) == pytest.approx(brute_force_auc(scores, labels), abs=1e-12)

    def test_invariant_under_monotone_transform(self, rng):
        scores = rng.normal(size=60)
        labels = rng.integers(0, 2, 60)
        if len(set(labels.tolist())) < 2:
            labels[0] = 1 - labels[0]
        a = auc(scores, labels)
        b = auc(np.exp(scores) * 3 + 1, labels)
        assert a == pytest.approx(b, abs=1e-12)


class TestAucOvo:
    def test_binary_equals_plain_auc(self, rng):
        probs = rng.dirichlet(np.ones(2), size=40)
        labels = rng.integers(0, 2, 40)
        if len(set(labels.tolist())) < 2:
            labels[0] = 1 - labels[0]
        assert auc_ovo(probs, labels) == pytest.approx(auc(probs[:, 1], labels), abs=1e-12)

    def test_perfect_one_hot_three_classes(self):
        labels = np.array([0, 1, 2, 0, 1, 2])
        probs = np.eye(3)[labels]
        assert auc_ovo(probs, labels) == 1.0

    def test_uniform_probs_give_half(self):
        labels = np.array([0, 1, 2, 0, 1, 2])
        assert auc_ovo(np.full((6, 3), 1 / 3), labels) == 0.5

    def test_missing_class_pairs_skipped(self):
        labels = np.array([0, 0, 1, 1])  # class 2 never appears
        probs = np.array([[0.8, 0.1, 0.1], [0.7, 0.2, 0.1], [0.2, 0.7, 0.1], [0.1, 0.8, 0.1]])
        assert auc_ovo(probs, labels) == 1.0

    def test_single_class_undefined(self):
        with pytest.raises(UndefinedMetricError):
            auc_ovo(np.full((3, 3), 1 / 3), np.zeros(3, dtype=int))


class TestNormalize:
    def test_linear_scaling(self):
        t = ScoreTable(np.array([[0.4, 0.6, 0.8]]), ["a", "b", "c"], ["d1"])
        np.testing.assert_allclose(normalize_per_dataset(t).scores, [[0.0, 0.5, 1.0]])

    def test_idempotent(self):
        t = ScoreTable(np.array([[0.0, 1.0], [0.25, 0.75]]), ["a", "b"], ["d1", "d2"])
        once = normalize_per_dataset(t)
        twice = normalize_per_dataset(once)
        np.testing.assert_allclose(once.scores, twice.scores)
        np.testing.assert_allclose(once.scores[0], [0.0, 1.0])

    def test_constant_row_warns_and_maps_to_half(self):
        t = ScoreTable(np.array([[0.7, 0.7, 0.7]]), ["a", "b", "c"], ["d1"])
        with pytest.warns(RuntimeWarning):
            out = normalize_per_dataset(t)
        np.testing.assert_allclose(out.scores, [[0.5, 0.5, 0.5]])


class TestRanks:
    def test_total_dominance(self):
        scores = np.column_stack([np.full(6, 0.4), np.full(6, 0.9)])
        t = ScoreTable(scores, ["weak", "strong"], [f"d{i}" for i in range(6)])
        assert mean_rank(t) == {"weak": 2.0, "strong": 1.0}
        assert rank1_wins(t) == {"weak": 0, "strong": 6}

    def test_ties_share_average_rank_and_no_win(self):
        t = ScoreTable(np.array([[0.5, 0.5, 0.2]]), ["a", "b", "c"], ["d1"])
        ranks = mean_rank(t)
        assert ranks["a"] == ranks["b"] == 1.5
        assert ranks["c"] == 3.0
        assert rank1_wins(t) == {"a": 0, "b": 0, "c": 0}


class TestFriedman:
    def test_identical_columns_p_one(self):
        t = ScoreTable(np.tile(np.linspace(0.1, 0.9, 5)[:, None], (1, 4)), list("abcd"), [f"d{i}" for i in range(5)])
        assert friedman_test(t) == pytest.approx(1.0)

    def test_matches_scipy_without_ties(self, rng):
        for _ in range(10):
            scores = rng.uniform(size=(12, 5))  # ties have measure zero
            t = ScoreTable(scores, list("abcde"), [f"d{i}" for i in range(12)])
            _, scipy_p = scipy_stats.friedmanchisquare(*[scores[:, j] for j in range(5)])
            assert friedman_test(t) == pytest.approx(scipy_p, rel=1e-9)

    def test_invariant_under_row_monotone_transforms(self, rng):
        scores = rng.uniform(0.1, 0.9, size=(10, 4))
        t1 = ScoreTable(scores, list("abcd"), [f"d{i}" for i in range(10)])
        transformed = np.array([np.tanh(3 * row) for row in scores])  # increasing map
        t2 = ScoreTable(transformed, list("abcd"), [f"d{i}" for i in range(10)])
        assert friedman_test(t1) == pytest.approx(friedman_test(t2), rel=1e-12)

    def test_needs_three_models(self):
        with pytest.raises(ValueError):
            friedman_test(ScoreTable(np.ones((3, 2)) * 0.5, ["a", "b"], ["x", "y", "z"]))


class TestWilcoxon:
    def test_identical_lists_p_one(self):
        assert wilcoxon_signed_rank([1.0, 2.0, 3.0], [1.0, 2.0, 3.0]) == 1.0

    @settings(max_examples=40, deadline=None)
    @given(st.lists(st.integers(-8, 8), min_size=3, max_size=11))
    def test_exact_matches_enumeration(self, diffs):
        a = np.asarray(diffs, dtype=float)
        b = np.zeros(len(a))
        if np.all(a == 0):
            assert wilcoxon_signed_rank(a, b) == 1.0
            return
        assert wilcoxon_signed_rank(a, b) == pytest.approx(enumerate_wilcoxon_p(a), abs=1e-12)

    def test_large_n_matches_scipy_approximation(self, rng):
        a = rng.normal(0.2, 1.0, size=60)
        b = rng.normal(0.0, 1.0, size=60)
        mine = wilcoxon_signed_rank(a, b)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            ref = scipy_stats.wilcoxon(a, b, zero_method="wilcox", correction=True, method="approx").pvalue
        assert mine == pytest.approx(ref, rel=1e-9)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            wilcoxon_signed_rank([1.0], [1.0, 2.0])


class TestScoreTable:
    def test_csv_round_trip(self, rng):
        t = ScoreTable(rng.uniform(size=(4, 3)), ["m1", "m2", "m3"], ["a", "b", "c", "d"])
        back = ScoreTable.from_csv(t.to_csv())
        np.testing.assert_array_equal(back.scores, t.scores)
        assert back.model_names == t.model_names

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            ScoreTable(np.array([[1.2]]), ["m"], ["d"])

    def test_summarize_bundle_shape(self, rng):
        t = ScoreTable(rng.uniform(size=(6, 3)), ["m1", "m2", "m3"], [f"d{i}" for i in range(6)])
        s = summarize(t)
        assert set(s["mean_rank"]) == {"m1", "m2", "m3"}
        assert s["wilcoxon_p"]["m1"]["m2"] == s["wilcoxon_p"]["m2"]["m1"]
        assert 0.0 <= s["friedman_p"] <= 1.0
