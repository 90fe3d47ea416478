import numpy as np
import pytest

from conftest import SYNTHETIC_TARGET, synthetic_gap, synthetic_gap_max_by_enumeration
from rtfm.gap import FrequencyPredictor, ToyPredictor
from rtfm.learners import fit_predict, learner
from rtfm.search import Trial, TrialLog, parameter_search, search_loop
from rtfm.seeding import rng_for
from rtfm.theta import ACTIVATIONS, THETA_SUPPORT, ThetaParams, random_theta
from rtfm.tpe import SearchStrategy, suggest


def theta_with(activation: str, rng) -> ThetaParams:
    t = random_theta(rng)
    return ThetaParams(**{**t.to_dict(), "activation": activation})


class TestSuggest:
    def test_empty_history_valid_theta(self, rng):
        t = suggest([], SearchStrategy(), rng)
        for name, support in THETA_SUPPORT.items():
            assert getattr(t, name) in support

    def test_random_strategy_uniform_activations(self, rng):
        counts = {a: 0 for a in ACTIVATIONS}
        n = 10_000
        for _ in range(n):
            counts[suggest([], SearchStrategy(tag="random"), rng).activation] += 1
        for a in ACTIVATIONS:
            assert abs(counts[a] / n - 0.25) <= 0.02

    def test_good_trials_drive_the_proposal(self, rng):
        # 20 trials, distinct gaps; the top quarter all use tanh
        history = []
        for i in range(20):
            act = "tanh" if i < 5 else ACTIVATIONS[i % 3]  # relu/elu/identity below
            history.append((theta_with(act, rng), 2.0 - 0.05 * i))
        strategy = SearchStrategy()
        # density-ratio oracle computed by hand for the activation dimension
        n_good = 5
        good_counts = {a: (n_good if a == "tanh" else 0) for a in ACTIVATIONS}
        bad_counts = {a: sum(1 for t, g in history[n_good:] if t.activation == a) for a in ACTIVATIONS}
        ratios = {
            a: (good_counts[a] + 1.0) / (n_good + 4.0) / ((bad_counts[a] + 1.0) / (15 + 4.0))
            for a in ACTIVATIONS
        }
        assert max(ratios, key=ratios.get) == "tanh"
        hits = sum(suggest(history, strategy, rng).activation == "tanh" for _ in range(200))
        assert hits / 200 >= 0.5

    def test_fewer_than_five_trials_falls_back_to_random(self, rng):
        history = [(theta_with("tanh", rng), 1.0) for _ in range(4)]
        acts = {suggest(history, SearchStrategy(), rng).activation for _ in range(300)}
        assert acts == set(ACTIVATIONS)

    def test_suggestions_stay_on_support(self, rng):
        history = [(random_theta(rng), float(g)) for g in np.random.default_rng(0).normal(size=30)]
        for _ in range(100):
            t = suggest(history, SearchStrategy(), rng)
            for name, support in THETA_SUPPORT.items():
                assert getattr(t, name) in support

    def test_strategy_validation(self):
        with pytest.raises(ValueError):
            SearchStrategy(tag="grid")
        with pytest.raises(ValueError):
            SearchStrategy(gamma=0.0)
        with pytest.raises(ValueError):
            SearchStrategy(n_candidates=0)


def synthetic_objective(theta: ThetaParams, index: int) -> Trial:
    g = synthetic_gap(theta)
    return Trial(theta=theta, gap=g, per_dataset_gaps=[g], failed=False)


class TestSearchLoop:
    def test_single_trial(self, rng):
        log = search_loop(synthetic_objective, 1, SearchStrategy(), rng)
        assert len(log.trials) == 1

    def test_tpe_beats_random_on_synthetic_objective(self):
        true_max = synthetic_gap_max_by_enumeration()
        assert true_max == pytest.approx(synthetic_gap(SYNTHETIC_TARGET))
        tpe_best, rand_best = [], []
        for seed in range(6):
            for tag, sink in (("tpe", tpe_best), ("random", rand_best)):
                log = search_loop(synthetic_objective, 100, SearchStrategy(tag=tag), rng_for(seed, tag))
                sink.append(log.best_gap())
        assert np.mean(tpe_best) >= np.mean(rand_best)

    def test_jsonl_round_trip(self, rng, tmp_path):
        log = search_loop(synthetic_objective, 8, SearchStrategy(), rng)
        path = tmp_path / "trials.jsonl"
        log.save(path)
        loaded = TrialLog.load(path)
        assert loaded.to_jsonl() == log.to_jsonl()
        assert [t.gap for t in loaded.trials] == [t.gap for t in log.trials]


class KnnAsModel(FrequencyPredictor):
    """Runs the knn baseline per dataset, posing as the trained model."""

    description = "knn-as-model"

    def predict(self, data):
        return fit_predict(learner("knn"), data)


class TestParameterSearch:
    def test_model_equal_to_baseline_gives_zero_gaps(self):
        log = parameter_search(
            KnnAsModel(),
            [learner("knn")],
            n_trials=3,
            n_ds=2,
            strategy=SearchStrategy(tag="random"),
            seed=5,
            n_train=48,
            n_test=24,
        )
        for t in log.trials:
            assert not t.failed
            assert abs(t.gap) <= 1e-9
            assert 1 <= len(t.per_dataset_gaps) <= 2  # degenerate draws may be skipped
            assert t.gap == pytest.approx(np.mean(t.per_dataset_gaps), abs=1e-12)

    def test_reproducible(self):
        kwargs = dict(n_trials=4, n_ds=2, strategy=SearchStrategy(tag="random"), seed=42, n_train=48, n_test=24)
        a = parameter_search(ToyPredictor(), [learner("knn")], **kwargs)
        b = parameter_search(ToyPredictor(), [learner("knn")], **kwargs)
        assert a.to_jsonl() == b.to_jsonl()

    def test_model_frozen_during_search(self):
        model = ToyPredictor()
        before = model.state_hash()
        parameter_search(model, [learner("knn")], 2, 2, SearchStrategy(tag="random"), seed=1, n_train=48, n_test=24)
        assert model.state_hash() == before

    def test_gap_equals_mean_of_per_dataset_gaps(self):
        log = parameter_search(
            ToyPredictor(), [learner("logistic_regression")], 3, 4,
            SearchStrategy(tag="random"), seed=9, n_train=48, n_test=24,
        )
        for t in log.trials:
            assert t.gap == pytest.approx(np.mean(t.per_dataset_gaps), abs=1e-12)

    def test_unusable_theta_marks_trial_failed(self, monkeypatch):
        from rtfm import gap as gap_mod
        from rtfm.generator import DegenerateGeneratorError

        def boom(*args, **kwargs):
            raise DegenerateGeneratorError("forced")

        monkeypatch.setattr(gap_mod, "generate_dataset", boom)
        log = parameter_search(ToyPredictor(), [learner("knn")], 2, 2, SearchStrategy(tag="random"), seed=3)
        assert all(t.failed for t in log.trials)
        assert log.surviving() == []
