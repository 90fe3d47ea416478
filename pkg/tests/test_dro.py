import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rtfm.dro import build_dro_weights, entropy, softmax_weights, solve_eta


def grid_scan_eta(gaps, h_min, lo=0.0, hi=50.0, step=1e-4):
    """Independent oracle: dense scan for the eta matching the entropy floor."""
    etas = np.arange(lo, hi, step)
    best_eta, best_err = 0.0, np.inf
    for e in etas:
        err = abs(entropy(softmax_weights(gaps, e)) - h_min)
        if err < best_err:
            best_eta, best_err = e, err
    return best_eta


def bisect_alternative(gaps, h_min, lo=0.0, hi=64.0, iters=300):
    """Second, independently-written bisection from a different bracket."""
    gaps = np.asarray(gaps, dtype=np.float64)
    while entropy(softmax_weights(gaps, hi)) > h_min:
        hi *= 4.0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if entropy(softmax_weights(gaps, mid)) > h_min:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


class TestSoftmaxWeights:
    def test_equal_gaps_uniform(self):
        np.testing.assert_allclose(softmax_weights([0.0, 0.0], 5.0), [0.5, 0.5], atol=1e-15)

    def test_log_two_ratio(self):
        q = softmax_weights([math.log(2.0), 0.0], 1.0)
        np.testing.assert_allclose(q, [2.0 / 3.0, 1.0 / 3.0], atol=1e-15)

    def test_eta_zero_uniform(self):
        np.testing.assert_allclose(softmax_weights([1.0, 0.0], 0.0), [0.5, 0.5], atol=1e-15)

    def test_rejects_bad_input(self):
        with pytest.raises(ValueError):
            softmax_weights([], 1.0)
        with pytest.raises(ValueError):
            softmax_weights([np.inf, 0.0], 1.0)
        with pytest.raises(ValueError):
            softmax_weights([1.0, 0.0], -1.0)

    def test_extreme_eta_no_overflow(self):
        q = softmax_weights([100.0, 0.0], 1e5)
        assert q[0] == pytest.approx(1.0)
        assert np.isfinite(q).all()


class TestEntropy:
    def test_uniform_max(self):
        assert entropy(np.full(100, 0.01)) == pytest.approx(math.log(100), abs=1e-12)

    def test_one_hot_zero(self):
        assert entropy([1.0, 0.0, 0.0]) == 0.0

    def test_bernoulli_point_eight(self):
        expected = -(0.8 * math.log(0.8) + 0.2 * math.log(0.2))
        assert expected == pytest.approx(0.500402, abs=1e-6)
        assert entropy([0.8, 0.2]) == pytest.approx(expected, abs=1e-15)


class TestSolveEta:
    def test_max_entropy_floor_gives_zero(self):
        assert solve_eta([1.0, 0.0], math.log(2.0)) == 0.0

    def test_bernoulli_half_entropy(self):
        eta = solve_eta([1.0, 0.0], 0.5)
        oracle = grid_scan_eta(np.array([1.0, 0.0]), 0.5)
        assert abs(eta - oracle) <= 1e-3
        assert abs(eta - 1.386) <= 0.01
        q = softmax_weights([1.0, 0.0], eta)
        np.testing.assert_allclose(q, [0.8, 0.2], atol=5e-3)
        assert entropy(q) == pytest.approx(0.5, abs=1e-9)

    def test_constant_gaps_give_zero(self):
        assert solve_eta([3.0, 3.0, 3.0], 0.5) == 0.0

    def test_invalid_floor(self):
        with pytest.raises(ValueError):
            solve_eta([1.0, 0.0], math.log(2.0) + 0.1)
        with pytest.raises(ValueError):
            solve_eta([1.0, np.nan], 0.5)

    def test_near_constant_gaps_warn_and_cap(self):
        with pytest.warns(RuntimeWarning):
            eta = solve_eta([1e-300, 0.0], 1e-12)
        assert eta > 1e6

    @settings(max_examples=60, deadline=None)
    @given(st.integers(2, 60), st.integers(0, 2**32 - 1), st.floats(0.05, 0.95))
    def test_floor_attained_on_random_gaps(self, n, seed, c):
        gaps = np.random.default_rng(seed).normal(size=n)
        h_min = c * math.log(n)
        eta = solve_eta(gaps, h_min)
        assert abs(entropy(softmax_weights(gaps, eta)) - h_min) <= 1e-9


class TestProperties:
    def test_entropy_strictly_decreasing_in_eta(self):
        rng = np.random.default_rng(7)
        for _ in range(100):
            gaps = rng.normal(size=int(rng.integers(2, 30)))
            etas = np.sort(rng.uniform(0.01, 20.0, size=4))
            hs = [entropy(softmax_weights(gaps, e)) for e in etas]
            assert all(a > b for a, b in zip(hs, hs[1:]))

    @settings(max_examples=40, deadline=None)
    @given(
        st.lists(st.floats(-5, 5), min_size=2, max_size=10),
        st.floats(-10, 10),
        st.floats(0, 20),
    )
    def test_shift_invariance(self, gaps, shift, eta):
        q1 = softmax_weights(np.asarray(gaps), eta)
        q2 = softmax_weights(np.asarray(gaps) + shift, eta)
        np.testing.assert_allclose(q1, q2, atol=1e-12)

    def test_scale_invariance_with_rescaled_eta(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            gaps = rng.normal(size=8)
            h_min = 0.6 * math.log(8)
            for s in (0.5, 2.0, 7.3):
                q1 = softmax_weights(gaps, solve_eta(gaps, h_min))
                q2 = softmax_weights(s * gaps, solve_eta(s * gaps, h_min))
                np.testing.assert_allclose(q1, q2, atol=1e-8)

    def test_bisection_unique_across_brackets(self):
        rng = np.random.default_rng(13)
        for _ in range(20):
            gaps = rng.normal(size=10)
            h_min = 0.4 * math.log(10)
            tol = 1e-9
            eta1 = solve_eta(gaps, h_min, tol)
            eta2 = bisect_alternative(gaps, h_min)
            # both attain the floor; entropy is strictly monotone so the
            # crossing is unique and the etas must coincide
            assert abs(entropy(softmax_weights(gaps, eta2)) - h_min) <= 10 * tol
            assert abs(eta1 - eta2) <= 1e-5 * max(1.0, eta1)

    def test_simplex_grid_optimality_n3(self):
        rng = np.random.default_rng(17)
        step = 0.005
        grid_1d = np.arange(0.0, 1.0 + step / 2, step)
        q1, q2 = np.meshgrid(grid_1d, grid_1d)
        keep = q1 + q2 <= 1.0 + 1e-12
        q = np.stack([q1[keep], q2[keep], 1.0 - q1[keep] - q2[keep]], axis=1)
        q = np.clip(q, 0.0, 1.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            lg = np.where(q > 0, np.log(np.where(q > 0, q, 1.0)), 0.0)
        grid_entropy = -(q * lg).sum(axis=1)
        for _ in range(10):
            gaps = rng.normal(size=3)
            h_min = rng.uniform(0.2, 0.9) * math.log(3)
            feasible = q[grid_entropy >= h_min]
            grid_best = (feasible @ gaps).max()
            eta = solve_eta(gaps, h_min)
            achieved = softmax_weights(gaps, eta) @ gaps
            assert achieved >= grid_best - 1e-3


class TestBuildDroWeights:
    def test_assembles_and_validates(self):
        q = build_dro_weights(["a", "b", "c"], [0.5, 0.1, -0.2], c_frac=0.5)
        q.validate()
        assert q.h_min == pytest.approx(0.5 * math.log(3))
        assert q.entropy >= q.h_min - 1e-9

    def test_single_trial_point_mass(self):
        q = build_dro_weights(["only"], [1.0], c_frac=0.5)
        assert q.weights.tolist() == [1.0]
        assert q.eta == 0.0

    def test_bad_c_frac(self):
        with pytest.raises(ValueError):
            build_dro_weights(["a"], [1.0], c_frac=1.0)
