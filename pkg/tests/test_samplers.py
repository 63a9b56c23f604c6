"""Sampling primitives: stream reproducibility, categorical draws, bridges."""

import numpy as np
import pytest
from scipy import stats

from parismc.samplers import (
    BridgePath,
    RngStream,
    bridge_density,
    bridge_log_density,
    bridge_sample,
    bridge_interior_log_density,
    categorical,
    sample_bridge_interior,
)

from conftest import gen


class TestRngStream:
    def test_identical_counters_replay(self):
        a = RngStream(123).at(4, 7, 2).random(16)
        b = RngStream(123).at(4, 7, 2).random(16)
        assert np.array_equal(a, b)

    def test_distinct_counters_differ(self):
        base = RngStream(123).at(1, 2, 3).random(8)
        for counters in ((2, 2, 3), (1, 3, 3), (1, 2, 4)):
            assert not np.array_equal(base, RngStream(123).at(*counters).random(8))

    def test_distinct_streams_uncorrelated(self):
        a = RngStream(9).at(0, 0, 0).random(20000)
        b = RngStream(9).at(0, 0, 1).random(20000)
        assert abs(np.corrcoef(a, b)[0, 1]) < 0.03

    def test_negative_counter_rejected(self):
        with pytest.raises(ValueError):
            RngStream(1).at(-1)

    def test_long_draws_do_not_collide_with_next_slot(self):
        # slot j consumes many blocks without running into slot j+1
        a = RngStream(5).at(0, 0, 0).random(100000)
        b = RngStream(5).at(0, 0, 1).random(100000)
        assert not np.array_equal(a[4:], b[: len(b) - 4])


class TestCategorical:
    def test_single_support(self):
        draws = categorical([0.0, 3.0, 0.0], gen(0), size=1000)
        assert np.all(draws == 1)

    def test_uniform_frequencies(self):
        draws = categorical([1.0, 1.0, 1.0, 1.0], gen(1), size=100_000)
        counts = np.bincount(draws, minlength=4)
        freq = counts / counts.sum()
        assert np.all(np.abs(freq - 0.25) < 0.01)
        chi2 = np.sum((counts - 25_000.0) ** 2 / 25_000.0)
        assert chi2 < stats.chi2.ppf(0.999, df=3)

    def test_binary_frequency(self):
        draws = categorical([2.0, 6.0], gen(2), size=100_000)
        freq_one = draws.mean()
        assert abs(freq_one - 0.75) < 0.01

    def test_scalar_draw_is_int(self):
        value = categorical([1.0, 1.0], gen(3))
        assert isinstance(value, int)

    def test_fixed_seed_reproduces_sequence(self):
        first = categorical(np.arange(1.0, 9.0), gen(4), size=64)
        second = categorical(np.arange(1.0, 9.0), gen(4), size=64)
        assert np.array_equal(first, second)

    @pytest.mark.parametrize(
        "weights",
        [[0.0, 0.0], [1.0, np.nan], [1.0, np.inf], [1.0, -0.5], []],
    )
    def test_invalid_weights_rejected(self, weights):
        with pytest.raises(ValueError):
            categorical(weights, gen(5), size=3)


class TestBridgeSample:
    def test_single_substep_has_empty_interior(self):
        path = bridge_sample(0.3, -0.7, K=1, eps=0.5, rng=gen(6))
        assert path.interior.shape == (0, 1)
        assert path.K == 1

    def test_zero_substeps_rejected(self):
        with pytest.raises(ValueError):
            bridge_sample(0.0, 0.0, K=0, eps=0.5, rng=gen(7))

    def test_midpoint_marginal_moments(self):
        # K=2 pinned at 0 on both ends: z1 ~ Normal(0, 1/2)
        n = 100_000
        interiors = sample_bridge_interior(
            np.zeros((n, 1)), np.zeros((n, 1)), K=2, eps=1.0, rng=gen(8)
        )
        z1 = interiors[:, 0, 0]
        assert abs(z1.mean()) < 3 * np.sqrt(0.5 / n)
        var = z1.var(ddof=1)
        assert abs(var - 0.5) < 3 * 0.5 * np.sqrt(2.0 / (n - 1))

    def test_zero_noise_limit_is_linear_interpolation(self):
        path = bridge_sample(0.0, 4.0, K=4, eps=1e-12, rng=gen(9))
        assert np.allclose(path.interior[:, 0], [1.0, 2.0, 3.0], atol=1e-5)

    def test_interior_shape_matches_K(self):
        path = bridge_sample(1.0, 2.0, K=6, eps=0.3, rng=gen(10))
        assert path.interior.shape == (5, 1)


class TestBridgeDensity:
    def test_empty_product_is_one(self):
        path = bridge_sample(0.2, 0.9, K=1, eps=0.1, rng=gen(11))
        assert bridge_density(path) == 1.0

    def test_midpoint_closed_form(self):
        path = BridgePath(
            interior=np.array([[0.0]]), x0=0.0, xK=0.0, eps=1.0, K=2
        )
        assert bridge_density(path) == pytest.approx(1.0 / np.sqrt(np.pi), rel=1e-12)

    def test_log_density_is_sum_of_step_logs(self):
        path = bridge_sample(0.5, -1.2, K=5, eps=0.7, rng=gen(12))
        # recompute step by step with scipy
        z = np.concatenate([path.x0, path.interior[:, 0], path.xK])
        total = 0.0
        for j in range(path.K - 1):
            remaining = path.K - j
            mean = z[j] + (path.xK[0] - z[j]) / remaining
            var = path.eps * (remaining - 1) / remaining
            total += stats.norm.logpdf(z[j + 1], mean, np.sqrt(var))
        assert bridge_log_density(path) == pytest.approx(total, rel=1e-12)
        assert np.log(bridge_density(path)) == pytest.approx(total, rel=1e-12)

    def test_zero_variance_off_mean_rejected(self):
        # eps = 0 makes every substep deterministic
        on_mean = BridgePath(np.array([[1.0], [2.0], [3.0]]), 0.0, 4.0, eps=0.0, K=4)
        assert bridge_density(on_mean) == 1.0
        off_mean = BridgePath(np.array([[1.0], [2.5], [3.0]]), 0.0, 4.0, eps=0.0, K=4)
        with pytest.raises(ValueError):
            bridge_density(off_mean)

    def test_inconsistent_interior_rejected(self):
        with pytest.raises(ValueError):
            BridgePath(np.zeros((3, 1)), 0.0, 1.0, eps=0.1, K=3)


class TestBridgeNormalisation:
    def test_importance_weights_against_free_walk_average_one(self):
        # E_bridge[ free-walk density / bridge density ] = 1 since the
        # free-walk density integrates to one over the interior points.
        n, K, eps = 100_000, 4, 0.7
        x0 = np.full((n, 1), 0.3)
        xK = np.full((n, 1), -0.8)
        interiors = sample_bridge_interior(x0, xK, K, eps, gen(13))
        bridge_log = bridge_interior_log_density(interiors, x0, xK, K, eps)
        z = np.concatenate([x0[:, None, :], interiors], axis=1)[:, :, 0]
        walk_log = np.sum(
            stats.norm.logpdf(z[:, 1:], z[:, :-1], np.sqrt(eps)), axis=1
        )
        weights = np.exp(walk_log - bridge_log)
        se = weights.std(ddof=1) / np.sqrt(n)
        assert abs(weights.mean() - 1.0) < 3 * se
