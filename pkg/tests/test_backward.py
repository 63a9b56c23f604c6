"""Backward-index samplers against the exact O(N) law, and statistic updates."""

import numpy as np
import pytest

from parismc import (
    BackwardConfig,
    EstimatorValueError,
    ForwardOutcome,
    IndependentMH,
    Rejection,
    RejectionBudgetError,
    TransitionEstimator,
    bs_update,
    exact_wrap,
    lambda_row,
    sample_backward_index_mh,
    sample_backward_index_rejection,
)
from parismc.backward import _mh_advance, _rejection_batch

from conftest import discrete_model, gen, make_cloud, state_idx

# two ancestors on states 0/1; transition values depend on both endpoints
ELL = np.array([[2.0, 5.0], [6.0, 1.0]])
PROP = np.array([[0.5, 0.5], [0.5, 0.5]])
H = np.array([[0.3, -0.4], [1.2, 0.8]])


def fixture_estimator():
    return exact_wrap(
        lambda x, xn: ELL[state_idx(x), state_idx(xn)],
        bound=lambda xn: ELL.max(axis=0)[state_idx(xn)],
    )


def counting_estimator():
    """Exact-density estimator that records every candidate evaluation."""
    values_seen = []
    base = fixture_estimator()

    def evaluate(z, x, xn):
        out = base.evaluate(z, x, xn)
        values_seen.append(out)
        return out

    est = TransitionEstimator(
        draw_aux=base.draw_aux,
        evaluate=evaluate,
        exact_density=base.exact_density,
        mean_density=base.mean_density,
        bound=base.bound,
    )
    return est, values_seen


class TestLambdaRow:
    def test_single_particle(self):
        cloud = make_cloud([1.0], [0.4])
        row = lambda_row(cloud, [0.0], fixture_estimator())
        assert np.array_equal(row, [1.0])

    def test_constant_density_proportional_to_weights(self):
        cloud = make_cloud([0.0, 1.0, 0.0], [1.0, 2.0, 3.0])
        est = exact_wrap(lambda x, xn: np.full(x.shape[0], 0.7))
        row = lambda_row(cloud, [0.0], est)
        assert np.allclose(row, [1 / 6, 2 / 6, 3 / 6])

    def test_hand_normalisation(self):
        cloud = make_cloud([0.0, 1.0], [1.0, 1.0])
        row = lambda_row(cloud, [0.0], fixture_estimator())
        assert np.allclose(row, [0.25, 0.75])
        row1 = lambda_row(cloud, [1.0], fixture_estimator())
        assert np.allclose(row1, [5 / 6, 1 / 6])

    def test_mean_mode_uses_mean_density(self):
        cloud = make_cloud([0.0, 1.0], [1.0, 1.0])
        est = TransitionEstimator(
            draw_aux=lambda x, xn, rng: None,
            evaluate=lambda z, x, xn: np.ones(x.shape[0]),
            mean_density=lambda x, xn: np.array([1.0, 3.0]),
        )
        assert np.allclose(lambda_row(cloud, [0.0], est, mode="mean"), [0.25, 0.75])
        with pytest.raises(ValueError):
            lambda_row(cloud, [0.0], est, mode="exact")
        with pytest.raises(ValueError):
            lambda_row(cloud, [0.0], est, mode="nope")

    def test_all_zero_numerators_rejected(self):
        cloud = make_cloud([0.0, 1.0], [1.0, 1.0])
        est = exact_wrap(lambda x, xn: np.zeros(x.shape[0]))
        with pytest.raises(ValueError):
            lambda_row(cloud, [0.0], est)


class TestRejectionSampler:
    def test_tight_bound_accepts_first_candidate(self):
        cloud = make_cloud([0.0, 1.0, 1.0], [0.2, 0.8, 1.0])
        est, seen = counting_estimator()
        est = TransitionEstimator(
            draw_aux=est.draw_aux,
            evaluate=lambda z, x, xn: (seen.append(x.shape[0]), np.full(x.shape[0], 4.0))[1],
            exact_density=lambda x, xn: np.full(x.shape[0], 4.0),
            bound=lambda xn: np.full(xn.shape[0], 4.0),
        )
        n_draws = 20_000
        idx, aux = _rejection_batch(cloud, np.zeros((n_draws, 1)), est, gen(0), 10)
        assert sum(seen) == n_draws  # acceptance probability one: no retries
        freq = np.bincount(state_idx(cloud.particles[idx]), minlength=2) / n_draws
        target = np.array([0.2, 1.8]) / 2.0
        assert np.abs(freq - target).sum() / 2 < 0.01

    def test_index_frequencies_match_lambda_row(self):
        cloud = make_cloud([0.0, 1.0], [1.0, 1.0])
        row = lambda_row(cloud, [0.0], fixture_estimator())
        n_draws = 100_000
        idx, _ = _rejection_batch(
            cloud, np.zeros((n_draws, 1)), fixture_estimator(), gen(1), 10**6
        )
        freq = np.bincount(idx, minlength=2) / n_draws
        tv = 0.5 * np.abs(freq - row).sum()
        assert tv < 0.01

    def test_acceptance_rate_matches_closed_form(self):
        # candidates are cat(omega) draws regardless of chunking, so the
        # mean of value/bound over proposed candidates estimates the
        # acceptance mass 0.5 * 2/6 + 0.5 * 6/6 = 2/3
        cloud = make_cloud([0.0, 1.0], [1.0, 1.0])
        est, seen = counting_estimator()
        _rejection_batch(cloud, np.zeros((100_000, 1)), est, gen(2), 10**6)
        ratios = np.concatenate(seen) / 6.0
        assert ratios.size >= 100_000
        se = ratios.std(ddof=1) / np.sqrt(ratios.size)
        assert abs(ratios.mean() - 2.0 / 3.0) < 3 * se

    def test_budget_exhaustion_raises_with_trial_count(self):
        cloud = make_cloud([0.0, 1.0], [1.0, 1.0])
        est = TransitionEstimator(
            draw_aux=lambda x, xn, rng: None,
            evaluate=lambda z, x, xn: np.zeros(x.shape[0]),
            bound=lambda xn: np.ones(xn.shape[0]),
        )
        with pytest.raises(RejectionBudgetError) as err:
            sample_backward_index_rejection(cloud, [0.0], est, gen(3), max_trials=32)
        assert err.value.trials > 32

    def test_missing_bound_rejected(self):
        cloud = make_cloud([0.0, 1.0], [1.0, 1.0])
        est = exact_wrap(lambda x, xn: np.ones(x.shape[0]))
        with pytest.raises(ValueError, match="bound"):
            sample_backward_index_rejection(cloud, [0.0], est, gen(4))

    def test_bound_violation_detected(self):
        cloud = make_cloud([0.0, 1.0], [1.0, 1.0])
        est = TransitionEstimator(
            draw_aux=lambda x, xn, rng: None,
            evaluate=lambda z, x, xn: np.full(x.shape[0], 2.0),
            bound=lambda xn: np.ones(xn.shape[0]),
        )
        with pytest.raises(EstimatorValueError, match="bound"):
            sample_backward_index_rejection(cloud, [0.0], est, gen(5))

    def test_public_call_returns_index_and_payload(self):
        cloud = make_cloud([0.0, 1.0], [1.0, 1.0])
        idx, aux = sample_backward_index_rejection(cloud, [0.0], fixture_estimator(), gen(6))
        assert idx in (0, 1) and aux is None
        # stochastic estimator keeps its accepted auxiliary draw
        est = TransitionEstimator(
            draw_aux=lambda x, xn, rng: rng.uniform(0.5, 1.0, x.shape[0]),
            evaluate=lambda z, x, xn: z,
            bound=lambda xn: np.ones(xn.shape[0]),
        )
        idx, aux = sample_backward_index_rejection(cloud, [0.0], est, gen(7))
        assert np.ndim(aux) == 0 and 0.5 <= float(aux) <= 1.0


class TestMhSampler:
    def test_constant_estimate_gives_weight_law_after_one_step(self):
        cloud = make_cloud([0.0, 1.0, 1.0], [1.0, 1.0, 2.0])
        est = exact_wrap(lambda x, xn: np.full(x.shape[0], 3.0))
        n_chains = 100_000
        idx, values, _ = _mh_advance(
            cloud,
            np.zeros((n_chains, 1)),
            est,
            gen(8),
            steps=1,
            idx=np.zeros(n_chains, dtype=np.intp),
            values=np.full(n_chains, 3.0),
            aux=None,
        )
        freq = np.bincount(idx, minlength=3) / n_chains
        assert 0.5 * np.abs(freq - np.array([0.25, 0.25, 0.5])).sum() < 0.01

    def test_thinned_chain_matches_lambda_row(self):
        cloud = make_cloud([0.0, 1.0], [1.0, 1.0])
        est = fixture_estimator()
        row = lambda_row(cloud, [0.0], est)
        n_samples = 100_000
        state = (0, None)
        rng = gen(9)
        counts = np.zeros(2)
        for _ in range(n_samples):
            state = sample_backward_index_mh(cloud, [0.0], est, state, rng, steps=5)
            counts[state[0]] += 1
        tv = 0.5 * np.abs(counts / n_samples - row).sum()
        assert tv < 0.02

    def test_stationary_initialisation_is_preserved(self):
        cloud = make_cloud([0.0, 1.0], [1.0, 1.0])
        est = fixture_estimator()
        row = lambda_row(cloud, [0.0], est)
        n_chains = 100_000
        init = gen(10).choice(2, size=n_chains, p=row).astype(np.intp)
        values = ELL[state_idx(cloud.particles[init]), 0]
        idx, _, _ = _mh_advance(
            cloud, np.zeros((n_chains, 1)), est, gen(11), 5, init, values, None
        )
        freq = np.bincount(idx, minlength=2) / n_chains
        assert 0.5 * np.abs(freq - row).sum() < 0.02

    def test_single_particle_chain_stays_put(self):
        cloud = make_cloud([0.0], [1.0])
        est = fixture_estimator()
        idx, aux = sample_backward_index_mh(cloud, [0.0], est, (0, None), gen(12), steps=3)
        assert idx == 0 and aux is None

    def test_nonpositive_current_value_rejected(self):
        cloud = make_cloud([0.0, 1.0], [1.0, 1.0])
        est = exact_wrap(lambda x, xn: np.zeros(x.shape[0]))
        with pytest.raises(ValueError):
            sample_backward_index_mh(cloud, [0.0], est, (0, None), gen(13))


class TestBsUpdate:
    def make_pair(self, cloud_states, weights, stats, new_states, M=1, sampler=None):
        cloud = make_cloud(cloud_states, weights, stats=stats)
        outcome = ForwardOutcome(
            new_particles=np.asarray(new_states, dtype=float)[:, None],
            new_weights=np.ones(len(new_states)),
            ancestor_indices=np.zeros(len(new_states), dtype=int),
            aux_payloads=None,
        )
        model = discrete_model(ELL, PROP, h=H)
        config = BackwardConfig(sampler=sampler or Rejection(), M=M)
        return cloud, outcome, model, config

    def test_single_particle_adds_increment(self):
        cloud, outcome, model, config = self.make_pair([1.0], [1.0], [0.7], [0.0], M=1)
        stats = bs_update(cloud, outcome, model, config, gen(14))
        assert stats[0] == pytest.approx(0.7 + H[1, 0])

    def test_zero_increments_stay_zero(self):
        model = discrete_model(ELL, PROP, h=np.zeros((2, 2)))
        cloud = make_cloud([0.0, 1.0], [1.0, 1.0], stats=[0.0, 0.0])
        outcome = ForwardOutcome(
            np.array([[0.0], [1.0]]), np.ones(2), np.zeros(2, dtype=int), None
        )
        stats = bs_update(cloud, outcome, model, BackwardConfig(Rejection(), M=3), gen(15))
        assert np.array_equal(stats, [0.0, 0.0])

    def test_expected_statistic_matches_lambda_weighted_average(self):
        cloud, outcome, model, config = self.make_pair(
            [0.0, 1.0], [1.0, 1.0], [0.5, -1.0], [0.0, 1.0], M=1
        )
        est = fixture_estimator()
        targets = []
        for i, xn in enumerate([0.0, 1.0]):
            row = lambda_row(cloud, [xn], est)
            targets.append(
                float(np.dot(row, np.asarray([0.5, -1.0]) + H[:, int(xn)]))
            )
        reps = 100_000
        rng = gen(16)
        draws = np.empty((reps, 2))
        for k in range(reps):
            draws[k] = bs_update(cloud, outcome, model, config, rng)
        for i in range(2):
            se = draws[:, i].std(ddof=1) / np.sqrt(reps)
            assert abs(draws[:, i].mean() - targets[i]) < 3 * se

    def test_mh_mode_expectation_agrees(self):
        cloud, outcome, model, _ = self.make_pair(
            [0.0, 1.0], [1.0, 1.0], [0.5, -1.0], [0.0, 1.0]
        )
        config = BackwardConfig(IndependentMH(steps_per_sample=8), M=2)
        est = fixture_estimator()
        targets = [
            float(
                np.dot(
                    lambda_row(cloud, [xn], est),
                    np.asarray([0.5, -1.0]) + H[:, int(xn)],
                )
            )
            for xn in (0.0, 1.0)
        ]
        reps = 20_000
        rng = gen(17)
        draws = np.empty((reps, 2))
        for k in range(reps):
            draws[k] = bs_update(cloud, outcome, model, config, rng)
        for i in range(2):
            se = draws[:, i].std(ddof=1) / np.sqrt(reps)
            assert abs(draws[:, i].mean() - targets[i]) < 4 * se

    def test_variance_scales_inversely_with_sample_count(self):
        cloud, outcome, model, _ = self.make_pair(
            [0.0, 1.0], [1.0, 1.0], [4.0, -3.0], [0.0, 1.0]
        )
        reps = 4000
        variances = {}
        for M in (1, 16):
            rng = gen(18, M)
            config = BackwardConfig(Rejection(), M=M)
            draws = np.array(
                [bs_update(cloud, outcome, model, config, rng)[0] for _ in range(reps)]
            )
            variances[M] = draws.var(ddof=1)
        ratio = variances[1] / variances[16]
        assert 8.0 <= ratio <= 32.0

    def test_convex_combination_bound(self):
        rng = gen(19)
        states = rng.integers(0, 2, size=6).astype(float)
        stats = rng.normal(0, 3, size=6)
        cloud = make_cloud(states, rng.uniform(0.5, 1.5, 6), stats=stats)
        outcome = ForwardOutcome(
            rng.integers(0, 2, size=6).astype(float)[:, None],
            np.ones(6),
            np.zeros(6, dtype=int),
            None,
        )
        model = discrete_model(ELL, PROP, h=H)
        for sampler in (Rejection(), IndependentMH(3)):
            out = bs_update(cloud, outcome, model, BackwardConfig(sampler, M=3), gen(20))
            bound = np.abs(stats).max() + np.abs(H).max()
            assert np.all(np.abs(out) <= bound + 1e-12)

    def test_size_mismatch_rejected(self):
        cloud, outcome, model, config = self.make_pair(
            [0.0, 1.0], [1.0, 1.0], [0.0, 0.0], [0.0]
        )
        with pytest.raises(ValueError):
            bs_update(cloud, outcome, model, config, gen(21))

    def test_mh_mode_deterministic_given_seed(self):
        cloud, outcome, model, _ = self.make_pair(
            [0.0, 1.0], [1.0, 1.0], [0.5, -1.0], [0.0, 1.0]
        )
        config = BackwardConfig(IndependentMH(5), M=2)
        a = bs_update(cloud, outcome, model, config, gen(22))
        b = bs_update(cloud, outcome, model, config, gen(22))
        assert np.array_equal(a, b)
