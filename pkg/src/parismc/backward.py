"""Backward-statistic updates via sampled backward indices.

After a forward pass, each new particle refreshes its additive statistic by
averaging ``M`` draws of (previous statistic + increment) over backward
indices J distributed as

    Lambda(i, j) proportional to  weight_j * density(xi_j, x_next_i),

with the density replaced by a drawn estimate in the pseudo-marginal case.
Two samplers avoid the O(N) normalisation of that law: rejection sampling
against a dominating bound on the estimate, and an independent-proposal
Metropolis-Hastings chain.  ``lambda_row`` computes the normalised row
directly and serves as the O(N) test oracle.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .forward import ForwardOutcome, _check_density_values
from .model import EstimatorValueError, ModelSpec, ParticleCloud, TransitionEstimator
from .samplers import CategoricalSampler, categorical

__all__ = [
    "Rejection",
    "IndependentMH",
    "BackwardConfig",
    "RejectionBudgetError",
    "lambda_row",
    "sample_backward_index_rejection",
    "sample_backward_index_mh",
    "bs_update",
]

DEFAULT_MAX_TRIALS = 1_000_000


class RejectionBudgetError(RuntimeError):
    """Rejection sampling exhausted its trial budget (bound too loose)."""

    def __init__(self, trials: int, max_trials: int):
        super().__init__(
            f"backward rejection sampling used {trials} trials without acceptance "
            f"(budget {max_trials}); the estimator bound is too loose"
        )
        self.trials = trials
        self.max_trials = max_trials


@dataclass(frozen=True)
class Rejection:
    """Rejection sampler settings; requires the estimator to carry a bound."""

    max_trials: int = DEFAULT_MAX_TRIALS

    def __post_init__(self):
        if self.max_trials < 1:
            raise ValueError("max_trials must be positive")


@dataclass(frozen=True)
class IndependentMH:
    """Independent-proposal Metropolis-Hastings settings.

    Each retained sample is separated from the previous one by
    ``steps_per_sample`` accept/reject transitions (skeleton thinning).
    """

    steps_per_sample: int = 5

    def __post_init__(self):
        if self.steps_per_sample < 1:
            raise ValueError("steps_per_sample must be at least 1")


@dataclass(frozen=True)
class BackwardConfig:
    """Choice of backward index sampler plus the per-particle sample count M."""

    sampler: Union[Rejection, IndependentMH] = field(default_factory=Rejection)
    M: int = 2

    def __post_init__(self):
        if self.M < 1:
            raise ValueError("M must be at least 1")


def lambda_row(
    cloud: ParticleCloud,
    x_next,
    estimator: TransitionEstimator,
    mode: str = "exact",
) -> np.ndarray:
    """Exact backward-index law for one target point, as a probability vector.

    ``mode='exact'`` scores ancestors with the tractable density,
    ``mode='mean'`` with the closed-form expectation of the estimate (the law
    actually targeted by the pseudo-marginal samplers).  O(N); intended for
    oracles and tests, not the production update.
    """
    if mode == "exact":
        density = estimator.exact_density
        if density is None:
            raise ValueError("lambda_row mode='exact' needs estimator.exact_density")
    elif mode == "mean":
        density = estimator.mean_density
        if density is None:
            raise ValueError("lambda_row mode='mean' needs estimator.mean_density")
    else:
        raise ValueError(f"unknown lambda_row mode {mode!r}")
    x_next = np.asarray(x_next, dtype=float).reshape(1, -1)
    targets = np.broadcast_to(x_next, (cloud.num_particles, x_next.shape[1]))
    values = _check_density_values(
        density(cloud.particles, targets), "backward density"
    )
    numerators = cloud.weights * values
    total = numerators.sum()
    if total <= 0:
        raise ValueError("all backward-law numerators vanish at this target point")
    return numerators / total


def _estimator_bound(
    estimator: TransitionEstimator, particles: np.ndarray, targets: np.ndarray
) -> np.ndarray:
    if estimator.bound is None:
        raise ValueError("rejection backward sampling needs estimator.bound")
    if estimator.cloud_bound is not None:
        c = np.asarray(estimator.cloud_bound(particles, targets), dtype=float)
    else:
        c = np.asarray(estimator.bound(targets), dtype=float)
    c = np.broadcast_to(c, (targets.shape[0],))
    if np.any(c <= 0) or not np.all(np.isfinite(c)):
        raise EstimatorValueError("estimator bound must be finite and positive")
    return c


def _rejection_batch(
    cloud: ParticleCloud,
    targets: np.ndarray,
    estimator: TransitionEstimator,
    rng: np.random.Generator,
    max_trials: int,
):
    """Draw one backward index (and auxiliary payload) per target row.

    Each pending row consumes a chunk of independent candidates per pass and
    keeps its first acceptance (identical in law to one-at-a-time rejection);
    the chunk size doubles so stragglers with low acceptance probability cost
    O(log) passes instead of one pass per trial.
    """
    B = targets.shape[0]
    bound = _estimator_bound(estimator, cloud.particles, targets)
    proposal = CategoricalSampler(cloud.weights)
    indices = np.empty(B, dtype=np.intp)
    aux_store = None
    pending = np.arange(B)
    trials = np.zeros(B, dtype=np.int64)
    chunk = 1
    while pending.size:
        P = pending.size
        cand = proposal.draw(rng, size=P * chunk)
        parents = cloud.particles[cand]
        target_rows = np.repeat(targets[pending], chunk, axis=0)
        aux = estimator.draw_aux(parents, target_rows, rng)
        values = _check_density_values(
            estimator.evaluate(aux, parents, target_rows), "transition density estimate"
        )
        c = np.repeat(bound[pending], chunk)
        if np.any(values > c * (1 + 1e-12)):
            raise EstimatorValueError("estimator value exceeded its declared bound")
        accept = (rng.random(P * chunk) * c < values).reshape(P, chunk)
        hit_any = accept.any(axis=1)
        first = np.argmax(accept, axis=1)
        trials[pending] += np.where(hit_any, first + 1, chunk)
        if np.any(trials > max_trials):
            raise RejectionBudgetError(
                trials=int(trials.max()), max_trials=max_trials
            )
        rows = pending[hit_any]
        flat = np.flatnonzero(hit_any) * chunk + first[hit_any]
        indices[rows] = cand[flat]
        if aux is not None:
            if aux_store is None:
                aux_store = np.empty((B,) + aux.shape[1:], dtype=aux.dtype)
            aux_store[rows] = aux[flat]
        pending = pending[~hit_any]
        chunk = min(2 * chunk, 256)
    return indices, aux_store


def sample_backward_index_rejection(
    cloud: ParticleCloud,
    x_next,
    estimator: TransitionEstimator,
    rng: np.random.Generator,
    max_trials: int = DEFAULT_MAX_TRIALS,
):
    """Draw one backward index by rejection: propose J from the weight
    categorical, draw the auxiliary variable, accept with estimate/bound.

    Returns ``(index, aux_payload)``; the accepted pair is distributed as
    the extended backward law whose index marginal is ``lambda_row`` (mean
    mode for stochastic estimators, exact mode when they coincide).
    """
    targets = np.asarray(x_next, dtype=float).reshape(1, -1)
    indices, aux = _rejection_batch(cloud, targets, estimator, rng, max_trials)
    return int(indices[0]), (None if aux is None else aux[0])


def _mh_advance(
    cloud: ParticleCloud,
    targets: np.ndarray,
    estimator: TransitionEstimator,
    rng: np.random.Generator,
    steps: int,
    idx: np.ndarray,
    values: np.ndarray,
    aux,
):
    """Advance B independent-proposal MH chains ``steps`` transitions."""
    B = targets.shape[0]
    proposal = CategoricalSampler(cloud.weights)
    idx = idx.copy()
    values = values.copy()
    aux = None if aux is None else aux.copy()
    for _ in range(steps):
        cand = proposal.draw(rng, size=B)
        cand_aux = estimator.draw_aux(cloud.particles[cand], targets, rng)
        cand_values = _check_density_values(
            estimator.evaluate(cand_aux, cloud.particles[cand], targets),
            "transition density estimate",
        )
        # acceptance 1 ^ (candidate value / current value)
        accept = rng.random(B) * values < cand_values
        idx[accept] = cand[accept]
        values[accept] = cand_values[accept]
        if cand_aux is not None:
            if aux is None:
                aux = np.empty((B,) + cand_aux.shape[1:], dtype=cand_aux.dtype)
            aux[accept] = cand_aux[accept]
    return idx, values, aux


def sample_backward_index_mh(
    cloud: ParticleCloud,
    x_next,
    estimator: TransitionEstimator,
    current,
    rng: np.random.Generator,
    steps: int = 5,
):
    """Run ``steps`` independent-proposal MH transitions from ``current``.

    ``current`` is an ``(index, aux_payload)`` pair whose stored estimate
    must be positive.  The invariant law of the chain is the extended
    backward law; returns the final ``(index, aux_payload)`` state.
    """
    if steps < 1:
        raise ValueError("steps must be at least 1")
    targets = np.asarray(x_next, dtype=float).reshape(1, -1)
    cur_idx, cur_aux = current
    idx = np.asarray([cur_idx], dtype=np.intp)
    aux = None if cur_aux is None else np.asarray(cur_aux)[None, ...]
    values = _check_density_values(
        estimator.evaluate(aux, cloud.particles[idx], targets),
        "transition density estimate",
    )
    if values[0] <= 0:
        raise ValueError("MH backward sampling needs a current state with positive estimate")
    idx, values, aux = _mh_advance(
        cloud, targets, estimator, rng, steps, idx, values, aux
    )
    return int(idx[0]), (None if aux is None else aux[0])


def _stat_terms(cloud: ParticleCloud, idx: np.ndarray, targets: np.ndarray, increment):
    inc = np.asarray(increment(cloud.particles[idx], targets), dtype=float)
    return cloud.stats[idx] + inc


def bs_update(
    cloud_n: ParticleCloud,
    outcome: ForwardOutcome,
    model: ModelSpec,
    config: BackwardConfig,
    rng: np.random.Generator,
) -> np.ndarray:
    """Refresh the backward statistics for every new particle.

    For each new particle, draws ``config.M`` backward indices with the
    configured sampler and averages previous statistic plus increment over
    them.  Rejection draws are mutually independent; MH draws are the
    thinned states of a single chain warm-started from a fresh proposal
    draw.  Returns the (N,) array of updated statistics.
    """
    N = cloud_n.num_particles
    if outcome.new_particles.shape[0] != N:
        raise ValueError("cloud and forward outcome sizes disagree")
    step = model.step(cloud_n.time_index)
    estimator = step.estimator
    targets = outcome.new_particles
    M = config.M

    if isinstance(config.sampler, Rejection):
        # One flat batch of N*M independent draws, target i repeated M times.
        flat_targets = np.repeat(targets, M, axis=0)
        idx, _ = _rejection_batch(
            cloud_n, flat_targets, estimator, rng, config.sampler.max_trials
        )
        terms = _stat_terms(cloud_n, idx, flat_targets, step.increment)
        new_stats = terms.reshape(N, M).mean(axis=1)
    elif isinstance(config.sampler, IndependentMH):
        steps = config.sampler.steps_per_sample
        idx = categorical(cloud_n.weights, rng, size=N)
        aux = estimator.draw_aux(cloud_n.particles[idx], targets, rng)
        values = _check_density_values(
            estimator.evaluate(aux, cloud_n.particles[idx], targets),
            "transition density estimate",
        )
        acc = np.zeros(N)
        for _ in range(M):
            idx, values, aux = _mh_advance(
                cloud_n, targets, estimator, rng, steps, idx, values, aux
            )
            acc += _stat_terms(cloud_n, idx, targets, step.increment)
        new_stats = acc / M
    else:
        raise TypeError(f"unknown backward sampler {config.sampler!r}")

    if not np.all(np.isfinite(new_stats)):
        raise EstimatorValueError("backward update produced non-finite statistics")
    return new_stats
