"""Core path-model abstractions shared by every sampling algorithm.

A model is a sequence of unnormalised transition kernels acting on a fixed
initial measure; the engine only ever touches it through per-step bundles of
callables (adjustment weights, proposal kernel, transition-density estimator,
additive increment).  All callables are vectorised over a leading batch axis:
particle positions are arrays of shape ``(N, d)`` and per-particle values are
arrays of shape ``(N,)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

__all__ = [
    "DegenerateCloudError",
    "EstimatorValueError",
    "TransitionEstimator",
    "ProposalKernel",
    "ModelStep",
    "ModelSpec",
    "ParticleCloud",
    "init_cloud",
    "weighted_mean",
    "smoothing_estimate",
]


class DegenerateCloudError(RuntimeError):
    """Every particle carries zero weight; the recursion cannot continue."""


class EstimatorValueError(RuntimeError):
    """A model callable produced a negative or non-finite value."""


@dataclass(frozen=True)
class TransitionEstimator:
    """Simulation-based estimate of an unnormalised transition density.

    ``draw_aux(x, x_next, rng)`` draws the auxiliary variable; ``evaluate(z,
    x, x_next)`` turns it into a nonnegative density estimate and must be
    deterministic given ``z``.  Auxiliary payloads are opaque to the engine
    except that non-None payloads are arrays indexed along a leading batch
    axis (so accepted candidates can be gathered).

    ``exact_density`` is present only when the true density is tractable and
    enables the ideal forward update; ``mean_density`` is the closed-form
    expectation of the estimate where known (used by test oracles only);
    ``bound(x_next)`` dominates every possible estimate value at ``x_next``
    and enables rejection backward sampling.

    ``cloud_bound(particles, x_next_rows)``, when present, returns a tighter
    dominating constant valid for the given source particles only.  Rejection
    sampling proposes sources from the current cloud, so any bound that
    dominates over that cloud keeps the sampler exact while the acceptance
    rate can be orders of magnitude better than under the uniform bound
    (which must cover source states no particle occupies).
    """

    draw_aux: Callable[[np.ndarray, np.ndarray, np.random.Generator], Optional[np.ndarray]]
    evaluate: Callable[[Optional[np.ndarray], np.ndarray, np.ndarray], np.ndarray]
    exact_density: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None
    mean_density: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None
    bound: Optional[Callable[[np.ndarray], np.ndarray]] = None
    cloud_bound: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None


@dataclass(frozen=True)
class ProposalKernel:
    """Sampling/density pair for the particle mutation kernel."""

    sample: Callable[[np.ndarray, np.random.Generator], np.ndarray]
    density: Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class ModelStep:
    """Everything the engine needs to advance one time step.

    ``adjustment`` biases ancestor selection (strictly positive),
    ``proposal`` mutates selected ancestors and must dominate the transition
    kernel, ``estimator`` scores the move, and ``increment`` is the additive
    functional term accumulated across the step.
    """

    adjustment: Callable[[np.ndarray], np.ndarray]
    proposal: ProposalKernel
    estimator: TransitionEstimator
    increment: Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class ModelSpec:
    """A full path model: initial law plus a lazy per-step provider.

    ``initial_sampler(N, rng)`` draws N particles from the instrumental
    initial law and ``initial_weight`` is the (bounded, nonnegative)
    density of the target initial measure with respect to it.  ``step(n)``
    returns the :class:`ModelStep` for time n; providers may build steps on
    the fly from streaming observations.
    """

    dim: int
    initial_sampler: Callable[[int, np.random.Generator], np.ndarray]
    initial_weight: Callable[[np.ndarray], np.ndarray]
    step: Callable[[int], ModelStep]


def _as_particles(x, dim: int | None = None) -> np.ndarray:
    out = np.asarray(x, dtype=float)
    if out.ndim == 1:
        out = out[:, None]
    if out.ndim != 2:
        raise ValueError("particles must form an (N, d) array")
    if dim is not None and out.shape[1] != dim:
        raise ValueError(f"expected state dimension {dim}, got {out.shape[1]}")
    return out


@dataclass(frozen=True)
class ParticleCloud:
    """Immutable weighted particle sample with backward statistics.

    ``particles`` is (N, d), ``weights`` and ``stats`` are (N,).  Weights
    are kept unnormalised; normalisation happens only inside estimators.
    Construction validates that weights are finite, nonnegative, of positive
    total mass, and that statistics vanish at time zero.
    """

    particles: np.ndarray
    weights: np.ndarray
    stats: np.ndarray
    time_index: int

    def __post_init__(self):
        particles = _as_particles(self.particles)
        weights = np.asarray(self.weights, dtype=float)
        stats = np.asarray(self.stats, dtype=float)
        n = particles.shape[0]
        if n < 1:
            raise ValueError("a cloud needs at least one particle")
        if weights.shape != (n,) or stats.shape != (n,):
            raise ValueError("particles, weights and stats must share length")
        if not np.all(np.isfinite(weights)):
            raise EstimatorValueError("non-finite particle weights")
        if np.any(weights < 0):
            raise EstimatorValueError("negative particle weights")
        if not np.all(np.isfinite(stats)):
            raise EstimatorValueError("non-finite backward statistics")
        if weights.sum() <= 0:
            raise DegenerateCloudError(
                f"all {n} particle weights are zero at time {self.time_index}"
            )
        if self.time_index < 0:
            raise ValueError("time_index must be nonnegative")
        if self.time_index == 0 and np.any(stats != 0):
            raise ValueError("backward statistics must be zero at time 0")
        for arr in (particles, weights, stats):
            arr.setflags(write=False)
        object.__setattr__(self, "particles", particles)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "stats", stats)

    @property
    def num_particles(self) -> int:
        return self.particles.shape[0]

    @property
    def dim(self) -> int:
        return self.particles.shape[1]

    @property
    def total_weight(self) -> float:
        return float(self.weights.sum())


def init_cloud(model: ModelSpec, N: int, rng: np.random.Generator) -> ParticleCloud:
    """Draw the time-zero cloud: particles from the initial proposal, weights
    from the initial density ratio, statistics at zero."""
    if N < 1:
        raise ValueError("N must be at least 1")
    particles = _as_particles(model.initial_sampler(N, rng), model.dim)
    if particles.shape[0] != N:
        raise ValueError("initial sampler returned the wrong number of particles")
    weights = np.asarray(model.initial_weight(particles), dtype=float)
    if weights.shape != (N,):
        raise ValueError("initial weight must return one value per particle")
    if not np.all(np.isfinite(weights)) or np.any(weights < 0):
        raise EstimatorValueError("initial weights must be finite and nonnegative")
    if weights.sum() <= 0:
        raise DegenerateCloudError("degenerate initialization: all initial weights are zero")
    return ParticleCloud(
        particles=particles,
        weights=weights,
        stats=np.zeros(N),
        time_index=0,
    )


def weighted_mean(cloud: ParticleCloud, f: Callable[[np.ndarray], np.ndarray]) -> float:
    """Self-normalised estimate of the filter expectation of ``f``."""
    values = np.asarray(f(cloud.particles), dtype=float)
    if values.shape != (cloud.num_particles,):
        raise ValueError("f must return one value per particle")
    return float(np.dot(cloud.weights, values) / cloud.total_weight)


def smoothing_estimate(cloud: ParticleCloud) -> float:
    """Self-normalised smoothing estimate: the weighted mean of the backward
    statistics carried by the cloud."""
    return float(np.dot(cloud.weights, cloud.stats) / cloud.total_weight)
