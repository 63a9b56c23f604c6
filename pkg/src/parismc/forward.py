"""Forward sampling: mutate the particle cloud one step ahead.

Both updates draw, for each slot i, an ancestor index from the
adjustment-weighted categorical law, move the selected ancestor through the
proposal kernel, and reweight by the (estimated or exact) transition density
over the adjusted proposal density.  ``fs_update`` requires a tractable
transition density; ``pmfs_update`` scores the move with a drawn density
estimate instead and keeps the auxiliary draws for diagnostics.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .model import (
    EstimatorValueError,
    ModelSpec,
    ModelStep,
    ParticleCloud,
    _as_particles,
)
from .samplers import categorical

__all__ = ["ForwardOutcome", "fs_update", "pmfs_update"]


@dataclass(frozen=True)
class ForwardOutcome:
    """One forward-sampling pass: new positions, weights, ancestry.

    ``aux_payloads`` holds the per-slot auxiliary draws in pseudo-marginal
    mode (None in ideal mode or for no-op estimators).
    """

    new_particles: np.ndarray
    new_weights: np.ndarray
    ancestor_indices: np.ndarray
    aux_payloads: Optional[np.ndarray]

    def __post_init__(self):
        particles = _as_particles(self.new_particles)
        weights = np.asarray(self.new_weights, dtype=float)
        idx = np.asarray(self.ancestor_indices)
        n = particles.shape[0]
        if weights.shape != (n,) or idx.shape != (n,):
            raise ValueError("forward outcome arrays must share length")
        if not np.all(np.isfinite(weights)) or np.any(weights < 0):
            raise EstimatorValueError("forward weights must be finite and nonnegative")
        if idx.size and (idx.min() < 0 or idx.max() >= n):
            raise ValueError("ancestor indices out of range")
        object.__setattr__(self, "new_particles", particles)
        object.__setattr__(self, "new_weights", weights)
        object.__setattr__(self, "ancestor_indices", idx.astype(np.intp))


def _select_and_propose(cloud: ParticleCloud, step: ModelStep, rng: np.random.Generator):
    adj = np.asarray(step.adjustment(cloud.particles), dtype=float)
    if adj.shape != (cloud.num_particles,):
        raise ValueError("adjustment must return one value per particle")
    if np.any(adj <= 0) or not np.all(np.isfinite(adj)):
        raise EstimatorValueError("adjustment weights must be finite and positive")
    idx = categorical(adj * cloud.weights, rng, size=cloud.num_particles)
    parents = cloud.particles[idx]
    new = _as_particles(step.proposal.sample(parents, rng), cloud.dim)
    if new.shape[0] != cloud.num_particles:
        raise ValueError("proposal returned the wrong number of particles")
    dens = np.asarray(step.proposal.density(parents, new), dtype=float)
    if np.any(dens <= 0) or not np.all(np.isfinite(dens)):
        raise EstimatorValueError("proposal density must be finite and positive at its own draws")
    return idx, parents, new, adj[idx] * dens


def _check_density_values(values: np.ndarray, what: str) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(values)) or np.any(values < 0):
        raise EstimatorValueError(f"{what} returned a negative or non-finite value")
    return values


def fs_update(cloud: ParticleCloud, model: ModelSpec, rng: np.random.Generator) -> ForwardOutcome:
    """Ideal forward update; needs ``estimator.exact_density``."""
    step = model.step(cloud.time_index)
    if step.estimator.exact_density is None:
        raise ValueError(
            "transition density is not tractable for this model; use pmfs_update"
        )
    idx, parents, new, denom = _select_and_propose(cloud, step, rng)
    dens = _check_density_values(
        step.estimator.exact_density(parents, new), "exact transition density"
    )
    return ForwardOutcome(
        new_particles=new,
        new_weights=dens / denom,
        ancestor_indices=idx,
        aux_payloads=None,
    )


def pmfs_update(cloud: ParticleCloud, model: ModelSpec, rng: np.random.Generator) -> ForwardOutcome:
    """Pseudo-marginal forward update: the weight uses a drawn estimate of
    the transition density; auxiliary draws are retained in the outcome."""
    step = model.step(cloud.time_index)
    idx, parents, new, denom = _select_and_propose(cloud, step, rng)
    aux = step.estimator.draw_aux(parents, new, rng)
    values = _check_density_values(
        step.estimator.evaluate(aux, parents, new), "transition density estimate"
    )
    return ForwardOutcome(
        new_particles=new,
        new_weights=values / denom,
        ancestor_indices=idx,
        aux_payloads=aux,
    )
