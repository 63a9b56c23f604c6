"""Shared fixtures: counter-keyed generators and small discrete models whose
forward/backward laws can be enumerated exactly."""

from __future__ import annotations

import numpy as np
import pytest

from parismc import ModelSpec, ModelStep, ParticleCloud, ProposalKernel, exact_wrap
from parismc.samplers import RngStream


def gen(seed: int, time_index: int = 0, particle_index: int = 0, draw_index: int = 0):
    """Fresh deterministic generator for a test."""
    return RngStream(seed).at(time_index, particle_index, draw_index)


def state_idx(x: np.ndarray) -> np.ndarray:
    """Particles of discrete test models carry their state index as a float."""
    return np.rint(x[:, 0]).astype(np.intp)


def discrete_model(ell, prop, theta=None, h=None, init=None) -> ModelSpec:
    """Stationary finite-state model with arbitrary adjustment and proposal.

    ``ell[i, j]`` are the unnormalised transition-kernel values (w.r.t.
    counting measure), ``prop`` the row-stochastic proposal, ``theta`` the
    adjustment values, ``h`` the additive increments.
    """
    ell = np.asarray(ell, dtype=float)
    prop = np.asarray(prop, dtype=float)
    S = ell.shape[0]
    theta = np.ones(S) if theta is None else np.asarray(theta, dtype=float)
    h = np.zeros((S, S)) if h is None else np.asarray(h, dtype=float)
    init = np.full(S, 1.0 / S) if init is None else np.asarray(init, dtype=float)
    prop_cdf = np.cumsum(prop, axis=1)
    init_cdf = np.cumsum(init)

    def sample(parents, rng):
        rows = prop_cdf[state_idx(parents)]
        u = rng.random(parents.shape[0]) * rows[:, -1]
        return np.sum(rows <= u[:, None], axis=1).astype(float)[:, None]

    step = ModelStep(
        adjustment=lambda x: theta[state_idx(x)],
        proposal=ProposalKernel(
            sample=sample,
            density=lambda parents, new: prop[state_idx(parents), state_idx(new)],
        ),
        estimator=exact_wrap(
            lambda x, x_next: ell[state_idx(x), state_idx(x_next)],
            bound=lambda x_next: ell.max(axis=0)[state_idx(x_next)],
        ),
        increment=lambda x, x_next: h[state_idx(x), state_idx(x_next)],
    )

    def initial_sampler(N, rng):
        u = rng.random(N) * init_cdf[-1]
        return np.sum(init_cdf <= u[:, None], axis=1).astype(float)[:, None]

    return ModelSpec(
        dim=1,
        initial_sampler=initial_sampler,
        initial_weight=lambda x: np.ones(x.shape[0]),
        step=lambda n: step,
    )


def make_cloud(states, weights, stats=None, time_index=1) -> ParticleCloud:
    states = np.asarray(states, dtype=float)
    weights = np.asarray(weights, dtype=float)
    stats = np.zeros_like(weights) if stats is None else np.asarray(stats, dtype=float)
    return ParticleCloud(states[:, None], weights, stats, time_index)


def forward_slot_law(cloud_states, cloud_weights, ell, prop, theta):
    """Exact per-slot law of (ancestor, new state) and the slot weights.

    Returns ``(p, w)`` where ``p[i, j]`` is the probability that a slot picks
    ancestor i and proposes state j, and ``w[i, j]`` the importance weight it
    would then carry.
    """
    idx = np.rint(np.asarray(cloud_states, dtype=float)).astype(int)
    weights = np.asarray(cloud_weights, dtype=float)
    sel = weights * theta[idx]
    sel = sel / sel.sum()
    p = sel[:, None] * prop[idx, :]
    w = ell[idx, :] / (theta[idx][:, None] * prop[idx, :])
    return p, w


def enumerate_weighted_mean(p, w, f_vals, num_slots):
    """E[self-normalised estimate] by enumerating all slot-outcome tuples."""
    flat_p = p.ravel()
    flat_w = w.ravel()
    flat_f = np.tile(np.asarray(f_vals, dtype=float), p.shape[0])
    total = 0.0
    idx = np.ndindex(*([flat_p.size] * num_slots))
    for combo in idx:
        prob = np.prod(flat_p[list(combo)])
        ws = flat_w[list(combo)]
        fs = flat_f[list(combo)]
        total += prob * float(np.dot(ws, fs) / ws.sum())
    return total


@pytest.fixture
def two_state_cloud():
    """Two particles sitting on states 0 and 1 with weights (1, 2)."""
    return make_cloud([0.0, 1.0], [1.0, 2.0], stats=[0.5, -1.0])
