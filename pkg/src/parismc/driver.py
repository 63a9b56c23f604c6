"""Online smoothing driver: iterate forward + backward sampling per step.

One driver run is inherently sequential in time; it keeps only the current
cloud alive, so memory is constant in the number of steps.  All randomness
is derived from a counter-based stream keyed by the run seed, with one
substream per (time step, purpose) pair.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, List

import numpy as np

from .backward import BackwardConfig, bs_update
from .forward import fs_update, pmfs_update
from .model import ModelSpec, ParticleCloud, init_cloud, smoothing_estimate
from .samplers import RngStream

__all__ = [
    "SmootherMode",
    "ParisConfig",
    "EstimateRecord",
    "SmoothingStepError",
    "paris_step",
    "run_online",
    "estimate_record",
]

# Draw-slot layout inside each time step's substream space.
SLOT_INIT = 0
SLOT_FORWARD = 1
SLOT_BACKWARD = 2


class SmootherMode(str, Enum):
    IDEAL = "ideal"
    PSEUDO_MARGINAL = "pseudo-marginal"


@dataclass(frozen=True)
class ParisConfig:
    """Run parameters: particle count, backward sampler, seed, update mode."""

    N: int
    backward: BackwardConfig = field(default_factory=BackwardConfig)
    seed: int = 0
    mode: SmootherMode = SmootherMode.PSEUDO_MARGINAL

    def __post_init__(self):
        if self.N < 2:
            raise ValueError("backward sampling is degenerate below N=2")
        object.__setattr__(self, "mode", SmootherMode(self.mode))


@dataclass(frozen=True)
class EstimateRecord:
    """Per-step online output: the smoothing estimate plus weight diagnostics."""

    time_index: int
    estimate: float
    ess: float
    weight_cv: float


class SmoothingStepError(RuntimeError):
    """A smoothing step failed; carries the failing step index."""

    def __init__(self, step_index: int, cause: BaseException):
        super().__init__(f"smoothing step {step_index} failed: {cause}")
        self.step_index = step_index


def estimate_record(cloud: ParticleCloud) -> EstimateRecord:
    w = cloud.weights
    total = cloud.total_weight
    ess = total**2 / float(np.dot(w, w))
    mean = total / cloud.num_particles
    cv = float(np.std(w) / mean)
    return EstimateRecord(
        time_index=cloud.time_index,
        estimate=smoothing_estimate(cloud),
        ess=ess,
        weight_cv=cv,
    )


def paris_step(
    cloud: ParticleCloud,
    model: ModelSpec,
    config: ParisConfig,
    rng: RngStream,
) -> ParticleCloud:
    """Advance the cloud one step: forward sampling then backward sampling."""
    n = cloud.time_index
    forward = fs_update if config.mode is SmootherMode.IDEAL else pmfs_update
    outcome = forward(cloud, model, rng.at(n, 0, SLOT_FORWARD))
    stats = bs_update(cloud, outcome, model, config.backward, rng.at(n, 0, SLOT_BACKWARD))
    return ParticleCloud(
        particles=outcome.new_particles,
        weights=outcome.new_weights,
        stats=stats,
        time_index=n + 1,
    )


def run_online(
    model: ModelSpec,
    n_steps: int,
    config: ParisConfig,
    record_every: int = 1,
    on_record: Callable[[EstimateRecord], None] | None = None,
) -> List[EstimateRecord]:
    """Initialise and run ``n_steps`` smoothing updates, recording estimates.

    Records are taken after initialisation and then every ``record_every``
    steps (always including the final step).  Only the current cloud is
    retained between steps.  Failures are re-raised as
    :class:`SmoothingStepError` carrying the step index.
    """
    if n_steps < 0:
        raise ValueError("n_steps must be nonnegative")
    if record_every < 1:
        raise ValueError("record_every must be positive")
    rng = RngStream(config.seed)
    cloud = init_cloud(model, config.N, rng.at(0, 0, SLOT_INIT))
    records = [estimate_record(cloud)]
    if on_record is not None:
        on_record(records[-1])
    for n in range(n_steps):
        try:
            cloud = paris_step(cloud, model, config, rng)
        except Exception as exc:
            raise SmoothingStepError(n, exc) from exc
        if (n + 1) % record_every == 0 or n == n_steps - 1:
            records.append(estimate_record(cloud))
            if on_record is not None:
                on_record(records[-1])
    return records
