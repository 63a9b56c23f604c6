"""Long-lived smoothing sessions: one particle cloud per client stream.

A session owns a model whose step provider reads from a growing observation
list, the current cloud, and the run's random stream.  Each observation
batch advances the smoother one step per value under the session lock; the
recursion is sequential in time, so concurrent posts serialise.
"""

from __future__ import annotations

import threading
import uuid
from typing import Dict, List

from ..backward import BackwardConfig, IndependentMH, Rejection
from ..driver import (
    SLOT_INIT,
    EstimateRecord,
    ParisConfig,
    SmootherMode,
    estimate_record,
    paris_step,
)
from ..model import ModelSpec, init_cloud
from ..models import lgss_model_spec, ou_dg_model_spec, ou_model_spec
from ..oracles import LgssSpec
from ..samplers import RngStream
from .schemas import CreateSessionRequest, RunSpec


class SessionError(ValueError):
    """The session request is inconsistent (bad model/run combination)."""


def _backward_config(run: RunSpec) -> BackwardConfig:
    if run.backward.kind == "rejection":
        sampler = Rejection(max_trials=run.backward.max_trials)
    else:
        sampler = IndependentMH(steps_per_sample=run.backward.steps_per_sample)
    return BackwardConfig(sampler=sampler, M=run.backward_samples)


def _build_model(request: CreateSessionRequest, observations: List[float]) -> ModelSpec:
    model = request.model
    run = request.run
    kwargs = dict(
        proposal=model.proposal,
        functional=model.functional,
        fixed_point_index=model.fixed_point_index,
    )
    if run.estimator == "durham-gallant":
        if model.kind != "ou":
            raise SessionError("the durham-gallant estimator requires the ou model")
        if run.mode != "pseudo-marginal":
            raise SessionError("the durham-gallant estimator requires pseudo-marginal mode")
        if run.backward.kind == "rejection":
            raise SessionError(
                "the durham-gallant estimator has no uniform bound; "
                "use the independent-mh backward sampler"
            )
        return ou_dg_model_spec(
            model.theta,
            model.delta,
            model.eps,
            observations,
            substeps=run.dg_substeps,
            paths=run.dg_paths,
            **kwargs,
        )
    if model.kind == "ou":
        return ou_model_spec(model.theta, model.delta, model.eps, observations, **kwargs)
    spec = LgssSpec(
        a=model.a, b=model.b, q=model.q, c=model.c,
        d=model.d, r=model.r, m0=model.m0, p0=model.p0,
    )
    return lgss_model_spec(spec, observations, **kwargs)


class SmoothingSession:
    def __init__(self, request: CreateSessionRequest):
        if request.model.functional == "fixed-point" and request.model.fixed_point_index is None:
            raise SessionError("fixed-point functional needs fixed_point_index")
        run = request.run
        self.session_id = uuid.uuid4().hex
        self._lock = threading.Lock()
        self._observations: List[float] = []
        self._model = _build_model(request, self._observations)
        self._config = ParisConfig(
            N=run.num_particles,
            backward=_backward_config(run),
            seed=run.seed,
            mode=SmootherMode(run.mode),
        )
        self._rng = RngStream(run.seed)
        self._cloud = init_cloud(self._model, run.num_particles, self._rng.at(0, 0, SLOT_INIT))
        self.latest: EstimateRecord = estimate_record(self._cloud)

    @property
    def time_index(self) -> int:
        return self._cloud.time_index

    @property
    def num_particles(self) -> int:
        return self._config.N

    def advance(self, observations: List[float]) -> List[EstimateRecord]:
        """Feed new observations and run one smoothing step per value."""
        with self._lock:
            self._observations.extend(float(y) for y in observations)
            records = []
            while self._cloud.time_index < len(self._observations):
                self._cloud = paris_step(self._cloud, self._model, self._config, self._rng)
                records.append(estimate_record(self._cloud))
            self.latest = records[-1] if records else self.latest
            return records


class SessionStore:
    def __init__(self):
        self._lock = threading.Lock()
        self._sessions: Dict[str, SmoothingSession] = {}

    def create(self, request: CreateSessionRequest) -> SmoothingSession:
        session = SmoothingSession(request)
        with self._lock:
            self._sessions[session.session_id] = session
        return session

    def get(self, session_id: str) -> SmoothingSession | None:
        with self._lock:
            return self._sessions.get(session_id)

    def delete(self, session_id: str) -> bool:
        with self._lock:
            return self._sessions.pop(session_id, None) is not None

    def __len__(self) -> int:
        with self._lock:
            return len(self._sessions)
