"""HTTP surface of the smoothing engine.

Sessions expose the online smoother (create, feed observations, read
estimates); the experiments endpoint runs a full benchmark and returns its
rows and summary.  All numerical work happens in the core package; this
layer only validates, dispatches and serialises.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException

from .. import __version__
from ..experiments import EXPERIMENT_NAMES, ConfigError, config_from_mapping, run_experiment
from ..model import DegenerateCloudError, EstimatorValueError
from .schemas import (
    CreateSessionRequest,
    CreateSessionResponse,
    EstimateRecordModel,
    ExperimentRequest,
    ExperimentResponse,
    ObservationsRequest,
    ObservationsResponse,
    ServiceInfo,
    SessionInfo,
)
from .sessions import SessionError, SessionStore


def create_app() -> FastAPI:
    app = FastAPI(title="parismc", version=__version__)
    store = SessionStore()

    def _get_session(session_id: str):
        session = store.get(session_id)
        if session is None:
            raise HTTPException(status_code=404, detail=f"unknown session {session_id!r}")
        return session

    @app.get("/", response_model=ServiceInfo)
    def info() -> ServiceInfo:
        return ServiceInfo(
            name="parismc", version=__version__, experiments=list(EXPERIMENT_NAMES)
        )

    @app.post("/sessions", response_model=CreateSessionResponse)
    def create_session(request: CreateSessionRequest) -> CreateSessionResponse:
        try:
            session = store.create(request)
        except (SessionError, ValueError) as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        return CreateSessionResponse(
            session_id=session.session_id,
            record=EstimateRecordModel.from_record(session.latest),
        )

    @app.get("/sessions/{session_id}", response_model=SessionInfo)
    def session_info(session_id: str) -> SessionInfo:
        session = _get_session(session_id)
        return SessionInfo(
            session_id=session.session_id,
            time_index=session.time_index,
            num_particles=session.num_particles,
            latest=EstimateRecordModel.from_record(session.latest),
        )

    @app.post("/sessions/{session_id}/observations", response_model=ObservationsResponse)
    def push_observations(session_id: str, request: ObservationsRequest) -> ObservationsResponse:
        session = _get_session(session_id)
        try:
            records = session.advance(request.observations)
        except (DegenerateCloudError, EstimatorValueError) as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from exc
        return ObservationsResponse(
            session_id=session.session_id,
            records=[EstimateRecordModel.from_record(r) for r in records],
        )

    @app.delete("/sessions/{session_id}")
    def delete_session(session_id: str) -> dict:
        if not store.delete(session_id):
            raise HTTPException(status_code=404, detail=f"unknown session {session_id!r}")
        return {"deleted": session_id}

    @app.post("/experiments/run", response_model=ExperimentResponse)
    def experiment(request: ExperimentRequest) -> ExperimentResponse:
        mapping = {k: v for k, v in request.model_dump().items() if v is not None}
        try:
            cfg = config_from_mapping(mapping)
        except ConfigError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        result = run_experiment(cfg)
        return ExperimentResponse.from_result(result)

    return app


app = create_app()
