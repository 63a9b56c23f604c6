"""Request/response models for the smoothing service."""

from __future__ import annotations

import math
from typing import List, Literal, Optional, Union

from pydantic import BaseModel, Field

from ..driver import EstimateRecord
from ..experiments import ExperimentResult, ResultRow


class BackwardSamplerSpec(BaseModel):
    kind: Literal["rejection", "independent-mh"] = "rejection"
    max_trials: int = Field(default=1_000_000, ge=1)
    steps_per_sample: int = Field(default=5, ge=1)


class OuModelSpec(BaseModel):
    """Mean-reverting OU state observed at a fixed interval with unit noise."""

    kind: Literal["ou"] = "ou"
    theta: float = 5.0
    delta: float = Field(default=1.0, gt=0)
    eps: float = Field(default=0.0, ge=0.0, le=1.0)
    proposal: Literal["optimal", "bootstrap"] = "optimal"
    functional: Literal["sum-states", "fixed-point", "zero"] = "sum-states"
    fixed_point_index: Optional[int] = Field(default=None, ge=0)


class LgssModelSpec(BaseModel):
    """General scalar linear-Gaussian state-space model."""

    kind: Literal["lgss"] = "lgss"
    a: float
    b: float
    q: float = Field(gt=0)
    c: float
    d: float
    r: float = Field(gt=0)
    m0: float
    p0: float = Field(gt=0)
    proposal: Literal["optimal", "bootstrap"] = "optimal"
    functional: Literal["sum-states", "fixed-point", "zero"] = "sum-states"
    fixed_point_index: Optional[int] = Field(default=None, ge=0)


SessionModelSpec = Union[OuModelSpec, LgssModelSpec]


class RunSpec(BaseModel):
    """Smoother parameters for a session."""

    num_particles: int = Field(default=200, ge=2)
    backward_samples: int = Field(default=2, ge=1)
    backward: BackwardSamplerSpec = Field(default_factory=BackwardSamplerSpec)
    seed: int = 0
    mode: Literal["ideal", "pseudo-marginal"] = "ideal"
    estimator: Literal["exact", "durham-gallant"] = "exact"
    dg_substeps: int = Field(default=4, ge=1)
    dg_paths: int = Field(default=1, ge=1)


class CreateSessionRequest(BaseModel):
    model: SessionModelSpec = Field(discriminator="kind")
    run: RunSpec = Field(default_factory=RunSpec)


class EstimateRecordModel(BaseModel):
    time_index: int
    estimate: float
    ess: float
    weight_cv: float

    @classmethod
    def from_record(cls, record: EstimateRecord) -> "EstimateRecordModel":
        return cls(
            time_index=record.time_index,
            estimate=record.estimate,
            ess=record.ess,
            weight_cv=record.weight_cv,
        )


class SessionInfo(BaseModel):
    session_id: str
    time_index: int
    num_particles: int
    latest: EstimateRecordModel


class CreateSessionResponse(BaseModel):
    session_id: str
    record: EstimateRecordModel


class ObservationsRequest(BaseModel):
    observations: List[float] = Field(min_length=1)


class ObservationsResponse(BaseModel):
    session_id: str
    records: List[EstimateRecordModel]


class ExperimentRequest(BaseModel):
    """Mirror of the experiment configuration (output paths are client-side)."""

    experiment: Literal["FigureA", "FigureB", "OracleHmm", "OracleLgss", "DgCheck"]
    theta: Optional[float] = None
    delta: Optional[float] = None
    eps_grid: Optional[List[float]] = None
    n: Optional[int] = None
    N: Optional[int] = None
    M: Optional[int] = None
    L: Optional[int] = None
    replicates: Optional[int] = None
    seed: Optional[int] = None
    proposal: Optional[Literal["optimal", "bootstrap"]] = None
    backward: Optional[Literal["rejection", "independent-mh"]] = None
    mh_steps: Optional[int] = None


class ResultRowModel(BaseModel):
    experiment: str
    eps: float
    n: int
    replicate: int
    estimator: str
    estimate: float
    oracle: float
    error: float
    # None encodes "exact computation, no particle degeneracy" (inf in CSV).
    ess_min: Optional[float] = None

    @classmethod
    def from_row(cls, row: ResultRow) -> "ResultRowModel":
        return cls(
            experiment=row.experiment,
            eps=row.eps,
            n=row.n,
            replicate=row.replicate,
            estimator=row.estimator,
            estimate=row.estimate,
            oracle=row.oracle,
            error=row.error,
            ess_min=None if math.isinf(row.ess_min) else row.ess_min,
        )

    def to_row(self) -> ResultRow:
        return ResultRow(
            experiment=self.experiment,
            eps=self.eps,
            n=self.n,
            replicate=self.replicate,
            estimator=self.estimator,
            estimate=self.estimate,
            oracle=self.oracle,
            error=self.error,
            ess_min=math.inf if self.ess_min is None else self.ess_min,
        )


class ExperimentResponse(BaseModel):
    experiment: str
    passed: bool
    summary: dict
    rows: List[ResultRowModel]

    @classmethod
    def from_result(cls, result: ExperimentResult) -> "ExperimentResponse":
        return cls(
            experiment=result.experiment,
            passed=result.passed,
            summary=result.summary,
            rows=[ResultRowModel.from_row(r) for r in result.rows],
        )


class ServiceInfo(BaseModel):
    name: str
    version: str
    experiments: List[str]
