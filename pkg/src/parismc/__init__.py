"""Online particle smoothing of additive functionals under general path
models, with pseudo-marginal forward/backward sampling, pluggable
transition-density estimators, exact oracles, and a benchmark harness.
"""

__version__ = "0.1.0"

from .backward import (
    BackwardConfig,
    IndependentMH,
    Rejection,
    RejectionBudgetError,
    bs_update,
    lambda_row,
    sample_backward_index_mh,
    sample_backward_index_rejection,
)
from .driver import (
    EstimateRecord,
    ParisConfig,
    SmootherMode,
    SmoothingStepError,
    paris_step,
    run_online,
)
from .estimators import (
    AbcConfig,
    DgConfig,
    SdeSpec,
    abc_estimator,
    durham_gallant,
    durham_gallant_estimator,
    euler_density,
    exact_wrap,
)
from .forward import ForwardOutcome, fs_update, pmfs_update
from .model import (
    DegenerateCloudError,
    EstimatorValueError,
    ModelSpec,
    ModelStep,
    ParticleCloud,
    ProposalKernel,
    TransitionEstimator,
    init_cloud,
    smoothing_estimate,
    weighted_mean,
)
from .oracles import (
    FiniteHmm,
    LgssSpec,
    composed_euler_ou_transition,
    enumerate_additive_smoothing,
    exact_additive_smoothing,
    joint_gaussian_condition,
    kalman_smooth_additive,
    ou_exact_transition,
)
from .samplers import BridgePath, RngStream, bridge_density, bridge_sample, categorical

__all__ = [
    "__version__",
    "AbcConfig",
    "BackwardConfig",
    "BridgePath",
    "DegenerateCloudError",
    "DgConfig",
    "EstimateRecord",
    "EstimatorValueError",
    "FiniteHmm",
    "ForwardOutcome",
    "IndependentMH",
    "LgssSpec",
    "ModelSpec",
    "ModelStep",
    "ParisConfig",
    "ParticleCloud",
    "ProposalKernel",
    "Rejection",
    "RejectionBudgetError",
    "RngStream",
    "SdeSpec",
    "SmootherMode",
    "SmoothingStepError",
    "TransitionEstimator",
    "abc_estimator",
    "bridge_density",
    "bridge_sample",
    "bs_update",
    "categorical",
    "composed_euler_ou_transition",
    "durham_gallant",
    "durham_gallant_estimator",
    "enumerate_additive_smoothing",
    "euler_density",
    "exact_additive_smoothing",
    "exact_wrap",
    "fs_update",
    "init_cloud",
    "joint_gaussian_condition",
    "kalman_smooth_additive",
    "lambda_row",
    "ou_exact_transition",
    "paris_step",
    "pmfs_update",
    "run_online",
    "sample_backward_index_mh",
    "sample_backward_index_rejection",
    "smoothing_estimate",
    "weighted_mean",
]
