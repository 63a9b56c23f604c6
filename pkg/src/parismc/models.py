"""Ready-made path models for the engine: linear-Gaussian chains (including
the mean-reverting OU benchmark) and finite-state chains.

Each builder returns a :class:`~parismc.model.ModelSpec` whose steps are
created lazily from an observation provider, so sessions can feed data in as
it arrives.  The linear-Gaussian family supports the locally optimal
proposal with its matching predictive-likelihood adjustment weights, or a
plain bootstrap proposal.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .estimators import DgConfig, SdeSpec, durham_gallant_estimator, exact_wrap
from .model import ModelSpec, ModelStep, ProposalKernel
from .oracles import FiniteHmm, LgssSpec
from .samplers import categorical

__all__ = [
    "SATURATION_BOUND",
    "saturate",
    "optimal_proposal_lgss",
    "predictive_likelihood_lgss",
    "lgss_model_spec",
    "ou_lgss_spec",
    "ou_model_spec",
    "ou_dg_model_spec",
    "hmm_model_spec",
]

SATURATION_BOUND = 1e5


def saturate(x, bound: float = SATURATION_BOUND):
    """Clamp the observation link to [-bound, bound]; linear in any sane range."""
    return np.clip(x, -bound, bound)


def _gauss_pdf(x, mean, var):
    return np.exp(-0.5 * (x - mean) ** 2 / var) / np.sqrt(2 * np.pi * var)


def optimal_proposal_lgss(model: LgssSpec, x, y_next):
    """Moments of the locally optimal proposal p(x' | x, y_next).

    Proportional to the transition density times the emission density, which
    is Gaussian with precision 1/q + c^2/r.
    """
    var = 1.0 / (1.0 / model.q + model.c**2 / model.r)
    mean = var * (
        (model.a * np.asarray(x, dtype=float) + model.b) / model.q
        + model.c * (y_next - model.d) / model.r
    )
    if np.ndim(x) == 0:
        mean = float(mean)
    return mean, float(var)


def predictive_likelihood_lgss(model: LgssSpec, x, y_next):
    """Adjustment weights fully adapted to the next observation:
    integral of transition times emission, Normal(y; c(ax+b)+d, c^2 q + r)."""
    mean = model.c * (model.a * np.asarray(x, dtype=float) + model.b) + model.d
    var = model.c**2 * model.q + model.r
    return _gauss_pdf(y_next, mean, var)


def _as_provider(observations) -> Callable[[int], float]:
    # Sequences are indexed lazily so a caller may keep appending to them
    # while the run is in flight (streaming sessions rely on this).
    if callable(observations):
        return observations

    def provider(n: int) -> float:
        try:
            return float(observations[n])
        except IndexError:
            raise IndexError(f"no observation available for step {n}") from None

    return provider


def _increment_fn(functional: str, fixed_point_index: int | None):
    if functional == "sum-states":
        # h_0 contributes both endpoints so the running functional is the
        # full sum of states x_0 + ... + x_n.
        def increment_at(n):
            if n == 0:
                return lambda x, x_next: x[:, 0] + x_next[:, 0]
            return lambda x, x_next: x_next[:, 0]

        return increment_at
    if functional == "fixed-point":
        if fixed_point_index is None or fixed_point_index < 0:
            raise ValueError("fixed-point functional needs a nonnegative index")

        def increment_at(n):
            if n == fixed_point_index:
                return lambda x, x_next: x[:, 0]
            return lambda x, x_next: np.zeros(x.shape[0])

        return increment_at
    if functional == "zero":
        return lambda n: (lambda x, x_next: np.zeros(x.shape[0]))
    raise ValueError(f"unknown functional {functional!r}")


def lgss_model_spec(
    spec: LgssSpec,
    observations,
    proposal: str = "optimal",
    functional: str = "sum-states",
    fixed_point_index: int | None = None,
    saturation: float | None = None,
    estimator_factory=None,
) -> ModelSpec:
    """Particle model for a scalar linear-Gaussian chain.

    ``observations`` is a sequence (or ``n -> y_{n+1}`` provider) of the data
    consumed one value per step.  ``proposal='optimal'`` pairs the locally
    optimal proposal with predictive-likelihood adjustment weights;
    ``'bootstrap'`` uses the prior transition with unit adjustment.  A
    ``saturation`` bound, when set, clamps the state inside the emission
    density (the closed-form proposal and adjustment assume the linear
    regime, exact whenever the clamp is inactive).  ``estimator_factory``,
    when given, replaces the exact transition estimator per step (signature
    ``(n, y) -> TransitionEstimator``), e.g. for pseudo-marginal runs.
    """
    if proposal not in ("optimal", "bootstrap"):
        raise ValueError(f"unknown proposal {proposal!r}")
    provider = _as_provider(observations)
    increment_at = _increment_fn(functional, fixed_point_index)

    def link(x):
        return x if saturation is None else saturate(x, saturation)

    def transition_density(x, x_next):
        return _gauss_pdf(x_next[:, 0], spec.a * x[:, 0] + spec.b, spec.q)

    def emission_density(x_next, y):
        return _gauss_pdf(y, spec.c * link(x_next[:, 0]) + spec.d, spec.r)

    trans_peak = 1.0 / np.sqrt(2 * np.pi * spec.q)

    def cloud_transition_peak(particles, targets):
        # Tight dominating constant for rejection backward sampling: the
        # transition density is Gaussian in (x' - a x - b), so its maximum
        # over the cloud is attained at the particle nearest to (x' - b)/a.
        sources = np.sort(particles[:, 0])
        if spec.a == 0.0:
            return np.full(targets.shape[0], trans_peak)
        anchors = (targets[:, 0] - spec.b) / spec.a
        pos = np.searchsorted(sources, anchors)
        left = sources[np.clip(pos - 1, 0, sources.size - 1)]
        right = sources[np.clip(pos, 0, sources.size - 1)]
        gap = np.minimum(np.abs(anchors - left), np.abs(anchors - right))
        return _gauss_pdf(spec.a * gap, 0.0, spec.q)

    def make_step(n: int) -> ModelStep:
        y = provider(n)

        def joint_density(x, x_next):
            return transition_density(x, x_next) * emission_density(x_next, y)

        if estimator_factory is not None:
            estimator = estimator_factory(n, y)
        else:
            estimator = exact_wrap(
                joint_density,
                bound=lambda x_next: trans_peak * emission_density(x_next, y),
                cloud_bound=lambda particles, x_next: (
                    cloud_transition_peak(particles, x_next) * emission_density(x_next, y)
                ),
            )

        if proposal == "optimal":
            def sample(parents, rng):
                mean, var = optimal_proposal_lgss(spec, parents[:, 0], y)
                return (mean + np.sqrt(var) * rng.standard_normal(parents.shape[0]))[:, None]

            def density(parents, new):
                mean, var = optimal_proposal_lgss(spec, parents[:, 0], y)
                return _gauss_pdf(new[:, 0], mean, var)

            adjustment = lambda x: predictive_likelihood_lgss(spec, x[:, 0], y)
        else:
            def sample(parents, rng):
                return (
                    spec.a * parents[:, 0]
                    + spec.b
                    + np.sqrt(spec.q) * rng.standard_normal(parents.shape[0])
                )[:, None]

            density = transition_density
            adjustment = lambda x: np.ones(x.shape[0])

        return ModelStep(
            adjustment=adjustment,
            proposal=ProposalKernel(sample=sample, density=density),
            estimator=estimator,
            increment=increment_at(n),
        )

    return ModelSpec(
        dim=1,
        initial_sampler=lambda N, rng: (
            spec.m0 + np.sqrt(spec.p0) * rng.standard_normal(N)
        )[:, None],
        initial_weight=lambda x: np.ones(x.shape[0]),
        step=make_step,
    )


def ou_lgss_spec(theta: float, delta: float, eps: float) -> LgssSpec:
    """Discretely observed OU process as a linear-Gaussian chain.

    The exact OU transition over an interval ``delta`` gives the state
    recursion; the emission shrinks the observed state by ``1 - eps`` and
    adds unit noise; the initial law is standard normal.
    """
    decay = float(np.exp(-delta))
    return LgssSpec(
        a=decay,
        b=theta * (1.0 - decay),
        q=(1.0 - decay**2) / 2.0,
        c=1.0 - eps,
        d=0.0,
        r=1.0,
        m0=0.0,
        p0=1.0,
    )


def ou_model_spec(
    theta: float,
    delta: float,
    eps: float,
    observations,
    proposal: str = "optimal",
    functional: str = "sum-states",
    fixed_point_index: int | None = None,
) -> ModelSpec:
    """Particle model for the OU benchmark (saturated observation link)."""
    return lgss_model_spec(
        ou_lgss_spec(theta, delta, eps),
        observations,
        proposal=proposal,
        functional=functional,
        fixed_point_index=fixed_point_index,
        saturation=SATURATION_BOUND,
    )


def ou_dg_model_spec(
    theta: float,
    delta: float,
    eps: float,
    observations,
    substeps: int,
    paths: int = 1,
    proposal: str = "optimal",
    functional: str = "sum-states",
    fixed_point_index: int | None = None,
) -> ModelSpec:
    """OU benchmark with the transition density replaced by its
    Durham-Gallant estimate over ``substeps`` fine Euler steps.

    This is the genuinely pseudo-marginal variant of :func:`ou_model_spec`:
    weights are random, so runs target the composed-Euler skew model.  The
    estimator carries no uniform bound; pair it with the MH backward sampler.
    """
    spec = ou_lgss_spec(theta, delta, eps)
    sde = SdeSpec(
        drift=lambda x: -(x - theta),
        diffusion=lambda x: np.ones_like(np.asarray(x, dtype=float)),
        observation_density=lambda x, x_next, y: _gauss_pdf(
            y, spec.c * saturate(x_next) + spec.d, spec.r
        ),
    )
    cfg = DgConfig(delta=delta, eps=delta / substeps, L=paths)

    def estimator_factory(n, y):
        return durham_gallant_estimator(sde, cfg, y_next=y)

    return lgss_model_spec(
        spec,
        observations,
        proposal=proposal,
        functional=functional,
        fixed_point_index=fixed_point_index,
        saturation=SATURATION_BOUND,
        estimator_factory=estimator_factory,
    )


def hmm_model_spec(hmm: FiniteHmm, adapted: bool = True) -> ModelSpec:
    """Particle model for a finite-state chain given by explicit matrices.

    States are carried as float indices in a one-dimensional state vector.
    The proposal is the row-normalised kernel; with ``adapted=True`` the
    adjustment weights are the kernel row sums (so importance weights stay
    constant), otherwise plain bootstrap weights are used.
    """

    def state_idx(x):
        return np.rint(x[:, 0]).astype(np.intp)

    def make_step(n: int) -> ModelStep:
        kernel = hmm.trans[n]
        row_sums = kernel.sum(axis=1)
        row_cdf = np.cumsum(kernel, axis=1)
        col_max = kernel.max(axis=0)
        inc = hmm.increments[n]

        def sample(parents, rng):
            rows = row_cdf[state_idx(parents)]
            u = rng.random(parents.shape[0]) * rows[:, -1]
            return np.sum(rows <= u[:, None], axis=1).astype(float)[:, None]

        def density(parents, new):
            pi = state_idx(parents)
            return kernel[pi, state_idx(new)] / row_sums[pi]

        estimator = exact_wrap(
            lambda x, x_next: kernel[state_idx(x), state_idx(x_next)],
            bound=lambda x_next: col_max[state_idx(x_next)],
        )
        if adapted:
            adjustment = lambda x: row_sums[state_idx(x)]
        else:
            adjustment = lambda x: np.ones(x.shape[0])

        return ModelStep(
            adjustment=adjustment,
            proposal=ProposalKernel(sample=sample, density=density),
            estimator=estimator,
            increment=lambda x, x_next: inc[state_idx(x), state_idx(x_next)],
        )

    return ModelSpec(
        dim=1,
        initial_sampler=lambda N, rng: categorical(hmm.init, rng, size=N).astype(float)[:, None],
        initial_weight=lambda x: np.ones(x.shape[0]),
        step=make_step,
    )
