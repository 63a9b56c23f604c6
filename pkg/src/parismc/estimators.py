"""Concrete transition-density estimators.

Three families: an exact wrapper for tractable densities (zero auxiliary
variance), the Durham-Gallant importance-sampling estimator for scalar
diffusions observed at interval ``delta`` (Euler products over Brownian-bridge
paths at a finer step ``eps``), and a likelihood-free estimator that replaces
an intractable emission density by a kernel-smoothed pseudo observation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .model import EstimatorValueError, TransitionEstimator
from .samplers import bridge_interior_log_density, sample_bridge_interior

__all__ = [
    "SdeSpec",
    "DgConfig",
    "AbcConfig",
    "exact_wrap",
    "euler_density",
    "durham_gallant",
    "durham_gallant_estimator",
    "abc_estimator",
    "gaussian_kernel",
]


def exact_wrap(density, bound=None, cloud_bound=None) -> TransitionEstimator:
    """Wrap a tractable transition density as a degenerate estimator.

    The auxiliary draw is a no-op (consumes no randomness) and the estimate
    equals the density itself, so pseudo-marginal updates driven by this
    estimator reproduce the ideal ones draw for draw.
    """
    return TransitionEstimator(
        draw_aux=lambda x, x_next, rng: None,
        evaluate=lambda z, x, x_next: density(x, x_next),
        exact_density=density,
        mean_density=density,
        bound=bound,
        cloud_bound=cloud_bound,
    )


@dataclass(frozen=True)
class SdeSpec:
    """Scalar diffusion dX = drift(X) dt + diffusion(X) dW, partially observed.

    ``observation_density(x, x_next, y)`` is the tractable emission density
    bundled into the transition kernel (None means no observation factor);
    ``observation_bound(y)`` optionally dominates it uniformly in the states.
    Drift and diffusion must be numpy-vectorised and diffusion must stay
    bounded away from zero wherever it is evaluated.
    """

    drift: Callable[[np.ndarray], np.ndarray]
    diffusion: Callable[[np.ndarray], np.ndarray]
    observation_density: Optional[Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]] = None
    observation_bound: Optional[Callable[[np.ndarray], float]] = None


@dataclass(frozen=True)
class DgConfig:
    """Durham-Gallant settings: observation interval, fine step, path count.

    ``delta / eps`` must be a whole number of substeps K; ``L`` inner paths
    are averaged per estimate.
    """

    delta: float
    eps: float
    L: int = 1

    def __post_init__(self):
        if self.delta <= 0 or self.eps <= 0:
            raise ValueError("delta and eps must be positive")
        if self.L < 1:
            raise ValueError("L must be at least 1")
        ratio = self.delta / self.eps
        if abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio):
            raise ValueError("delta must be an integer multiple of eps")

    @property
    def K(self) -> int:
        return int(round(self.delta / self.eps))


def _scalar_batch(x) -> tuple[np.ndarray, bool]:
    """Accept scalar, (B,) or (B, 1) input; return ((B,), was_scalar)."""
    arr = np.asarray(x, dtype=float)
    scalar = arr.ndim == 0
    if arr.ndim == 2 and arr.shape[1] == 1:
        arr = arr[:, 0]
    return np.atleast_1d(arr), scalar


def _euler_log_density(sde: SdeSpec, step: float, x: np.ndarray, x_next: np.ndarray) -> np.ndarray:
    mean = x + step * sde.drift(x)
    sigma = np.asarray(sde.diffusion(x), dtype=float)
    if np.any(sigma <= 0) or not np.all(np.isfinite(sigma)):
        raise EstimatorValueError("diffusion coefficient must be finite and positive")
    var = step * sigma**2
    return -0.5 * (x_next - mean) ** 2 / var - 0.5 * np.log(2 * np.pi * var)


def euler_density(sde: SdeSpec, step: float, x, x_next):
    """One-step Euler transition density: Normal(x + step*drift, step*diffusion^2)."""
    if step <= 0:
        raise ValueError("step must be positive")
    xb, scalar = _scalar_batch(x)
    nb, _ = _scalar_batch(x_next)
    out = np.exp(_euler_log_density(sde, step, xb, nb))
    return float(out[0]) if scalar else out


def _dg_draw_paths(
    sde: SdeSpec, cfg: DgConfig, x: np.ndarray, x_next: np.ndarray, rng: np.random.Generator
) -> np.ndarray:
    """L bridge interiors per pair: (B,) endpoints -> (B, L, K-1)."""
    B = x.shape[0]
    K, L = cfg.K, cfg.L
    x0 = np.repeat(x, L)[:, None]
    xK = np.repeat(x_next, L)[:, None]
    interiors = sample_bridge_interior(x0, xK, K, cfg.eps, rng)
    return interiors[:, :, 0].reshape(B, L, K - 1)


def _dg_values(
    sde: SdeSpec,
    cfg: DgConfig,
    paths: np.ndarray,
    x: np.ndarray,
    x_next: np.ndarray,
) -> np.ndarray:
    """Average the per-path importance ratios; log space until the final exp."""
    B, L, _ = paths.shape
    K = cfg.K
    z = np.concatenate(
        [
            np.broadcast_to(x[:, None, None], (B, L, 1)),
            paths,
            np.broadcast_to(x_next[:, None, None], (B, L, 1)),
        ],
        axis=2,
    )
    euler_log = _euler_log_density(sde, cfg.eps, z[:, :, :-1], z[:, :, 1:]).sum(axis=2)
    flat = paths.reshape(B * L, K - 1)[:, :, None]
    bridge_log = bridge_interior_log_density(
        flat,
        np.repeat(x, L)[:, None],
        np.repeat(x_next, L)[:, None],
        K,
        cfg.eps,
    ).reshape(B, L)
    return np.exp(euler_log - bridge_log).mean(axis=1)


def durham_gallant(
    sde: SdeSpec,
    cfg: DgConfig,
    obs,
    x,
    x_next,
    rng: np.random.Generator,
):
    """One Durham-Gallant estimate of the transition density (times emission).

    Draws L Brownian-bridge paths between the endpoints, scores each by the
    product of fine-step Euler densities over the bridge proposal density,
    and averages; the result multiplies the emission density at ``obs`` when
    the model carries one.  Returns ``(value, paths)``; endpoints may be
    scalars or (B,) batches, drawn pairwise i.i.d. in the batch case.
    """
    xb, scalar = _scalar_batch(x)
    nb, _ = _scalar_batch(x_next)
    xb, nb = np.broadcast_arrays(xb, nb)
    paths = _dg_draw_paths(sde, cfg, xb, nb, rng)
    values = _dg_values(sde, cfg, paths, xb, nb)
    if sde.observation_density is not None and obs is not None:
        values = values * np.asarray(sde.observation_density(xb, nb, obs), dtype=float)
    if scalar:
        return float(values[0]), paths[0]
    return values, paths


def durham_gallant_estimator(sde: SdeSpec, cfg: DgConfig, y_next=None) -> TransitionEstimator:
    """Package the Durham-Gallant estimate behind the estimator interface.

    Auxuliary payloads are the sampled bridge interiors, shape (B, L, K-1);
    evaluation is deterministic given them.  No uniform bound is available
    in general, so backward sampling must use the MH sampler.
    """

    def draw_aux(x, x_next, rng):
        xb, _ = _scalar_batch(x)
        nb, _ = _scalar_batch(x_next)
        xb, nb = np.broadcast_arrays(xb, nb)
        return _dg_draw_paths(sde, cfg, xb, nb, rng)

    def evaluate(paths, x, x_next):
        xb, _ = _scalar_batch(x)
        nb, _ = _scalar_batch(x_next)
        xb, nb = np.broadcast_arrays(xb, nb)
        values = _dg_values(sde, cfg, paths, xb, nb)
        if sde.observation_density is not None and y_next is not None:
            values = values * np.asarray(
                sde.observation_density(xb, nb, y_next), dtype=float
            )
        return values

    return TransitionEstimator(draw_aux=draw_aux, evaluate=evaluate)


def gaussian_kernel(bandwidth: float, obs_dim: int) -> Callable[[np.ndarray], np.ndarray]:
    """Isotropic Gaussian smoothing kernel with covariance bandwidth^2 * I."""
    norm = (2 * np.pi * bandwidth**2) ** (-obs_dim / 2)

    def kernel(u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        return norm * np.exp(-0.5 * np.sum(u**2, axis=-1) / bandwidth**2)

    return kernel


@dataclass(frozen=True)
class AbcConfig:
    """Likelihood-free estimator settings.

    ``emission_sampler(x_next, rng)`` draws pseudo observations (B, obs_dim)
    given new states; ``kernel`` scores their distance to the data (defaults
    to an isotropic Gaussian with the configured bandwidth, whose peak value
    is known and usable for rejection bounds).
    """

    bandwidth: float
    emission_sampler: Callable[[np.ndarray, np.random.Generator], np.ndarray]
    obs_dim: int = 1
    kernel: Optional[Callable[[np.ndarray], np.ndarray]] = None
    kernel_peak: Optional[float] = None

    def __post_init__(self):
        if self.bandwidth <= 0:
            raise ValueError("bandwidth must be positive")
        if self.obs_dim < 1:
            raise ValueError("obs_dim must be at least 1")
        if self.kernel is None:
            object.__setattr__(self, "kernel", gaussian_kernel(self.bandwidth, self.obs_dim))
            object.__setattr__(
                self, "kernel_peak", (2 * np.pi * self.bandwidth**2) ** (-self.obs_dim / 2)
            )


def abc_estimator(
    cfg: AbcConfig,
    hmm_transition_density: Callable[[np.ndarray, np.ndarray], np.ndarray],
    y_next,
    transition_bound=None,
) -> TransitionEstimator:
    """Estimator for models whose emission density is intractable.

    The auxiliary draw is a pseudo observation from the emission sampler at
    the new state; the estimate is the (tractable) state transition density
    times the kernel evaluated at the pseudo-observation mismatch.  When a
    bound on the transition density and the kernel peak are available, the
    product bounds the estimate and enables rejection backward sampling.
    """
    y = np.atleast_1d(np.asarray(y_next, dtype=float))
    if y.shape != (cfg.obs_dim,):
        raise ValueError(f"y_next must have {cfg.obs_dim} components")

    def draw_aux(x, x_next, rng):
        z = np.asarray(cfg.emission_sampler(x_next, rng), dtype=float)
        if z.ndim == 1:
            z = z[:, None]
        if z.shape != (np.shape(x_next)[0], cfg.obs_dim):
            raise ValueError("emission sampler returned the wrong shape")
        return z

    def evaluate(z, x, x_next):
        trans = np.asarray(hmm_transition_density(x, x_next), dtype=float)
        return trans * cfg.kernel(z - y)

    bound = None
    if transition_bound is not None and cfg.kernel_peak is not None:
        peak = cfg.kernel_peak
        if callable(transition_bound):
            bound = lambda x_next: np.asarray(transition_bound(x_next), dtype=float) * peak
        else:
            bound = lambda x_next, _c=float(transition_bound) * peak: np.full(
                np.shape(x_next)[0], _c
            )

    return TransitionEstimator(draw_aux=draw_aux, evaluate=evaluate, bound=bound)
