"""Random-number plumbing and low-level sampling primitives.

Counter-based random streams (Philox), weighted categorical draws, and
discretised Brownian-bridge path sampling together with the density of the
sampled paths.  Everything here is pure given a generator, so callers are
free to fan work out across time steps or particles without changing any
result.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "RngStream",
    "BridgePath",
    "CategoricalSampler",
    "categorical",
    "bridge_sample",
    "bridge_density",
    "bridge_log_density",
]

_UINT64 = np.uint64
_WORD = 2**64


@dataclass(frozen=True)
class RngStream:
    """Counter-addressed family of reproducible random generators.

    A stream is keyed by a 64-bit seed.  ``at(time_index, particle_index,
    draw_index)`` returns a fresh ``numpy.random.Generator`` whose output is
    a pure function of ``(seed, time_index, particle_index, draw_index)``:
    identical counters replay identical draws, distinct counters give
    statistically independent Philox streams.  This makes per-particle or
    per-replicate execution order irrelevant to the produced numbers.
    """

    seed: int

    def at(
        self,
        time_index: int = 0,
        particle_index: int = 0,
        draw_index: int = 0,
    ) -> np.random.Generator:
        if min(time_index, particle_index, draw_index) < 0:
            raise ValueError("stream counters must be nonnegative")
        key = np.array([self.seed % _WORD, 0], dtype=_UINT64)
        # Word 0 is Philox's free-running block counter; the addressed
        # counters live in the high words so substreams never overlap.
        counter = np.array(
            [0, draw_index % _WORD, particle_index % _WORD, time_index % _WORD],
            dtype=_UINT64,
        )
        return np.random.Generator(np.random.Philox(key=key, counter=counter))


class CategoricalSampler:
    """Reusable inverse-CDF sampler over a fixed weight vector.

    Validates and accumulates the weights once; each ``draw`` then costs
    O(size log N).  Useful inside rejection/MH loops that keep proposing
    from the same categorical law.
    """

    def __init__(self, weights):
        w = np.asarray(weights, dtype=float)
        if w.ndim != 1 or w.size == 0:
            raise ValueError("weights must be a nonempty 1-d array")
        if not np.all(np.isfinite(w)):
            raise ValueError("categorical weights must be finite")
        if np.any(w < 0):
            raise ValueError("categorical weights must be nonnegative")
        self._cdf = np.cumsum(w)
        self._size = w.size
        if self._cdf[-1] <= 0:
            raise ValueError("categorical weights have zero total mass")

    def draw(self, rng: np.random.Generator, size: int | None = None):
        u = rng.random(size) * self._cdf[-1]
        idx = np.searchsorted(self._cdf, u, side="right")
        idx = np.minimum(idx, self._size - 1)
        if size is None:
            return int(idx)
        return idx.astype(np.intp)


def categorical(weights, rng: np.random.Generator, size: int | None = None):
    """Draw indices proportionally to a nonnegative weight vector.

    Uses inverse-CDF lookup on the cumulative weights, so a batch of draws
    costs O(N + size log N).  Returns a plain ``int`` when ``size`` is None,
    otherwise an integer array of that length.

    Raises ``ValueError`` if any weight is negative or non-finite, or if the
    total mass is zero.
    """
    return CategoricalSampler(weights).draw(rng, size)


@dataclass(frozen=True)
class BridgePath:
    """A discretised Brownian bridge over ``K`` substeps of length ``eps``.

    ``interior`` holds the K-1 intermediate points (shape ``(K-1, d)``);
    the endpoints are fixed at ``x0`` and ``xK``.  The final substep is the
    degenerate, pinned move onto ``xK`` and carries no randomness.
    """

    interior: np.ndarray
    x0: np.ndarray
    xK: np.ndarray
    eps: float
    K: int

    def __post_init__(self):
        x0 = _as_state(self.x0)
        xK = _as_state(self.xK)
        interior = np.asarray(self.interior, dtype=float)
        if interior.ndim == 1:
            interior = interior[:, None]
        if self.K < 1:
            raise ValueError("bridge needs at least one substep")
        if interior.shape != (self.K - 1, x0.shape[0]):
            raise ValueError(
                f"interior shape {interior.shape} inconsistent with K={self.K}"
            )
        object.__setattr__(self, "interior", interior)
        object.__setattr__(self, "x0", x0)
        object.__setattr__(self, "xK", xK)


def _as_state(x) -> np.ndarray:
    out = np.atleast_1d(np.asarray(x, dtype=float))
    if out.ndim != 1:
        raise ValueError("states must be scalars or 1-d vectors")
    return out


def _bridge_moments(z, xK, j, K, eps):
    """Conditional mean/variance of z_{j+1} given z_j for a pinned bridge."""
    remaining = K - j
    mean = z + (xK - z) / remaining
    var = eps * (remaining - 1) / remaining
    return mean, var


def sample_bridge_interior(
    x0: np.ndarray, xK: np.ndarray, K: int, eps: float, rng: np.random.Generator
) -> np.ndarray:
    """Vectorised bridge interior sampler: (B, d) endpoints -> (B, K-1, d)."""
    if K < 1:
        raise ValueError("bridge needs at least one substep")
    if eps <= 0:
        raise ValueError("substep size must be positive")
    B, d = x0.shape
    out = np.empty((B, K - 1, d))
    z = x0
    for j in range(K - 1):
        mean, var = _bridge_moments(z, xK, j, K, eps)
        z = mean + np.sqrt(var) * rng.standard_normal((B, d))
        out[:, j] = z
    return out


def bridge_interior_log_density(
    interior: np.ndarray, x0: np.ndarray, xK: np.ndarray, K: int, eps: float
) -> np.ndarray:
    """Log-density of bridge interiors under the sequential sampler.

    ``interior`` has shape (B, K-1, d) with endpoints (B, d); returns (B,).
    A zero-variance substep evaluated away from its conditional mean is an
    error (the kernel is a point mass there); evaluated exactly on the mean
    it contributes nothing, matching the pinned final step convention.
    """
    B = x0.shape[0]
    logp = np.zeros(B)
    z = x0
    for j in range(K - 1):
        mean, var = _bridge_moments(z, xK, j, K, eps)
        znext = interior[:, j]
        if var <= 0:
            if np.any(znext != mean):
                raise ValueError(
                    "zero-variance bridge step evaluated off its mean"
                )
        else:
            logp += np.sum(
                -0.5 * (znext - mean) ** 2 / var - 0.5 * np.log(2 * np.pi * var),
                axis=-1,
            )
        z = znext
    return logp


def bridge_sample(x0, xK, K: int, eps: float, rng: np.random.Generator) -> BridgePath:
    """Sample one Brownian-bridge path from x0 to xK over K substeps.

    The interior points follow z_{j+1} | z_j ~ Normal(z_j + (xK - z_j)/(K - j),
    eps (K - j - 1)/(K - j)); the last substep lands on xK deterministically.
    K = 1 yields an empty interior.
    """
    x0 = _as_state(x0)
    xK = _as_state(xK)
    interior = sample_bridge_interior(x0[None, :], xK[None, :], K, eps, rng)[0]
    return BridgePath(interior=interior, x0=x0, xK=xK, eps=eps, K=K)


def bridge_log_density(path: BridgePath) -> float:
    """Log of `bridge_density`: the sum of the per-substep Gaussian terms."""
    return float(
        bridge_interior_log_density(
            path.interior[None, :, :], path.x0[None, :], path.xK[None, :],
            path.K, path.eps,
        )[0]
    )


def bridge_density(path: BridgePath) -> float:
    """Density of a sampled path under the bridge proposal (1.0 for K = 1)."""
    return float(np.exp(bridge_log_density(path)))
