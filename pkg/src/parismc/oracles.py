"""Exact reference computations for validating the particle algorithms.

Scalar linear-Gaussian state space: Kalman filter + RTS smoother, plus a
brute-force joint-Gaussian conditioner that serves as an independent check
of the Kalman code.  Finite-state chains: the exact filter and additive
smoothing recursions, plus exhaustive path enumeration as their brute-force
twin.  Also the closed-form transitions of the mean-reverting
Ornstein-Uhlenbeck process used throughout the benchmarks.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

__all__ = [
    "LgssSpec",
    "FiniteHmm",
    "ou_exact_transition",
    "composed_euler_ou_transition",
    "kalman_smooth_additive",
    "joint_gaussian_condition",
    "exact_additive_smoothing",
    "enumerate_additive_smoothing",
]


@dataclass(frozen=True)
class LgssSpec:
    """Scalar linear-Gaussian state-space model.

    State:       x_{n+1} = a x_n + b + Normal(0, q)
    Observation: y_n     = c x_n + d + Normal(0, r),  n >= 1
    Initial:     x_0 ~ Normal(m0, p0)
    """

    a: float
    b: float
    q: float
    c: float
    d: float
    r: float
    m0: float
    p0: float

    def __post_init__(self):
        if self.q <= 0 or self.r <= 0 or self.p0 <= 0:
            raise ValueError("q, r and p0 must be positive")


def ou_exact_transition(theta: float, delta: float, x):
    """Exact law of a unit-diffusion OU process after time ``delta``.

    dX = -(X - theta) dt + dW gives X_{t+delta} | X_t = x ~ Normal(mean, var)
    with mean = theta + (x - theta) exp(-delta) and var = (1 - exp(-2 delta))/2.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    decay = np.exp(-delta)
    mean = theta + (np.asarray(x, dtype=float) - theta) * decay
    var = (1.0 - decay**2) / 2.0
    if np.ndim(x) == 0:
        mean = float(mean)
    return mean, float(var)


def composed_euler_ou_transition(theta: float, eps: float, K: int, x):
    """Law of K composed Euler steps of size eps for the unit-diffusion OU.

    Each substep is Normal(theta + (1 - eps)(z - theta), eps); composing K of
    them stays Gaussian with mean theta + (1 - eps)^K (x - theta) and
    variance eps (1 - (1-eps)^{2K}) / (1 - (1-eps)^2).
    """
    if eps <= 0 or K < 1:
        raise ValueError("eps must be positive and K at least 1")
    rho = 1.0 - eps
    mean = theta + (np.asarray(x, dtype=float) - theta) * rho**K
    if abs(1.0 - rho**2) < 1e-14:
        var = eps * K
    else:
        var = eps * (1.0 - rho ** (2 * K)) / (1.0 - rho**2)
    if np.ndim(x) == 0:
        mean = float(mean)
    return mean, float(var)


def _kalman_pass(model: LgssSpec, observations: np.ndarray):
    n = observations.shape[0]
    fm = np.empty(n + 1)
    fp = np.empty(n + 1)
    pm = np.empty(n + 1)
    pp = np.empty(n + 1)
    fm[0], fp[0] = model.m0, model.p0
    pm[0], pp[0] = model.m0, model.p0
    for k in range(1, n + 1):
        pm[k] = model.a * fm[k - 1] + model.b
        pp[k] = model.a**2 * fp[k - 1] + model.q
        s = model.c**2 * pp[k] + model.r
        gain = pp[k] * model.c / s
        innov = observations[k - 1] - (model.c * pm[k] + model.d)
        fm[k] = pm[k] + gain * innov
        fp[k] = (1.0 - gain * model.c) * pp[k]
    return fm, fp, pm, pp


def kalman_smooth_additive(model: LgssSpec, observations: Sequence[float]):
    """Kalman forward pass + RTS backward pass for the additive functional.

    Returns ``(smoothed_means, total)`` where ``smoothed_means[k]`` is the
    posterior mean of x_k given y_{1:n} and ``total`` is their sum, i.e. the
    exact smoothed expectation of sum_k x_k.
    """
    y = np.asarray(observations, dtype=float)
    if y.ndim != 1 or y.size == 0:
        raise ValueError("observations must be a nonempty 1-d sequence")
    n = y.shape[0]
    fm, fp, pm, pp = _kalman_pass(model, y)
    sm = np.empty(n + 1)
    sm[n] = fm[n]
    for k in range(n - 1, -1, -1):
        gain = fp[k] * model.a / pp[k + 1]
        sm[k] = fm[k] + gain * (sm[k + 1] - pm[k + 1])
    return sm, float(sm.sum())


def joint_gaussian_condition(model: LgssSpec, observations: Sequence[float]) -> np.ndarray:
    """Smoothed state means by dense conditioning of the full joint Gaussian.

    Assembles mean and covariance of (x_0, ..., x_n, y_1, ..., y_n) directly
    from the recursions and conditions on the observations with one linear
    solve.  Independent of the Kalman code path; n is capped at 50.
    """
    y = np.asarray(observations, dtype=float)
    if y.ndim != 1 or y.size == 0:
        raise ValueError("observations must be a nonempty 1-d sequence")
    n = y.shape[0]
    if n > 50:
        raise ValueError("dense joint conditioning is capped at n = 50")

    mean_x = np.empty(n + 1)
    var_x = np.empty(n + 1)
    mean_x[0], var_x[0] = model.m0, model.p0
    for k in range(n):
        mean_x[k + 1] = model.a * mean_x[k] + model.b
        var_x[k + 1] = model.a**2 * var_x[k] + model.q

    cov_x = np.empty((n + 1, n + 1))
    for j in range(n + 1):
        cov_x[j, j] = var_x[j]
        for k in range(j + 1, n + 1):
            cov_x[j, k] = cov_x[k, j] = model.a ** (k - j) * var_x[j]

    mean_y = model.c * mean_x[1:] + model.d
    cov_y = model.c**2 * cov_x[1:, 1:] + model.r * np.eye(n)
    cov_xy = model.c * cov_x[:, 1:]

    try:
        np.linalg.cholesky(cov_y)
    except np.linalg.LinAlgError as exc:
        raise ValueError("observation covariance is not positive definite") from exc
    return mean_x + cov_xy @ np.linalg.solve(cov_y, y - mean_y)


@dataclass(frozen=True)
class FiniteHmm:
    """Finite-state path model given by explicit kernel matrices.

    ``init`` is the initial distribution over S states, ``trans[m]`` the
    S x S matrix of unnormalised transition-kernel values at step m, and
    ``increments[m]`` the matching matrix of additive-functional terms.
    """

    init: np.ndarray
    trans: np.ndarray
    increments: np.ndarray

    def __post_init__(self):
        init = np.asarray(self.init, dtype=float)
        trans = np.asarray(self.trans, dtype=float)
        increments = np.asarray(self.increments, dtype=float)
        s = init.shape[0]
        if init.ndim != 1 or s < 1:
            raise ValueError("init must be a nonempty probability vector")
        if np.any(init < 0) or abs(init.sum() - 1.0) > 1e-12:
            raise ValueError("init must sum to one")
        if trans.ndim != 3 or trans.shape[1:] != (s, s):
            raise ValueError("trans must be (n_steps, S, S)")
        if increments.shape != trans.shape:
            raise ValueError("increments must match trans in shape")
        if np.any(trans < 0) or np.any(trans.max(axis=2) <= 0):
            raise ValueError("each transition row needs a positive entry")
        object.__setattr__(self, "init", init)
        object.__setattr__(self, "trans", trans)
        object.__setattr__(self, "increments", increments)

    @property
    def num_states(self) -> int:
        return self.init.shape[0]

    @property
    def num_steps(self) -> int:
        return self.trans.shape[0]


def exact_additive_smoothing(hmm: FiniteHmm, n: int) -> float:
    """Exact smoothed expectation of the additive functional after n steps.

    Runs the exact filter recursion together with the backward-statistic
    recursion by matrix arithmetic and returns their final contraction.
    """
    if n < 1 or n > hmm.num_steps:
        raise ValueError("n must be between 1 and the number of model steps")
    filt = hmm.init.copy()
    stat = np.zeros(hmm.num_states)
    for m in range(n):
        kernel = hmm.trans[m]
        col = filt @ kernel
        if np.any(col <= 0):
            if col.sum() <= 0:
                raise ValueError(f"filter normaliser vanished at step {m}")
        backward = (filt[:, None] * kernel) / np.where(col > 0, col, 1.0)[None, :]
        stat = backward.T @ stat + np.sum(
            backward * hmm.increments[m], axis=0
        )
        filt = col / col.sum()
    return float(filt @ stat)


def enumerate_additive_smoothing(hmm: FiniteHmm, n: int) -> float:
    """Brute-force twin of `exact_additive_smoothing`: sum over all S^(n+1)
    paths of the functional weighted by unnormalised path mass."""
    if n < 1 or n > hmm.num_steps:
        raise ValueError("n must be between 1 and the number of model steps")
    s = hmm.num_states
    total_mass = 0.0
    total_value = 0.0
    for flat in range(s ** (n + 1)):
        path = []
        rest = flat
        for _ in range(n + 1):
            path.append(rest % s)
            rest //= s
        mass = hmm.init[path[0]]
        value = 0.0
        for m in range(n):
            mass *= hmm.trans[m][path[m], path[m + 1]]
            value += hmm.increments[m][path[m], path[m + 1]]
        total_mass += mass
        total_value += mass * value
    if total_mass <= 0:
        raise ValueError("model assigns zero mass to every path")
    return total_value / total_mass
