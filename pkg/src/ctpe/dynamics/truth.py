"""Ground-truth values, exact transition moments and controller perturbations."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from ..exceptions import CapabilityError
from .models import CosineRewardModel, DiffusionModel, LinearGaussianModel, TimeGrid, require_exact_moments
from .simulate import euler_maruyama, rng_for


@dataclass
class GroundTruthTable:
    """True values ``V(s, t_n)`` on a set of test states.

    ``states`` has shape ``(K, N_T + 1, d)``: test state ``k`` at grid
    index ``n`` is ``states[k, n]`` (a fixed state list is broadcast over
    ``n``).  ``se`` is zero for analytic entries.
    """

    states: np.ndarray
    values: np.ndarray
    se: np.ndarray
    provenance: str
    grid: TimeGrid

    def __post_init__(self):
        if np.any(self.se < 0):
            raise ValueError("standard errors must be nonnegative")


def _broadcast_states(test_states, grid: TimeGrid) -> np.ndarray:
    s = np.asarray(test_states, dtype=float)
    if s.ndim == 2:
        s = np.repeat(s[:, None, :], grid.n_steps + 1, axis=1)
    if s.ndim != 3 or s.shape[1] != grid.n_steps + 1:
        raise ValueError("test states must have shape (K, d) or (K, N_T + 1, d)")
    return s


def mc_ground_truth(model: DiffusionModel, grid: TimeGrid, test_states, rollouts: int, seed: int,
                    substeps: int = 16, indices=None) -> GroundTruthTable:
    """Monte Carlo values by fresh rollouts from every ``(state, t_n)``.

    Rollouts use Euler-Maruyama at step ``dt / substeps`` and integrate the
    reward with a left-Riemann sum on that fine grid, so the quadrature bias
    shrinks with ``substeps``.  All rollouts for index ``n`` share the
    stream ``rng_for(seed, "truth", n)`` (common random numbers across
    models).  ``indices`` restricts the work to those grid indices; the
    other columns are NaN.
    """
    if rollouts < 2:
        raise ValueError("need at least two rollouts to estimate a standard error")
    states = _broadcast_states(test_states, grid)
    K, N1, d = states.shape
    N = grid.n_steps
    values = np.empty((K, N1))
    se = np.zeros((K, N1))
    fine = grid.dt / substeps
    todo = range(N1) if indices is None else sorted({int(n) for n in indices})
    if indices is not None:
        values[:] = np.nan
        se[:] = np.nan
    for n in todo:
        if not 0 <= n <= N:
            raise ValueError(f"grid index {n} outside 0..{N}")
        if n == N:
            values[:, n] = model.terminal(states[:, n])
            se[:, n] = 0.0
            continue
        s0 = np.repeat(states[:, n], rollouts, axis=0)
        _, ret = euler_maruyama(model, s0, n * grid.dt, fine, (N - n) * substeps, rng_for(seed, "truth", n),
                                record_every=substeps, accumulate_reward=True)
        ret = ret.reshape(K, rollouts)
        values[:, n] = ret.mean(axis=1)
        se[:, n] = ret.std(axis=1, ddof=1) / np.sqrt(rollouts)
    return GroundTruthTable(states, values, se, "monte_carlo", grid)


def analytic_value(model: DiffusionModel, s, t) -> np.ndarray:
    """Exact ``V(s, t)`` for linear-Gaussian presets with polynomial reward.

    The value is ``s^T P(t) s + p(t)^T s + c(t)`` where the coefficients
    solve the backward ODEs implied by the value PDE (tolerance 1e-12).
    """
    if isinstance(model, CosineRewardModel):
        return cosine_value(model, s, t)
    if not isinstance(model, LinearGaussianModel):
        raise CapabilityError(f"no analytic value for {model.name!r}")
    s = np.asarray(s, dtype=float)
    if t >= model.horizon:
        return model.terminal(s)
    P, p, c = model.value_coefficients(t)
    return np.einsum("...i,ij,...j->...", s, P, s) + s @ p + c


def analytic_truth(model: DiffusionModel, grid: TimeGrid, test_states) -> GroundTruthTable:
    states = _broadcast_states(test_states, grid)
    values = np.stack([analytic_value(model, states[:, n], t) for n, t in enumerate(grid.times)], axis=1)
    return GroundTruthTable(states, values, np.zeros_like(values), "analytic", grid)


def exact_conditional_moments(model: DiffusionModel, s, t: float, lag: float):
    """Exact ``E[s_{t+lag} | s_t = s]`` and the uncentered second moment.

    Returns ``(mean, second)`` with shapes ``(..., d)`` and ``(..., d, d)``.
    """
    model = require_exact_moments(model)
    if lag < 0:
        raise ValueError("lag must be nonnegative")
    Phi, q, P = model.transition(t, t + lag)
    s = np.asarray(s, dtype=float)
    mean = s @ Phi.T + q
    return mean, P + mean[..., :, None] * mean[..., None, :]


def cosine_value(model: CosineRewardModel, s, t) -> np.ndarray:
    """True value of the cosine-reward preset by adaptive quadrature."""
    s = np.atleast_1d(np.asarray(s, dtype=float).reshape(-1))
    beta = model.discount

    def one(x):
        f = lambda tau: np.exp(-beta * (tau - t)) * float(model.expected_reward(np.array([x]), t, tau))
        val, _ = quad(f, t, model.horizon, epsabs=1e-13, epsrel=1e-13, limit=200)
        return val

    return np.array([one(x) for x in s])


def cosine_bellman_value(model: CosineRewardModel, s, t_index: int, dt: float) -> np.ndarray:
    """Exact one-step Bellman recursion value at ``t_n = t_index * dt``.

    With exact conditional expectations the recursion unrolls to the
    left-Riemann sum ``sum_j dt e^{-beta j dt} E[r(s_{t+j dt}, t + j dt)]``.
    """
    s = np.atleast_1d(np.asarray(s, dtype=float).reshape(-1))
    N = int(round(model.horizon / dt))
    t = t_index * dt
    total = np.zeros_like(s)
    for j in range(N - t_index):
        total += dt * np.exp(-model.discount * j * dt) * model.expected_reward(s[:, None], t, t + j * dt)
    return total


@dataclass(frozen=True)
class ControllerPerturbation:
    """Near-off-policy perturbation of the logging controller.

    kind : {"gain_shift", "covariance_inflation", "time_shift"}
    magnitude : float
        Gain multiplier, covariance multiplier, or time offset.
    """

    kind: str
    magnitude: float

    def __post_init__(self):
        if self.kind not in ("gain_shift", "covariance_inflation", "time_shift"):
            raise ValueError(f"unknown perturbation kind {self.kind!r}")
        if self.kind == "covariance_inflation" and self.magnitude < 0:
            raise ValueError("covariance inflation must be nonnegative")


def perturb_controller(model: DiffusionModel, p: ControllerPerturbation) -> DiffusionModel:
    """Copy of ``model`` with the controller perturbed; reward side unchanged."""
    if p.kind == "gain_shift":
        return model.replace(gain_scale=model.gain_scale * p.magnitude)
    if p.kind == "covariance_inflation":
        return model.replace(cov_scale=model.cov_scale * p.magnitude)
    return model.replace(time_shift=model.time_shift + p.magnitude)
