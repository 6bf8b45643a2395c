"""Closed-loop diffusion models.

Every model exposes the feedback decomposition

    mu(s, t) = f(s, t) - g @ K_eff(t) @ s,     u = -K(t) s,

where ``K_eff(t) = gain_scale * K(clip(t + time_shift, 0, T))``, and a
diffusion matrix that is constant in the state:
``sigma_eff(t) = sqrt(cov_scale) * sigma(t)``.  Controller perturbations
only touch ``gain_scale``, ``cov_scale`` and ``time_shift``; the evaluation
target (reward, terminal payoff, discount) never changes.

Time-varying coefficients follow a single convention: a coefficient ``X``
is ``X(t) = X.base + zeta * X.amp * sin(2*pi*t/T)``, so the nonstationarity
scale ``zeta`` multiplies every explicit time derivative and ``zeta = 0``
freezes the model.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.integrate import solve_ivp

from ..exceptions import CapabilityError

_ODE_TOL = dict(method="DOP853", rtol=1e-12, atol=1e-12)


@dataclass(frozen=True)
class TimeGrid:
    """Uniform decision grid ``t_n = n * dt`` for ``n = 0..n_steps``."""

    horizon: float
    dt: float
    n_steps: int

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_steps + 1) * self.dt

    def __len__(self) -> int:
        return self.n_steps + 1


def make_grid(horizon: float, dt: float) -> TimeGrid:
    """Build a grid, rejecting horizons that are not a whole number of steps."""
    horizon, dt = float(horizon), float(dt)
    if not (horizon > 0 and dt > 0):
        raise ValueError(f"horizon and dt must be positive, got T={horizon}, dt={dt}")
    quotient = horizon / dt
    n_steps = int(round(quotient))
    if abs(quotient - n_steps) > 1e-9 or n_steps < 1:
        raise ValueError(f"T/dt not integral: T/dt = {quotient!r}")
    return TimeGrid(horizon=horizon, dt=dt, n_steps=n_steps)


@dataclass(frozen=True)
class Coef:
    """A coefficient ``base + zeta * amp * sin(2 pi t / T)``."""

    base: np.ndarray
    amp: np.ndarray | None = None

    def at(self, t, zeta: float, horizon: float) -> np.ndarray:
        base = np.asarray(self.base, dtype=float)
        if self.amp is None or zeta == 0.0:
            return base
        return base + zeta * np.sin(2.0 * np.pi * t / horizon) * np.asarray(self.amp, dtype=float)

    def rate_bound(self, zeta: float, horizon: float) -> float:
        """``sup_t ||d/dt X(t)||_2``."""
        if self.amp is None:
            return 0.0
        return zeta * 2.0 * np.pi / horizon * float(np.linalg.norm(np.atleast_2d(self.amp), 2))

    def norm_bound(self, zeta: float) -> float:
        base = np.atleast_2d(np.asarray(self.base, dtype=float))
        amp = 0.0 if self.amp is None else zeta * np.linalg.norm(np.atleast_2d(self.amp), 2)
        return float(np.linalg.norm(base, 2) + amp)


def _coef(base, amp=None) -> Coef:
    return Coef(np.asarray(base, dtype=float), None if amp is None else np.asarray(amp, dtype=float))


@dataclass(frozen=True, eq=False)
class DiffusionModel:
    """Base class for time-inhomogeneous closed-loop diffusions.

    Subclasses implement :meth:`open_loop`, :meth:`reward` and
    :meth:`terminal`; drift assembly, perturbation and start sampling live
    here.
    """

    name: str
    dim: int
    horizon: float
    discount: float
    zeta: float
    B: np.ndarray
    K: Coef
    sigma: Coef
    start_low: np.ndarray
    start_high: np.ndarray
    gain_scale: float = 1.0
    cov_scale: float = 1.0
    time_shift: float = 0.0

    has_exact_moments = False

    def __post_init__(self):
        if self.discount < 0:
            raise ValueError("discount must be nonnegative")
        if self.zeta < 0:
            raise ValueError("nonstationarity scale must be nonnegative")

    # -- coefficients -------------------------------------------------
    @property
    def noise_dim(self) -> int:
        return np.atleast_2d(self.sigma.base).shape[1]

    def gain(self, t) -> np.ndarray:
        tc = np.clip(t + self.time_shift, 0.0, self.horizon)
        return self.gain_scale * np.atleast_2d(self.K.at(tc, self.zeta, self.horizon))

    def diffusion(self, t) -> np.ndarray:
        """``sigma(t)`` of shape ``(d, m)``; constant in the state."""
        return np.sqrt(self.cov_scale) * np.atleast_2d(self.sigma.at(t, self.zeta, self.horizon))

    def covariance(self, t) -> np.ndarray:
        sig = self.diffusion(t)
        return sig @ sig.T

    def open_loop(self, s, t) -> np.ndarray:
        raise NotImplementedError

    def drift(self, s, t) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        feedback = s @ (np.atleast_2d(self.B) @ self.gain(t)).T
        return self.open_loop(s, t) - feedback

    def reward(self, s, t) -> np.ndarray:
        raise NotImplementedError

    def terminal(self, s) -> np.ndarray:
        raise NotImplementedError

    # -- misc ---------------------------------------------------------
    def sample_start(self, rng: np.random.Generator, n: int) -> np.ndarray:
        lo = np.asarray(self.start_low, dtype=float)
        hi = np.asarray(self.start_high, dtype=float)
        return lo + (hi - lo) * rng.random((n, self.dim))

    @property
    def box_radius(self) -> float:
        corner = np.maximum(np.abs(self.start_low), np.abs(self.start_high))
        return float(np.linalg.norm(corner))

    def time_lipschitz(self) -> float:
        """``L_mu_t + L_Sigma_t`` over the start box (see the preset table)."""
        raise NotImplementedError

    def replace(self, **changes) -> "DiffusionModel":
        return dataclasses.replace(self, **changes)

    def __repr__(self) -> str:
        extras = ""
        if (self.gain_scale, self.cov_scale, self.time_shift) != (1.0, 1.0, 0.0):
            extras = f", gain={self.gain_scale}, cov={self.cov_scale}, shift={self.time_shift}"
        return f"{type(self).__name__}({self.name!r}, d={self.dim}, zeta={self.zeta}{extras})"


@dataclass(frozen=True, eq=False)
class LinearGaussianModel(DiffusionModel):
    """Linear closed loop with polynomial (degree <= 2) reward.

    ``ds = (A(t) s + c(t) - B K(t) s) dt + sigma(t) dW``, reward
    ``r(s, t) = s^T R(t) s + r1(t)^T s + r0(t)``, terminal
    ``h(s) = s^T H s + h1^T s + h0``.  Transitions are Gaussian, so exact
    conditional moments and the value function (quadratic in ``s``) are
    available by integrating matrix ODEs.
    """

    A: Coef = None
    c: Coef = None
    R: Coef = None
    r1: Coef = None
    r0: Coef = None
    H: np.ndarray = None
    h1: np.ndarray = None
    h0: float = 0.0
    _cache: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    has_exact_moments = True

    def closed_loop(self, t) -> np.ndarray:
        return np.atleast_2d(self.A.at(t, self.zeta, self.horizon)) - np.atleast_2d(self.B) @ self.gain(t)

    def offset(self, t) -> np.ndarray:
        return np.atleast_1d(self.c.at(t, self.zeta, self.horizon))

    def open_loop(self, s, t) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        return s @ np.atleast_2d(self.A.at(t, self.zeta, self.horizon)).T + self.offset(t)

    def reward_coefficients(self, t):
        R = np.atleast_2d(self.R.at(t, self.zeta, self.horizon))
        r1 = np.atleast_1d(self.r1.at(t, self.zeta, self.horizon))
        r0 = float(self.r0.at(t, self.zeta, self.horizon))
        return R, r1, r0

    def reward(self, s, t) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        R, r1, r0 = self.reward_coefficients(t)
        return np.einsum("...i,ij,...j->...", s, R, s) + s @ r1 + r0

    def terminal(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        H = np.atleast_2d(self.H)
        return np.einsum("...i,ij,...j->...", s, H, s) + s @ np.atleast_1d(self.h1) + self.h0

    def time_lipschitz(self) -> float:
        T, z = self.horizon, self.zeta
        B = np.atleast_2d(self.B)
        k_rate = self.gain_scale * self.K.rate_bound(z, T) * np.linalg.norm(B, 2)
        drift_rate = (self.A.rate_bound(z, T) + k_rate) * self.box_radius + self.c.rate_bound(z, T)
        sig_rate = self.sigma.rate_bound(z, T) * self.cov_scale
        cov_rate = 2.0 * sig_rate * self.sigma.norm_bound(z)
        return float(drift_rate + cov_rate)

    # -- exact transition moments --------------------------------------
    def transition(self, t0: float, t1: float):
        """Gaussian transition ``s_{t1} | s_{t0} = s ~ N(Phi s + q, P)``.

        Returns ``(Phi, q, P)`` integrated at tolerance 1e-12.
        """
        key = ("tr", round(float(t0), 12), round(float(t1), 12))
        if key in self._cache:
            return self._cache[key]
        d = self.dim
        if t1 == t0:
            out = (np.eye(d), np.zeros(d), np.zeros((d, d)))
            self._cache[key] = out
            return out

        def rhs(t, y):
            Phi = y[: d * d].reshape(d, d)
            q = y[d * d: d * d + d]
            P = y[d * d + d:].reshape(d, d)
            F = self.closed_loop(t)
            dP = F @ P + P @ F.T + self.covariance(t)
            return np.concatenate([(F @ Phi).ravel(), F @ q + self.offset(t), dP.ravel()])

        y0 = np.concatenate([np.eye(d).ravel(), np.zeros(d), np.zeros(d * d)])
        sol = solve_ivp(rhs, (t0, t1), y0, **_ODE_TOL)
        if not sol.success:
            raise RuntimeError(f"transition ODE failed: {sol.message}")
        y = sol.y[:, -1]
        P = y[d * d + d:].reshape(d, d)
        out = (y[: d * d].reshape(d, d), y[d * d: d * d + d].copy(), 0.5 * (P + P.T))
        self._cache[key] = out
        return out

    # -- analytic value ------------------------------------------------
    @cached_property
    def _value_solution(self):
        d, beta = self.dim, self.discount

        def rhs(t, y):
            P = y[: d * d].reshape(d, d)
            p = y[d * d: d * d + d]
            F, u0 = self.closed_loop(t), self.offset(t)
            R, r1, r0 = self.reward_coefficients(t)
            dP = -(P @ F + F.T @ P - beta * P + 0.5 * (R + R.T))
            dp = -(F.T @ p + 2.0 * P @ u0 - beta * p + r1)
            dc = -(p @ u0 + np.trace(self.covariance(t) @ P) - beta * y[-1] + r0)
            return np.concatenate([dP.ravel(), dp, [dc]])

        H = np.atleast_2d(self.H)
        yT = np.concatenate([(0.5 * (H + H.T)).ravel(), np.atleast_1d(self.h1).astype(float), [self.h0]])
        sol = solve_ivp(rhs, (self.horizon, 0.0), yT, dense_output=True, **_ODE_TOL)
        if not sol.success:
            raise RuntimeError(f"value ODE failed: {sol.message}")
        return sol

    def value_coefficients(self, t):
        """``(P, p, c)`` with ``V(s, t) = s^T P s + p^T s + c``."""
        d = self.dim
        y = self._value_solution.sol(float(t)) if t != self.horizon else self._value_solution.y[:, 0]
        return y[: d * d].reshape(d, d), y[d * d: d * d + d], float(y[-1])


@dataclass(frozen=True, eq=False)
class PendulumModel(DiffusionModel):
    """Damped pendulum under linear feedback; quadratic cost-to-go reward.

    ``ds = (s_2, -sin(s_1) - damping * s_2 + u) dt + sigma dW``, ``u = -K(t) s``.
    """

    damping: float = 0.2
    Q: np.ndarray = None
    Q_T: np.ndarray = None

    def open_loop(self, s, t) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        return np.stack([s[..., 1], -np.sin(s[..., 0]) - self.damping * s[..., 1]], axis=-1)

    def reward(self, s, t) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        return -np.einsum("...i,ij,...j->...", s, self.Q, s)

    def terminal(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        return -np.einsum("...i,ij,...j->...", s, self.Q_T, s)

    def time_lipschitz(self) -> float:
        k_rate = self.gain_scale * self.K.rate_bound(self.zeta, self.horizon)
        return float(k_rate * self.box_radius)


@dataclass(frozen=True, eq=False)
class CosineRewardModel(LinearGaussianModel):
    """Drifted Brownian motion (zero mean reversion) with bounded reward.

    ``ds = c(t) dt + sigma dW`` in one dimension and
    ``r(s, t) = cos(s + omega t)``, ``h = 0``.  Gaussian transitions give
    ``E[r(s_tau, tau) | s_t = s]`` in closed form, so both the true value
    and the exact one-step Bellman recursion reduce to 1-d quadrature.
    """

    omega: float = 1.0

    def reward(self, s, t) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        return np.cos(s[..., 0] + self.omega * t)

    def terminal(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        return np.zeros(s.shape[:-1])

    def expected_reward(self, s, t, tau) -> np.ndarray:
        """``E[r(s_tau, tau) | s_t = s]``."""
        Phi, q, P = self.transition(t, tau)
        mean = np.asarray(s, dtype=float)[..., 0] * Phi[0, 0] + q[0]
        return np.cos(mean + self.omega * tau) * np.exp(-0.5 * P[0, 0])

    def reward_norms(self) -> dict:
        """Sup norms of ``r``, ``d_t r`` and ``L r`` over ``R x [0, T]``.

        With ``L r = -c(t) sin(.) - sigma^2/2 cos(.)`` the sup over the
        phase is ``sqrt(c(t)^2 + sigma(t)^4 / 4)``; the sup over time is
        taken on a dense grid.
        """
        ts = np.linspace(0.0, self.horizon, 20001)
        c = np.array([self.offset(t)[0] for t in ts])
        v = np.array([self.covariance(t)[0, 0] for t in ts])
        return {
            "r": 1.0,
            "dt_r": abs(self.omega),
            "L_r": float(np.max(np.sqrt(c**2 + 0.25 * v**2))),
        }

    @property
    def _value_solution(self):
        raise CapabilityError("cosine-reward model has no polynomial value; use cosine_value")


def require_exact_moments(model: DiffusionModel) -> LinearGaussianModel:
    if not getattr(model, "has_exact_moments", False):
        raise CapabilityError(f"{model.name!r} has no exact conditional moments (nonlinear dynamics)")
    return model
