"""Named benchmark and calibration presets.

All presets modulate coefficients as ``base + zeta * amp * sin(2 pi t / T)``
and draw start states i.i.d. uniform on the listed box.

=========== === ===== ===== ============================================== ===============
id          d   T     beta  dynamics / reward                              start box
=========== === ===== ===== ============================================== ===============
ou1         1   1.0   0.5   OU, A=-0.2, K=1.8(+0.05), c=0.15(+0.1),        [-1.5, 1.5]
                            sigma=0.4(+0.05); r=(-1+0.5 sin)s+0.2, h=0
ou10        10  1.0   0.5   chain-coupled OU, affine reward                [-1, 1]^10
lqcal       2   2.0   0.5   double integrator, K=(1,1.2)(+(0.5,0.3)),      [-1, 1]^2
                            r=-s^T diag(1,0.2) s
regulator4  4   2.0   0.5   A=0.2I+chain skew (+0.5 chain sym), K=1.2I,    [-1, 1]^4
                            sigma=0.3I, r=-|s|^2, h=-0.5|s|^2
netlq12     12  2.0   0.5   A=0.2I-0.5 L_ring (+0.3 ring adjacency),       [-1, 1]^12
                            K=I, sigma=0.25I, r=-(4/d)|s|^2
netlq24     24  2.0   0.5   as netlq12 with d=24                           [-1, 1]^24
pendulum2   2   2.0   0.5   damped pendulum, K=(2,1)(+(0.8,0.3)),          [-1, 1]^2
                            sigma=diag(0.1,0.4), r=-s^T diag(1,0.2) s
oucos       1   1.0   0.3   drifted Brownian (no reversion), c=0.5(+0.5),  [-2, 2]
                            sigma=0.6, r=cos(s+2t), h=0
=========== === ===== ===== ============================================== ===============

Default ``zeta`` is 1 for every preset.  The linear presets (all but
``pendulum2``) support exact conditional moments and analytic values.
"""

from __future__ import annotations

import numpy as np

from .models import (
    Coef,
    CosineRewardModel,
    DiffusionModel,
    LinearGaussianModel,
    PendulumModel,
)


def _chain(d: int) -> np.ndarray:
    return np.eye(d, k=1)


def _ring_adjacency(d: int) -> np.ndarray:
    adj = np.eye(d, k=1) + np.eye(d, k=-1)
    adj[0, -1] = adj[-1, 0] = 1.0
    return adj


def _linear(name, d, *, A, K, sigma, c=None, R=None, r1=None, r0=0.0, H=None, h1=None, h0=0.0,
            B=None, horizon, discount, zeta, box, cls=LinearGaussianModel, **extra) -> LinearGaussianModel:
    z = np.zeros
    return cls(
        name=name, dim=d, horizon=horizon, discount=discount, zeta=zeta,
        B=np.eye(d) if B is None else np.asarray(B, dtype=float),
        K=K, sigma=sigma,
        start_low=np.full(d, -box), start_high=np.full(d, box),
        A=A,
        c=c if c is not None else Coef(z(d)),
        R=R if R is not None else Coef(z((d, d))),
        r1=r1 if r1 is not None else Coef(z(d)),
        r0=r0 if isinstance(r0, Coef) else Coef(np.asarray(float(r0))),
        H=z((d, d)) if H is None else np.asarray(H, dtype=float),
        h1=z(d) if h1 is None else np.asarray(h1, dtype=float),
        h0=float(h0),
        **extra,
    )


def ou1(zeta=1.0, discount=0.5, horizon=1.0) -> LinearGaussianModel:
    return _linear(
        "ou1", 1,
        A=Coef(np.array([[-0.2]])),
        K=Coef(np.array([[1.8]]), np.array([[0.05]])),
        c=Coef(np.array([0.15]), np.array([0.1])),
        sigma=Coef(np.array([[0.4]]), np.array([[0.05]])),
        r1=Coef(np.array([-1.0]), np.array([0.5])),
        r0=0.2,
        horizon=horizon, discount=discount, zeta=zeta, box=1.5,
    )


def ou10(zeta=1.0, discount=0.5, horizon=1.0) -> LinearGaussianModel:
    d = 10
    chain = _chain(d)
    alt = np.where(np.arange(d) % 2 == 0, 1.0, -1.0)
    return _linear(
        "ou10", d,
        A=Coef(-0.5 * np.eye(d) + 0.2 * (chain + chain.T), 0.3 * np.eye(d)),
        K=Coef(0.5 * np.eye(d), 0.3 * np.eye(d)),
        c=Coef(0.1 * np.ones(d), 0.3 * alt),
        sigma=Coef(0.4 * np.eye(d), 0.1 * np.eye(d)),
        r1=Coef(np.ones(d) / np.sqrt(d), 0.3 * alt / np.sqrt(d)),
        h1=0.5 * np.ones(d) / np.sqrt(d),
        horizon=horizon, discount=discount, zeta=zeta, box=1.0,
    )


def lqcal(zeta=1.0, discount=0.5, horizon=2.0) -> LinearGaussianModel:
    Q = np.diag([1.0, 0.2])
    return _linear(
        "lqcal", 2,
        A=Coef(np.array([[0.0, 1.0], [0.0, 0.0]])),
        B=np.array([[0.0], [1.0]]),
        K=Coef(np.array([[1.0, 1.2]]), np.array([[0.5, 0.3]])),
        sigma=Coef(np.diag([0.2, 0.4])),
        R=Coef(-Q),
        H=-0.5 * Q,
        horizon=horizon, discount=discount, zeta=zeta, box=1.0,
    )


def regulator4(zeta=1.0, discount=0.5, horizon=2.0) -> LinearGaussianModel:
    d = 4
    chain = _chain(d)
    return _linear(
        "regulator4", d,
        A=Coef(0.2 * np.eye(d) + 0.5 * (chain - chain.T), 0.5 * (chain + chain.T)),
        K=Coef(1.2 * np.eye(d)),
        sigma=Coef(0.3 * np.eye(d)),
        R=Coef(-np.eye(d)),
        H=-0.5 * np.eye(d),
        horizon=horizon, discount=discount, zeta=zeta, box=1.0,
    )


def _netlq(d, zeta, discount, horizon) -> LinearGaussianModel:
    adj = _ring_adjacency(d)
    lap = 2.0 * np.eye(d) - adj
    return _linear(
        f"netlq{d}", d,
        A=Coef(0.2 * np.eye(d) - 0.5 * lap, 0.3 * adj),
        K=Coef(np.eye(d)),
        sigma=Coef(0.25 * np.eye(d)),
        R=Coef(-(4.0 / d) * np.eye(d)),
        H=-(2.0 / d) * np.eye(d),
        horizon=horizon, discount=discount, zeta=zeta, box=1.0,
    )


def netlq12(zeta=1.0, discount=0.5, horizon=2.0) -> LinearGaussianModel:
    return _netlq(12, zeta, discount, horizon)


def netlq24(zeta=1.0, discount=0.5, horizon=2.0) -> LinearGaussianModel:
    return _netlq(24, zeta, discount, horizon)


def pendulum2(zeta=1.0, discount=0.5, horizon=2.0) -> PendulumModel:
    Q = np.diag([1.0, 0.2])
    return PendulumModel(
        name="pendulum2", dim=2, horizon=horizon, discount=discount, zeta=zeta,
        B=np.array([[0.0], [1.0]]),
        K=Coef(np.array([[2.0, 1.0]]), np.array([[0.8, 0.3]])),
        sigma=Coef(np.diag([0.1, 0.4])),
        start_low=np.full(2, -1.0), start_high=np.full(2, 1.0),
        damping=0.2, Q=Q, Q_T=0.5 * Q,
    )


def oucos(zeta=1.0, discount=0.3, horizon=1.0) -> CosineRewardModel:
    return _linear(
        "oucos", 1,
        A=Coef(np.zeros((1, 1))),
        K=Coef(np.zeros((1, 1))),
        c=Coef(np.array([0.5]), np.array([0.5])),
        sigma=Coef(np.array([[0.6]])),
        horizon=horizon, discount=discount, zeta=zeta, box=2.0,
        cls=CosineRewardModel, omega=2.0,
    )


PRESETS = {
    "ou1": ou1,
    "ou10": ou10,
    "lqcal": lqcal,
    "regulator4": regulator4,
    "netlq12": netlq12,
    "netlq24": netlq24,
    "pendulum2": pendulum2,
    "oucos": oucos,
}


def get_preset(name: str, **overrides) -> DiffusionModel:
    """Instantiate a preset by id; ``overrides`` may set zeta, discount, horizon."""
    try:
        factory = PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; available: {sorted(PRESETS)}") from None
    return factory(**overrides)
