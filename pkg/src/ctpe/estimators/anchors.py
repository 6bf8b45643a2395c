"""Fitted-dynamics anchors: polynomial drift plus constant diffusion, valued by simulation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..dynamics.models import DiffusionModel, TimeGrid
from ..dynamics.simulate import TrajectoryBatch
from ..dynamics.truth import GroundTruthTable, _broadcast_states, mc_ground_truth
from ..exceptions import SimulationError
from ..features import make_features

DEGREES = {"linear": "linear", "quadratic": "quadratic"}
ANCHOR_RIDGE = 1e-8


@dataclass
class FittedDynamics:
    """Polynomial drift ``mu(s) = phi(s)^T coef`` and constant covariance.

    Attributes
    ----------
    degree : {"linear", "quadratic"}
    coef : ndarray of shape (p_dyn, d)
    sigma : ndarray of shape (d, d)
        Symmetric PSD covariance rate estimate.
    dt : float
        Grid width of the fitting data.
    """

    degree: str
    coef: np.ndarray
    sigma: np.ndarray
    dt: float

    @property
    def features(self):
        return make_features(DEGREES[self.degree], self.coef.shape[1])

    def drift(self, s) -> np.ndarray:
        return self.features(s) @ self.coef


def _psd_project(mat: np.ndarray) -> np.ndarray:
    mat = 0.5 * (mat + mat.T)
    evals, evecs = np.linalg.eigh(mat)
    return (evecs * np.clip(evals, 0.0, None)) @ evecs.T


def fit_mb_anchor(batch: TrajectoryBatch, degree: str = "linear") -> FittedDynamics:
    """Least-squares drift and residual diffusion from one-step increments.

    Regresses ``(s_{k+1} - s_k) / dt`` on polynomial features of ``s_k``
    pooled over all episodes and slices (ridge ``1e-8``).  The covariance
    rate is the residual covariance times ``dt``, symmetrized and projected
    onto the PSD cone.
    """
    if degree not in DEGREES:
        raise ValueError(f"degree must be one of {tuple(DEGREES)}")
    dt = batch.grid.dt
    d = batch.dim
    fmap = make_features(DEGREES[degree], d)
    X = fmap(batch.states[:, :-1].reshape(-1, d))
    Y = np.diff(batch.states, axis=1).reshape(-1, d) / dt
    if X.shape[0] < fmap.p:
        raise ValueError(f"need at least {fmap.p} transitions for a {degree} anchor, got {X.shape[0]}")
    coef = np.linalg.solve(X.T @ X + ANCHOR_RIDGE * np.eye(fmap.p), X.T @ Y)
    resid = Y - X @ coef
    cov = resid.T @ resid / max(resid.shape[0] - 1, 1) * dt
    return FittedDynamics(degree, coef, _psd_project(np.atleast_2d(cov)), dt)


class FittedDynamicsModel:
    """Simulation view of a fitted anchor; rewards come from the true model."""

    def __init__(self, dyn: FittedDynamics, reward_model: DiffusionModel):
        self.dyn = dyn
        self.reward_model = reward_model
        self.name = f"MB{dyn.degree}({reward_model.name})"
        self.dim = reward_model.dim
        self.horizon = reward_model.horizon
        self.discount = reward_model.discount
        evals, evecs = np.linalg.eigh(dyn.sigma)
        self._root = evecs * np.sqrt(np.clip(evals, 0.0, None))

    @property
    def noise_dim(self) -> int:
        return self._root.shape[1]

    def drift(self, s, t):
        return self.dyn.drift(s)

    def diffusion(self, t):
        return self._root

    def reward(self, s, t):
        return self.reward_model.reward(s, t)

    def terminal(self, s):
        return self.reward_model.terminal(s)


def mb_value(dyn: FittedDynamics, model: DiffusionModel, grid: TimeGrid, test_states, rollouts: int, seed: int,
             substeps: int = 16) -> GroundTruthTable:
    """Monte Carlo value table under the fitted dynamics with the true reward side.

    A rollout blow-up yields a table with ``provenance="invalid"`` and NaN
    values instead of an exception.
    """
    sim = FittedDynamicsModel(dyn, model)
    try:
        with np.errstate(over="ignore", invalid="ignore"):
            table = mc_ground_truth(sim, grid, test_states, rollouts, seed, substeps=substeps)
    except SimulationError:
        table = None
    if table is None or not np.isfinite(table.values).all():
        states = _broadcast_states(test_states, grid)
        nan = np.full(states.shape[:2], np.nan)
        return GroundTruthTable(states, nan, np.zeros_like(nan), "invalid", grid)
    table.provenance = f"fitted_{dyn.degree}"
    return table
