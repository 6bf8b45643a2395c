"""scikit-learn style estimators wrapping the recursions.

Every estimator takes trajectories ``X`` (a :class:`TrajectoryBatch` or an
array of shape ``(M, N_T + 1, d)`` with ``dt``) and the model supplying the
reward side, and exposes the fitted :class:`ValueSurface` as ``surface_``.
``score`` is the negative mean squared gap to realized returns.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, clone

from ..dynamics.simulate import euler_maruyama, rng_for
from ..features import make_features
from ..validation import check_is_fitted, check_positive_int, check_states, check_trajectories
from .anchors import DEGREES, FittedDynamicsModel, fit_mb_anchor
from .bandwidth import select_bandwidth, validation_score
from .moments import TRANSITION_MODES, PoolingWindow
from .recursions import STARTUP_MODES, fit_bellman, fit_gen


class _SurfaceMixin:
    def predict(self, states, n: int) -> np.ndarray:
        """Fitted ``V(s, t_n)``."""
        check_is_fitted(self)
        states = check_states(states, self.surface_.features.d)
        return self.surface_.predict(states, n)

    def score(self, X, model, dt=None) -> float:
        check_is_fitted(self)
        return -validation_score(self.surface_, check_trajectories(X, dt=dt), model)


class BellmanEstimator(_SurfaceMixin, BaseEstimator):
    """Pooled one-step Bellman regression (the first-order baseline).

    Parameters
    ----------
    features : str, default="quadratic"
        Feature family.
    bandwidth : int, default=1
        Pooling width in grid slices.
    ridge : float or "auto", default="auto"
    transitions : {"sample", "exact"}, default="sample"
    """

    def __init__(self, features="quadratic", bandwidth=1, ridge="auto", transitions="sample"):
        self.features = features
        self.bandwidth = bandwidth
        self.ridge = ridge
        self.transitions = transitions

    def fit(self, X, model, dt=None):
        batch = check_trajectories(X, dt=dt)
        check_positive_int(self.bandwidth, "bandwidth")
        if self.transitions not in TRANSITION_MODES:
            raise ValueError(f"transitions must be one of {TRANSITION_MODES}")
        fmap = make_features(self.features, batch.dim)
        self.surface_ = fit_bellman(batch, fmap, model, PoolingWindow(self.bandwidth), self.ridge, self.transitions)
        return self


class GeneratorEstimator(_SurfaceMixin, BaseEstimator):
    """Order-i generator regression.

    Parameters
    ----------
    order : int, default=2
    features : str, default="quadratic"
    bandwidth : int, default=1
    ridge : float or "auto", default="auto"
    startup : {"bellman", "terminal_copy", "oracle"}, default="bellman"
    transitions : {"sample", "exact"}, default="sample"
    """

    def __init__(self, order=2, features="quadratic", bandwidth=1, ridge="auto", startup="bellman",
                 transitions="sample"):
        self.order = order
        self.features = features
        self.bandwidth = bandwidth
        self.ridge = ridge
        self.startup = startup
        self.transitions = transitions

    def fit(self, X, model, dt=None):
        batch = check_trajectories(X, dt=dt)
        check_positive_int(self.order, "order")
        check_positive_int(self.bandwidth, "bandwidth")
        if self.startup not in STARTUP_MODES:
            raise ValueError(f"startup must be one of {STARTUP_MODES}")
        fmap = make_features(self.features, batch.dim)
        self.surface_ = fit_gen(batch, fmap, self.order, model, PoolingWindow(self.bandwidth), self.ridge,
                                self.startup, self.transitions)
        return self


class FittedDynamicsEstimator(BaseEstimator):
    """Fitted-dynamics anchor valued by Monte Carlo at prediction time.

    Parameters
    ----------
    degree : {"linear", "quadratic"}, default="linear"
    rollouts : int, default=256
    substeps : int, default=16
    seed : int, default=0
    """

    def __init__(self, degree="linear", rollouts=256, substeps=16, seed=0):
        self.degree = degree
        self.rollouts = rollouts
        self.substeps = substeps
        self.seed = seed

    def fit(self, X, model, dt=None):
        batch = check_trajectories(X, dt=dt)
        if self.degree not in DEGREES:
            raise ValueError(f"degree must be one of {tuple(DEGREES)}")
        self.dynamics_ = fit_mb_anchor(batch, self.degree)
        self.grid_ = batch.grid
        self.model_ = FittedDynamicsModel(self.dynamics_, model)
        return self

    def predict(self, states, n: int) -> np.ndarray:
        """Monte Carlo ``V(s, t_n)`` under the fitted dynamics; NaN on blow-up."""
        check_is_fitted(self, "dynamics_")
        states = check_states(states, self.model_.dim)
        grid, R, sub = self.grid_, self.rollouts, self.substeps
        if n == grid.n_steps:
            return self.model_.terminal(states)
        s0 = np.repeat(states, R, axis=0)
        try:
            with np.errstate(over="ignore", invalid="ignore"):
                _, ret = euler_maruyama(self.model_, s0, n * grid.dt, grid.dt / sub, (grid.n_steps - n) * sub,
                                        rng_for(self.seed, "anchor", n), record_every=sub, accumulate_reward=True)
        except FloatingPointError:
            return np.full(states.shape[0], np.nan)
        return ret.reshape(-1, R).mean(axis=1)


class BandwidthSelector(BaseEstimator):
    """Validation-based choice of ``bandwidth`` for a wrapped estimator.

    Parameters
    ----------
    estimator : BellmanEstimator or GeneratorEstimator
    candidates : sequence of int, default=(1, 2, 4, 8)
    """

    def __init__(self, estimator=None, candidates=(1, 2, 4, 8)):
        self.estimator = estimator
        self.candidates = candidates

    def fit(self, X, model, X_val, dt=None):
        train = check_trajectories(X, dt=dt)
        val = check_trajectories(X_val, dt=dt)
        base = GeneratorEstimator() if self.estimator is None else self.estimator

        def fit_one(batch, h):
            return clone(base).set_params(bandwidth=h).fit(batch, model).surface_

        self.bandwidth_, self.scores_ = select_bandwidth(fit_one, list(self.candidates), train, val, model)
        self.best_estimator_ = clone(base).set_params(bandwidth=self.bandwidth_).fit(train, model)
        self.surface_ = self.best_estimator_.surface_
        return self

    def predict(self, states, n: int) -> np.ndarray:
        check_is_fitted(self)
        return self.best_estimator_.predict(states, n)
