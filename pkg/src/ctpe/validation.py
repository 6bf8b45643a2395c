"""Input validation helpers in the spirit of ``sklearn.utils.validation``."""

from __future__ import annotations

import numbers

import numpy as np
from sklearn.exceptions import NotFittedError

from .dynamics.models import TimeGrid, make_grid
from .dynamics.simulate import TrajectoryBatch


def check_trajectories(X, grid: TimeGrid | None = None, dt: float | None = None) -> TrajectoryBatch:
    """Coerce ``X`` to a :class:`TrajectoryBatch`.

    ``X`` may already be a batch, or an array of shape ``(M, N_T + 1, d)``
    together with either ``grid`` or ``dt``.
    """
    if isinstance(X, TrajectoryBatch):
        batch = X
    else:
        states = np.asarray(X, dtype=float)
        if states.ndim == 2:
            states = states[:, :, None]
        if states.ndim != 3:
            raise ValueError(f"expected trajectories of shape (M, N_T+1, d), got {states.shape}")
        if grid is None:
            if dt is None:
                raise ValueError("a grid or dt is required with raw trajectory arrays")
            grid = make_grid((states.shape[1] - 1) * dt, dt)
        batch = TrajectoryBatch(states, grid)
    if not np.isfinite(batch.states).all():
        raise ValueError("trajectories contain non-finite states")
    return batch


def check_states(states, d: int) -> np.ndarray:
    s = np.asarray(states, dtype=float)
    if s.ndim == 1 and d == 1:
        s = s[:, None]
    if s.ndim == 1:
        s = s[None, :]
    if s.shape[-1] != d:
        raise ValueError(f"states must have trailing dimension {d}, got shape {s.shape}")
    return s


def check_positive_int(value, name: str, minimum: int = 1) -> int:
    if not isinstance(value, numbers.Integral) or value < minimum:
        raise ValueError(f"{name} must be an integer >= {minimum}, got {value!r}")
    return int(value)


def check_is_fitted(estimator, attribute: str = "surface_") -> None:
    if not hasattr(estimator, attribute):
        raise NotFittedError(
            f"This {type(estimator).__name__} instance is not fitted yet; call 'fit' first."
        )
