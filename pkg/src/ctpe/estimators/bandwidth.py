"""Validation-based choice of the temporal pooling width."""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from ..dynamics.models import DiffusionModel
from ..dynamics.simulate import TrajectoryBatch, realized_returns
from .surface import ValueSurface


def validation_score(surface: ValueSurface, val: TrajectoryBatch, model: DiffusionModel,
                     returns: np.ndarray | None = None) -> float:
    """Mean squared gap between fitted values and realized returns on ``val``."""
    if returns is None:
        returns = realized_returns(val, model)
    pred = surface.evaluate(val.states)
    return float(np.mean((pred - returns) ** 2))


def select_bandwidth(fit: Callable[[TrajectoryBatch, int], ValueSurface], candidates: Sequence[int],
                     train: TrajectoryBatch, val: TrajectoryBatch, model: DiffusionModel):
    """Pick the pooling width minimizing the validation score.

    Parameters
    ----------
    fit : callable
        ``fit(train, h) -> ValueSurface``.
    candidates : sequence of int
        Ascending widths.

    Returns
    -------
    best : int
        Argmin of the scores; ties go to the smallest width.
    scores : dict
        ``{h: score}``; a failed fit scores ``inf``.
    """
    candidates = [int(h) for h in candidates]
    if not candidates:
        raise ValueError("need at least one bandwidth candidate")
    if candidates != sorted(candidates):
        raise ValueError("bandwidth candidates must be sorted ascending")
    returns = realized_returns(val, model)
    scores = {}
    for h in candidates:
        try:
            score = validation_score(fit(train, h), val, model, returns)
        except (ValueError, ArithmeticError, np.linalg.LinAlgError):
            score = np.inf
        scores[h] = score if np.isfinite(score) else np.inf
    best = min(candidates, key=lambda h: (scores[h], h))
    return best, scores
