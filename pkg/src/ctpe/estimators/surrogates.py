"""Order-i drift and diffusion surrogates from multistep increments."""

from __future__ import annotations

import math

import numpy as np

from ..dynamics.models import DiffusionModel, require_exact_moments
from ..dynamics.simulate import TrajectoryBatch
from ..stencil import Stencil, solve_stencil


def _population_increments(model, s, t, dt, order):
    model = require_exact_moments(model)
    first, second = [], []
    for j in range(1, order + 1):
        Phi, q, P = model.transition(t, t + j * dt)
        mean = s @ Phi.T + q
        delta = mean - s
        first.append(delta)
        second.append(P + np.outer(delta, delta))
    return first, second


def _knn_increments(batch, s, n, order, k):
    N = batch.grid.n_steps
    if n + order > N:
        raise ValueError(f"index n={n} leaves fewer than {order} forward steps (N_T={N})")
    here = batch.states[:, n]
    if k is None:
        k = math.ceil(math.sqrt(here.shape[0]))
    if k < 1 or here.shape[0] == 0:
        raise ValueError("empty neighborhood for the conditional average")
    k = min(k, here.shape[0])
    dist = np.linalg.norm(here - s, axis=1)
    idx = np.argsort(dist, kind="stable")[:k]
    first, second = [], []
    for j in range(1, order + 1):
        delta = batch.states[idx, n + j] - here[idx]
        first.append(delta.mean(axis=0))
        second.append(delta.T @ delta / k)
    return first, second


def estimate_surrogates(source, st: Stencil | int, s, n: int, dt: float | None = None,
                        k: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Stencil-weighted drift and diffusion surrogates at ``(s, t_n)``.

    ``mu_i = (1/dt) sum_j a_j E[s_{t+j dt} - s | s_t = s]`` and ``Sigma_i``
    likewise with outer products of the increments.

    Parameters
    ----------
    source : TrajectoryBatch or LinearGaussianModel
        A batch selects the empirical mode (k-nearest-neighbour averaging
        over slice ``n``); a model with exact moments selects the
        population mode, which needs ``dt``.
    st : Stencil or int
    s : array_like of shape (d,)
    n : int
        Grid index; ``t = n * dt``.
    dt : float, optional
        Grid width (population mode only; taken from the batch otherwise).
    k : int, optional
        Neighbourhood size in empirical mode, default ``ceil(sqrt(M))``.

    Returns
    -------
    mu : ndarray of shape (d,)
    sigma : ndarray of shape (d, d)
    """
    if not isinstance(st, Stencil):
        st = solve_stencil(st)
    s = np.atleast_1d(np.asarray(s, dtype=float))
    if isinstance(source, TrajectoryBatch):
        dt = source.grid.dt
        first, second = _knn_increments(source, s, n, st.order, k)
    elif isinstance(source, DiffusionModel):
        if dt is None or dt <= 0:
            raise ValueError("population mode needs a positive dt")
        first, second = _population_increments(source, s, n * dt, dt, st.order)
    else:
        raise TypeError("source must be a TrajectoryBatch or a DiffusionModel")
    mu = sum(st.coef[j] * first[j - 1] for j in range(1, st.order + 1)) / dt
    sigma = sum(st.coef[j] * second[j - 1] for j in range(1, st.order + 1)) / dt
    return mu, 0.5 * (sigma + sigma.T)
