"""Backward recursions: the one-step Bellman baseline and order-i generator regression."""

from __future__ import annotations

import numpy as np
from scipy.linalg import cho_factor, cho_solve, lu_factor, lu_solve

from ..dynamics.models import DiffusionModel
from ..dynamics.simulate import TrajectoryBatch
from ..exceptions import SingularSystemError
from ..features import FeatureMap
from ..stencil import Stencil, solve_stencil
from .moments import PoolingWindow, SliceMoments, resolve_ridge
from .surface import ValueSurface

STARTUP_MODES = ("bellman", "terminal_copy", "oracle")
_SINGULAR_RTOL = 1e-12


def solve_symmetric(matrix: np.ndarray, rhs: np.ndarray, n: int | None = None) -> np.ndarray:
    """Cholesky solve with an explicit smallest-eigenvalue check."""
    evals = np.linalg.eigvalsh(matrix)
    top = max(float(np.abs(evals).max()), np.finfo(float).tiny)
    if evals.min() <= _SINGULAR_RTOL * top:
        raise SingularSystemError(
            f"singular regression system at n={n}: lambda_min={evals.min():.3e}, lambda_max={top:.3e}",
            index=n, sigma_min=float(evals.min()), norm=top,
        )
    return cho_solve(cho_factor(matrix), rhs)


def solve_system(matrix: np.ndarray, rhs: np.ndarray, n: int | None = None) -> np.ndarray:
    """LU solve of the (non-symmetric) recursion matrix with a sigma_min check."""
    sv = np.linalg.svd(matrix, compute_uv=False)
    if sv[-1] <= _SINGULAR_RTOL * sv[0]:
        raise SingularSystemError(
            f"recursion matrix singular at n={n}: sigma_min={sv[-1]:.3e}, ||M||={sv[0]:.3e}, cond={sv[0] / max(sv[-1], 1e-300):.3e}",
            index=n, sigma_min=float(sv[-1]), norm=float(sv[0]),
        )
    return lu_solve(lu_factor(matrix), rhs)


def _terminal_weights(moments: SliceMoments, states_N, fmap, model, ridge):
    N = moments.grid.n_steps
    G = moments.gram[N]
    lam = resolve_ridge(ridge, G)
    phi = moments.phi[:, N]
    rhs = phi.T @ model.terminal(states_N) / phi.shape[0]
    return solve_symmetric(G + lam * np.eye(moments.p), rhs, N), lam


def _bellman_step(moments: SliceMoments, n, w_next, window, ridge, discount):
    N, dt = moments.grid.n_steps, moments.grid.dt
    lo, hi = window.bounds(n, N, 1)
    G = moments.pooled("gram", lo, hi)
    G = 0.5 * (G + G.T)
    C = moments.pooled("cross", lo, hi, lag=1)
    b = moments.pooled("reward", lo, hi)
    lam = resolve_ridge(ridge, G)
    rhs = dt * b + np.exp(-discount * dt) * (C @ w_next)
    return solve_symmetric(G + lam * np.eye(moments.p), rhs, n), lam


def _regress_values(moments: SliceMoments, n, values, ridge):
    G = moments.gram[n]
    lam = resolve_ridge(ridge, G)
    phi = moments.phi[:, n]
    return solve_symmetric(G + lam * np.eye(moments.p), phi.T @ values / phi.shape[0], n)


def startup_block(batch: TrajectoryBatch, fmap: FeatureMap, model: DiffusionModel, order: int, ridge="auto",
                  mode: str = "bellman", window: PoolingWindow | int = 1, transitions: str = "sample",
                  moments: SliceMoments | None = None) -> dict:
    """Terminal-block weights ``{N_T: w, N_T-1: w, ..., N_T-order+1: w}``.

    ``mode="bellman"`` regresses the terminal payoff at ``N_T`` and fills the
    rest with fitted Bellman steps; ``"terminal_copy"`` repeats ``w_{N_T}``;
    ``"oracle"`` regresses the analytic value at each start-up slice (only
    for models with an analytic value; used to isolate the generator error
    in calibration studies).
    """
    if mode not in STARTUP_MODES:
        raise ValueError(f"startup must be one of {STARTUP_MODES}")
    if isinstance(window, int):
        window = PoolingWindow(window)
    if moments is None:
        moments = SliceMoments(batch, fmap, model, max(order, 1), transitions)
    N = batch.grid.n_steps
    w = {}
    w[N], _ = _terminal_weights(moments, batch.states[:, N], fmap, model, ridge)
    for ell in range(1, order):
        n = N - ell
        if mode == "bellman":
            w[n], _ = _bellman_step(moments, n, w[n + 1], window, ridge, model.discount)
        elif mode == "terminal_copy":
            w[n] = w[N].copy()
        else:
            from ..dynamics.truth import analytic_value

            values = analytic_value(model, batch.states[:, n], batch.grid.times[n])
            w[n] = _regress_values(moments, n, values, ridge)
    return w


def fit_bellman(batch: TrajectoryBatch, fmap: FeatureMap, model: DiffusionModel, window: PoolingWindow | int = 1,
                ridge="auto", transitions: str = "sample", moments: SliceMoments | None = None) -> ValueSurface:
    """Pooled fitted Bellman recursion.

    ``w_N`` regresses ``h(s_N)`` on ``phi``; then for ``n = N-1..0``::

        (G_n + ridge I) w_n = dt b_n + exp(-beta dt) C_n w_{n+1}

    where ``G_n``, ``b_n`` and the one-step cross moment
    ``C_n = mean phi(s_k) phi(s_{k+1})^T`` are pooled over the window of
    ``n``.  This is the normal-equation form of regressing the targets
    ``r dt + e^{-beta dt} phi(s_{k+1})^T w_{n+1}`` on ``phi(s_k)``.
    """
    if isinstance(window, int):
        window = PoolingWindow(window)
    if moments is None:
        moments = SliceMoments(batch, fmap, model, 1, transitions)
    N = batch.grid.n_steps
    weights = np.empty((N + 1, fmap.p))
    ridges = np.empty(N + 1)
    weights[N], ridges[N] = _terminal_weights(moments, batch.states[:, N], fmap, model, ridge)
    for n in range(N - 1, -1, -1):
        weights[n], ridges[n] = _bellman_step(moments, n, weights[n + 1], window, ridge, model.discount)
    return ValueSurface(batch.grid, fmap, weights, "BE", bandwidth=window.width,
                        meta={"seed": batch.seed, "ridge": float(ridges.mean()), "transitions": transitions})


def fit_gen(batch: TrajectoryBatch, fmap: FeatureMap, st: Stencil | int, model: DiffusionModel,
            window: PoolingWindow | int = 1, ridge="auto", startup: str = "bellman", transitions: str = "sample",
            moments: SliceMoments | None = None, keep_blocks: bool = True) -> ValueSurface:
    """Order-i generator regression.

    After the start-up block, for ``n = N_T - i .. 0`` solve::

        M_n w_n = b_n + (1/dt) (G_n + ridge I) sum_{j>=1} a_j w_{n+j}

    with ``M_n = (beta - a_0/dt)(G_n + ridge I) - A_n`` from pooled moments.

    Raises
    ------
    SingularSystemError
        If some ``M_n`` has ``sigma_min < 1e-12 ||M_n||``.
    """
    if not isinstance(st, Stencil):
        st = solve_stencil(st)
    if isinstance(window, int):
        window = PoolingWindow(window)
    i = st.order
    N = batch.grid.n_steps
    if N < i + 1:
        raise ValueError(f"grid with N_T={N} too short for order {i}; need N_T >= {i + 1}")
    if moments is None or moments.max_lag < i:
        moments = SliceMoments(batch, fmap, model, i, transitions)
    dt = batch.grid.dt
    weights = np.empty((N + 1, fmap.p))
    for n, w in startup_block(batch, fmap, model, i, ridge, startup, window, moments=moments).items():
        weights[n] = w
    blocks = []
    for n in range(N - i, -1, -1):
        blk = moments.blocks(st, n, window, ridge, model.discount)
        ahead = sum(st.coef[j] * weights[n + j] for j in range(1, i + 1))
        rhs = blk.reward + blk.regularized_gram @ ahead / dt
        weights[n] = solve_system(blk.system, rhs, n)
        if keep_blocks:
            blocks.append(blk)
    blocks.reverse()
    return ValueSurface(batch.grid, fmap, weights, f"Gen{i}", bandwidth=window.width,
                        meta={"seed": batch.seed, "ridge": float(np.mean([b.ridge for b in blocks])) if blocks else 0.0,
                              "startup": startup, "transitions": transitions, "order": i},
                        blocks=blocks)
