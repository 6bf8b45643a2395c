"""Euler-Maruyama simulation of logged closed-loop trajectories."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..exceptions import SimulationError
from .models import DiffusionModel, TimeGrid, make_grid

# Disjoint hash domains for RNG streams; see ``rng_for``.
STREAM_DOMAINS = {"train": 0, "val": 1, "test": 2, "truth": 3, "anchor": 4}
BLOCK_SIZE = 256


def rng_for(seed: int, domain: str, cell: int = 0) -> np.random.Generator:
    """Independent generator for ``(seed, domain, cell)``.

    Streams are derived by SeedSequence hashing, so the result does not
    depend on which worker runs the cell or in what order.
    """
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(STREAM_DOMAINS[domain], int(cell)))
    return np.random.default_rng(ss)


@dataclass
class TrajectoryBatch:
    """``M`` logged episodes recorded on a uniform grid.

    Attributes
    ----------
    states : ndarray of shape (M, N_T + 1, d)
    grid : TimeGrid
    split : {"train", "val", "test"}
    seed : int
    perturbation : str or None
        Human-readable description of the controller perturbation, if any.
    """

    states: np.ndarray
    grid: TimeGrid
    split: str = "train"
    seed: int | None = None
    perturbation: str | None = None
    substeps: int | None = field(default=None, compare=False)

    def __post_init__(self):
        self.states = np.asarray(self.states, dtype=float)
        if self.states.ndim != 3:
            raise ValueError(f"states must have shape (M, N_T+1, d), got {self.states.shape}")
        if self.states.shape[1] != self.grid.n_steps + 1:
            raise ValueError(
                f"states carry {self.states.shape[1]} time points but the grid has {self.grid.n_steps + 1}"
            )

    @property
    def n_episodes(self) -> int:
        return self.states.shape[0]

    @property
    def dim(self) -> int:
        return self.states.shape[2]

    @property
    def dt(self) -> float:
        return self.grid.dt

    def to_csv(self, path) -> None:
        """Write long-format CSV with columns ``episode, n, s_1..s_d``."""
        M, N1, d = self.states.shape
        with open(path, "w", newline="") as fh:
            fh.write(f"# horizon={self.grid.horizon!r} dt={self.grid.dt!r} split={self.split} seed={self.seed}\n")
            writer = csv.writer(fh)
            writer.writerow(["episode", "n"] + [f"s_{k + 1}" for k in range(d)])
            for m in range(M):
                for n in range(N1):
                    writer.writerow([m, n] + [repr(float(x)) for x in self.states[m, n]])

    @classmethod
    def from_csv(cls, path) -> "TrajectoryBatch":
        with open(path) as fh:
            header = fh.readline().lstrip("# ").split()
            meta = dict(item.split("=", 1) for item in header)
            rows = list(csv.reader(fh))
        cols = rows[0]
        data = np.array(rows[1:], dtype=float)
        d = len(cols) - 2
        M = int(data[:, 0].max()) + 1
        N1 = int(data[:, 1].max()) + 1
        states = np.empty((M, N1, d))
        states[data[:, 0].astype(int), data[:, 1].astype(int)] = data[:, 2:]
        grid = make_grid(float(meta["horizon"]), float(meta["dt"]))
        seed = None if meta.get("seed") in (None, "None") else int(meta["seed"])
        return cls(states, grid, split=meta.get("split", "train"), seed=seed)

    def save(self, path) -> None:
        """Columnar binary (``.npz``): ``states`` plus grid/provenance scalars."""
        np.savez(
            Path(path), states=self.states, horizon=self.grid.horizon, dt=self.grid.dt,
            split=self.split, seed=-1 if self.seed is None else self.seed,
            perturbation="" if self.perturbation is None else self.perturbation,
        )

    @classmethod
    def load(cls, path) -> "TrajectoryBatch":
        with np.load(Path(path)) as z:
            seed = int(z["seed"])
            pert = str(z["perturbation"])
            return cls(z["states"], make_grid(float(z["horizon"]), float(z["dt"])), split=str(z["split"]),
                       seed=None if seed < 0 else seed, perturbation=pert or None)


def euler_maruyama(model: DiffusionModel, s0, t0: float, dt: float, n_steps: int, rng,
                   record_every: int = 1, accumulate_reward: bool = False):
    """Integrate ``n_steps`` Euler-Maruyama steps of size ``dt`` from ``(s0, t0)``.

    Returns ``(recorded, ret)`` where ``recorded`` has shape
    ``(n_steps // record_every + 1, n, d)`` and ``ret`` is the left-Riemann
    discounted reward integral over the fine steps plus the discounted
    terminal payoff (``None`` unless ``accumulate_reward``).
    """
    s = np.array(s0, dtype=float, copy=True)
    n, d = s.shape
    m = model.noise_dim
    recorded = [s.copy()]
    ret = np.zeros(n) if accumulate_reward else None
    sqdt = np.sqrt(dt)
    beta = model.discount
    for k in range(n_steps):
        t = t0 + k * dt
        if accumulate_reward:
            ret += np.exp(-beta * k * dt) * model.reward(s, t) * dt
        noise = rng.standard_normal((n, m)) * sqdt
        s = s + model.drift(s, t) * dt + noise @ model.diffusion(t).T
        if (k + 1) % record_every == 0:
            bad = ~np.isfinite(s).all(axis=1)
            if bad.any():
                ep = int(np.flatnonzero(bad)[0])
                step = (k + 1) // record_every
                raise SimulationError(f"non-finite state in episode {ep} at grid step {step}", ep, step)
            recorded.append(s.copy())
    if accumulate_reward:
        ret += np.exp(-beta * n_steps * dt) * model.terminal(s)
    return np.stack(recorded), ret


def simulate(model: DiffusionModel, grid: TimeGrid, n_episodes: int, seed: int, substeps: int = 16,
             split: str = "train", start=None) -> TrajectoryBatch:
    """Simulate ``n_episodes`` logged episodes on ``grid``.

    Episodes are generated in blocks of ``BLOCK_SIZE``; each block draws from
    its own stream ``rng_for(seed, split, block)``, so the output is a pure
    function of ``(seed, model, grid, n_episodes, substeps, split)``.

    Parameters
    ----------
    start : ndarray of shape (n_episodes, d), optional
        Fixed start states; default draws from the model's start box.
    """
    if n_episodes < 1:
        raise ValueError("need at least one episode")
    if substeps < 1:
        raise ValueError("substeps must be >= 1")
    fine = grid.dt / substeps
    out = np.empty((n_episodes, grid.n_steps + 1, model.dim))
    for block, lo in enumerate(range(0, n_episodes, BLOCK_SIZE)):
        hi = min(lo + BLOCK_SIZE, n_episodes)
        rng = rng_for(seed, split, block)
        s0 = model.sample_start(rng, BLOCK_SIZE)[: hi - lo] if start is None else np.asarray(start)[lo:hi]
        try:
            rec, _ = euler_maruyama(model, s0, 0.0, fine, grid.n_steps * substeps, rng, record_every=substeps)
        except SimulationError as err:
            raise SimulationError(
                f"non-finite state in episode {lo + err.episode} at grid step {err.step}", lo + err.episode, err.step
            ) from None
        out[lo:hi] = np.swapaxes(rec, 0, 1)
    pert = None
    if (model.gain_scale, model.cov_scale, model.time_shift) != (1.0, 1.0, 0.0):
        pert = f"gain={model.gain_scale},cov={model.cov_scale},shift={model.time_shift}"
    return TrajectoryBatch(out, grid, split=split, seed=seed, perturbation=pert, substeps=substeps)


def realized_returns(batch: TrajectoryBatch, model: DiffusionModel) -> np.ndarray:
    """Discounted left-Riemann returns ``G[m, n]`` for every episode and index."""
    N, dt = batch.grid.n_steps, batch.grid.dt
    times = batch.grid.times
    disc = np.exp(-model.discount * dt)
    G = np.empty(batch.states.shape[:2])
    G[:, N] = model.terminal(batch.states[:, N])
    for n in range(N - 1, -1, -1):
        G[:, n] = model.reward(batch.states[:, n], times[n]) * dt + disc * G[:, n + 1]
    return G


def realized_return(batch: TrajectoryBatch, episode: int, n: int, model: DiffusionModel) -> float:
    """``sum_{k=n}^{N-1} e^{-beta (t_k - t_n)} r(s_k, t_k) dt + e^{-beta (T - t_n)} h(s_N)``."""
    N = batch.grid.n_steps
    if not 0 <= n <= N:
        raise IndexError(f"index {n} outside 0..{N}")
    times = batch.grid.times
    path = batch.states[episode]
    ks = np.arange(n, N)
    running = np.exp(-model.discount * (times[ks] - times[n])) * np.array(
        [model.reward(path[k], times[k]) for k in ks]).reshape(-1)
    return float(running.sum() * batch.grid.dt
                 + np.exp(-model.discount * (batch.grid.horizon - times[n])) * model.terminal(path[N]))
