"""Per-slice and pooled regression moments driving the backward recursions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..dynamics.models import DiffusionModel, require_exact_moments
from ..dynamics.simulate import TrajectoryBatch
from ..features import FeatureMap
from ..stencil import Stencil

TRANSITION_MODES = ("sample", "exact")


@dataclass(frozen=True)
class PoolingWindow:
    """Symmetric, boundary-truncated window of ``width`` grid slices."""

    width: int = 1

    def __post_init__(self):
        if int(self.width) < 1:
            raise ValueError("pooling width must be >= 1")

    def bounds(self, n: int, n_steps: int, order: int) -> tuple[int, int]:
        """Inclusive slice range pooled at ``n``; every slice keeps ``order`` forward steps."""
        half = int(self.width) // 2
        lo = max(0, n - half)
        hi = min(n_steps - order, n + half)
        if lo > hi:
            raise ValueError(
                f"pooling window empty at n={n} (order {order}, N_T={n_steps}); width too large or n too late"
            )
        return lo, hi


@dataclass
class MomentBlocks:
    """Pooled moments at one grid index.

    ``system = (beta - a_0/dt) (gram + ridge I) - stiffness``.
    """

    n: int
    gram: np.ndarray
    stiffness: np.ndarray
    reward: np.ndarray
    system: np.ndarray
    n_eff: int
    ridge: float

    @property
    def regularized_gram(self) -> np.ndarray:
        return self.gram + self.ridge * np.eye(self.gram.shape[0])


def default_ridge(gram: np.ndarray) -> float:
    return 1e-6 * float(np.trace(gram)) / gram.shape[0]


def resolve_ridge(ridge, gram: np.ndarray) -> float:
    if ridge is None or (isinstance(ridge, str) and ridge == "auto"):
        return default_ridge(gram)
    ridge = float(ridge)
    if ridge < 0:
        raise ValueError("ridge must be nonnegative")
    return ridge


class SliceMoments:
    """Per-slice sample moments for one batch and feature map.

    Holds, for every grid slice ``k``, the averages over episodes of
    ``phi_k phi_k^T`` (``gram``), ``phi_k r_k`` (``reward``) and the lagged
    cross moments ``phi_k E?[phi_{k+j}]^T`` for ``j = 1..max_lag``.  With
    ``transitions="exact"`` the lagged feature is replaced by its exact
    conditional expectation given ``s_k`` (linear-Gaussian models only), which
    removes transition noise while keeping the sampled state law.
    """

    def __init__(self, batch: TrajectoryBatch, fmap: FeatureMap, model: DiffusionModel, max_lag: int,
                 transitions: str = "sample"):
        if transitions not in TRANSITION_MODES:
            raise ValueError(f"transitions must be one of {TRANSITION_MODES}")
        if transitions == "exact":
            require_exact_moments(model)
        states = batch.states
        M, N1, _ = states.shape
        self.grid = batch.grid
        self.n_episodes = M
        self.max_lag = max_lag
        times = batch.grid.times
        phi = fmap(states)  # (M, N+1, p)
        p = phi.shape[-1]
        self.p = p
        self.phi = phi
        rewards = np.stack([model.reward(states[:, k], times[k]) for k in range(N1)], axis=1)
        self.gram = np.einsum("mkp,mkq->kpq", phi, phi) / M
        self.reward = np.einsum("mkp,mk->kp", phi, rewards) / M
        # cross[j-1][k] = mean_m phi(s_k) E[phi(s_{k+j})]^T,  k = 0..N-j
        self.cross = []
        for j in range(1, max_lag + 1):
            if transitions == "sample":
                ahead = phi[:, j:]
            else:
                ahead = np.empty((M, N1 - j, p))
                for k in range(N1 - j):
                    Phi, q, P = model.transition(times[k], times[k + j])
                    ahead[:, k] = fmap.expected(states[:, k] @ Phi.T + q, P)
            self.cross.append(np.einsum("mkp,mkq->kpq", phi[:, : N1 - j], ahead) / M)
        self._csum = {}

    def _cumsum(self, key, arr):
        if key not in self._csum:
            c = np.cumsum(arr, axis=0)
            self._csum[key] = np.concatenate([np.zeros((1,) + arr.shape[1:]), c])
        return self._csum[key]

    def pooled(self, key: str, lo: int, hi: int, lag: int = 0) -> np.ndarray:
        """Average of a per-slice moment over slices ``lo..hi`` inclusive."""
        arr = {"gram": self.gram, "reward": self.reward}[key] if lag == 0 else self.cross[lag - 1]
        c = self._cumsum((key, lag), arr)
        return (c[hi + 1] - c[lo]) / (hi - lo + 1)

    def stiffness(self, st: Stencil, lo: int, hi: int) -> np.ndarray:
        """Pooled ``mean phi_k ((1/dt) sum_j a_j phi_{k+j})^T``."""
        if st.order > self.max_lag:
            raise ValueError("stencil order exceeds the lags assembled")
        out = st.coef[0] * self.pooled("gram", lo, hi)
        for j in range(1, st.order + 1):
            out = out + st.coef[j] * self.pooled("cross", lo, hi, lag=j)
        return out / self.grid.dt

    def blocks(self, st: Stencil, n: int, window: PoolingWindow, ridge, discount: float) -> MomentBlocks:
        N = self.grid.n_steps
        if not 0 <= n <= N - st.order:
            raise ValueError(f"index n={n} outside 0..{N - st.order} for order {st.order}")
        lo, hi = window.bounds(n, N, st.order)
        G = self.pooled("gram", lo, hi)
        G = 0.5 * (G + G.T)
        A = self.stiffness(st, lo, hi)
        b = self.pooled("reward", lo, hi)
        lam = resolve_ridge(ridge, G)
        Greg = G + lam * np.eye(self.p)
        system = (discount - st.coef[0] / self.grid.dt) * Greg - A
        if not (np.isfinite(system).all() and np.isfinite(b).all()):
            raise FloatingPointError(f"non-finite moment blocks at n={n}")
        return MomentBlocks(n=n, gram=G, stiffness=A, reward=b, system=system,
                            n_eff=self.n_episodes * (hi - lo + 1), ridge=lam)


def assemble_moments(batch: TrajectoryBatch, fmap: FeatureMap, st: Stencil, n: int, window: PoolingWindow,
                     ridge, model: DiffusionModel, transitions: str = "sample") -> MomentBlocks:
    """Pooled ``(G_n, A_n, b_n, M_n)`` at index ``n`` for stencil ``st``."""
    if isinstance(window, int):
        window = PoolingWindow(window)
    moments = SliceMoments(batch, fmap, model, st.order, transitions)
    return moments.blocks(st, n, window, ridge, model.discount)
