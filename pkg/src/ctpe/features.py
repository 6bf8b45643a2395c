"""Polynomial feature families shared by every fitted estimator.

Family compositions (the constant 1 is always the first coordinate):

========== =====================================================
constant   ``[1]`` (degenerate; used by closed-form checks)
linear     ``[1, s]``
quadratic  ``linear + s_a*s_b for a <= b``
reduced    ``linear + s_a**2``
richer     ``quadratic + s_a**3``
========== =====================================================
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

FAMILIES = ("constant", "linear", "quadratic", "reduced", "richer")


def feature_dim(family: str, d: int) -> int:
    if family == "constant":
        return 1
    if family == "linear":
        return 1 + d
    if family == "quadratic":
        return 1 + d + d * (d + 1) // 2
    if family == "reduced":
        return 1 + 2 * d
    if family == "richer":
        return 1 + 2 * d + d * (d + 1) // 2
    raise ValueError(f"unknown feature family {family!r}; expected one of {FAMILIES}")


@dataclass(frozen=True)
class FeatureMap:
    """Deterministic map ``phi: R^d -> R^p`` for one family.

    Attributes
    ----------
    family : str
    d : int
        State dimension.
    bound : float or None
        Empirical estimate of ``max ||phi(s)||_2`` over a reference sample
        (see :meth:`with_bound`); diagnostic only.
    """

    family: str
    d: int
    bound: float | None = field(default=None, compare=False)

    def __post_init__(self):
        feature_dim(self.family, self.d)  # validates the family name
        if self.d < 1:
            raise ValueError("state dimension must be >= 1")

    @property
    def p(self) -> int:
        return feature_dim(self.family, self.d)

    @property
    def _pairs(self) -> tuple[np.ndarray, np.ndarray]:
        return np.triu_indices(self.d)

    def __call__(self, s) -> np.ndarray:
        return eval_features(self, s)

    def with_bound(self, states) -> "FeatureMap":
        phi = eval_features(self, np.asarray(states, dtype=float).reshape(-1, self.d))
        bound = float(np.sqrt((phi**2).sum(axis=1)).max())
        return FeatureMap(self.family, self.d, bound)

    def expected(self, mean, cov) -> np.ndarray:
        """``E[phi(X)]`` for ``X ~ N(mean, cov)``.

        ``mean`` has shape ``(..., d)``; ``cov`` is one ``(d, d)`` matrix
        shared by every row (the linear-Gaussian transition case).
        """
        mean = np.asarray(mean, dtype=float)
        cov = np.asarray(cov, dtype=float).reshape(self.d, self.d)
        out = [np.ones(mean.shape[:-1] + (1,))]
        if self.family == "constant":
            return out[0]
        out.append(mean)
        if self.family in ("quadratic", "richer"):
            a, b = self._pairs
            out.append(mean[..., a] * mean[..., b] + cov[a, b])
        if self.family == "reduced":
            out.append(mean**2 + np.diag(cov))
        if self.family == "richer":
            # third raw moment of a Gaussian coordinate
            out.append(mean**3 + 3.0 * mean * np.diag(cov))
        return np.concatenate(out, axis=-1)


def make_features(family: str, d: int) -> FeatureMap:
    return FeatureMap(family, int(d))


def eval_features(fmap: FeatureMap, s) -> np.ndarray:
    """Evaluate ``phi`` on states of shape ``(..., d)``."""
    s = np.asarray(s, dtype=float)
    if s.ndim == 0 or s.shape[-1] != fmap.d:
        raise ValueError(f"expected states with trailing dimension {fmap.d}, got shape {s.shape}")
    parts = [np.ones(s.shape[:-1] + (1,))]
    if fmap.family == "constant":
        return parts[0]
    parts.append(s)
    if fmap.family in ("quadratic", "richer"):
        a, b = fmap._pairs
        parts.append(s[..., a] * s[..., b])
    elif fmap.family == "reduced":
        parts.append(s**2)
    if fmap.family == "richer":
        parts.append(s**3)
    return np.concatenate(parts, axis=-1)


def gram(fmap: FeatureMap, states) -> np.ndarray:
    """Sample second-moment matrix ``mean(phi(s) phi(s)^T)``."""
    states = np.asarray(states, dtype=float).reshape(-1, fmap.d)
    if states.shape[0] == 0:
        raise ValueError("gram needs at least one state")
    phi = eval_features(fmap, states)
    g = phi.T @ phi / phi.shape[0]
    return 0.5 * (g + g.T)
