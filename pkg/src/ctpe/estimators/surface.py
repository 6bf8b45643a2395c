"""Fitted value surfaces ``V(s, t_n) = phi(s)^T w_n``."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from ..dynamics.models import TimeGrid, make_grid
from ..features import FeatureMap, make_features

ESTIMATOR_TAGS = ("BE", "Gen1", "Gen2", "Gen3", "MBLinear", "MBQuadratic")


@dataclass
class ValueSurface:
    """Per-grid-time feature weights.

    Attributes
    ----------
    grid : TimeGrid
    features : FeatureMap
    weights : ndarray of shape (N_T + 1, p)
    tag : str
        Estimator tag, e.g. ``"BE"`` or ``"Gen2"``.
    bandwidth : int
        Pooling width used for the fit.
    meta : dict
        Fit metadata (seed, ridge levels, startup mode, ...).
    blocks : list
        Moment blocks of the recursion, kept for diagnostics.
    """

    grid: TimeGrid
    features: FeatureMap
    weights: np.ndarray
    tag: str
    bandwidth: int = 1
    meta: dict = field(default_factory=dict)
    blocks: list = field(default_factory=list, repr=False)

    def predict(self, states, n: int) -> np.ndarray:
        """``V(s, t_n)`` for states of shape ``(..., d)``."""
        return self.features(states) @ self.weights[n]

    def evaluate(self, states) -> np.ndarray:
        """Values on per-index states of shape ``(K, N_T + 1, d)`` -> ``(K, N_T + 1)``."""
        states = np.asarray(states, dtype=float)
        phi = self.features(states)
        return np.einsum("knp,np->kn", phi, self.weights)

    def to_csv(self, path) -> None:
        meta = {"tag": self.tag, "family": self.features.family, "d": self.features.d,
                "horizon": self.grid.horizon, "dt": self.grid.dt, "bandwidth": self.bandwidth,
                **{k: v for k, v in self.meta.items() if isinstance(v, (int, float, str, type(None)))}}
        with open(path, "w", newline="") as fh:
            fh.write("# " + json.dumps(meta, sort_keys=True) + "\n")
            writer = csv.writer(fh)
            p = self.weights.shape[1]
            writer.writerow(["n", "t_n"] + [f"w_{k + 1}" for k in range(p)])
            for n, t in enumerate(self.grid.times):
                writer.writerow([n, repr(float(t))] + [repr(float(x)) for x in self.weights[n]])

    @classmethod
    def from_csv(cls, path) -> "ValueSurface":
        with open(path) as fh:
            meta = json.loads(fh.readline()[2:])
            rows = list(csv.reader(fh))[1:]
        weights = np.array([[float(x) for x in row[2:]] for row in rows])
        grid = make_grid(meta.pop("horizon"), meta.pop("dt"))
        fmap = make_features(meta.pop("family"), meta.pop("d"))
        return cls(grid, fmap, weights, meta.pop("tag"), bandwidth=meta.pop("bandwidth"), meta=meta)
