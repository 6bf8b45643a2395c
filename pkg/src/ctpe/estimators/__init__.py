"""Bellman and generator-regression estimators, anchors and surrogates."""

from .anchors import FittedDynamics, FittedDynamicsModel, fit_mb_anchor, mb_value
from .api import BandwidthSelector, BellmanEstimator, FittedDynamicsEstimator, GeneratorEstimator
from .bandwidth import select_bandwidth, validation_score
from .moments import MomentBlocks, PoolingWindow, SliceMoments, assemble_moments, default_ridge
from .recursions import fit_bellman, fit_gen, solve_symmetric, solve_system, startup_block
from .surface import ESTIMATOR_TAGS, ValueSurface
from .surrogates import estimate_surrogates

__all__ = [
    "BandwidthSelector",
    "BellmanEstimator",
    "ESTIMATOR_TAGS",
    "FittedDynamics",
    "FittedDynamicsEstimator",
    "FittedDynamicsModel",
    "GeneratorEstimator",
    "MomentBlocks",
    "PoolingWindow",
    "SliceMoments",
    "ValueSurface",
    "assemble_moments",
    "default_ridge",
    "estimate_surrogates",
    "fit_bellman",
    "fit_gen",
    "fit_mb_anchor",
    "mb_value",
    "select_bandwidth",
    "solve_symmetric",
    "solve_system",
    "startup_block",
    "validation_score",
]
