"""Closed-loop diffusion models, simulation and ground truth."""

from .models import (
    Coef,
    CosineRewardModel,
    DiffusionModel,
    LinearGaussianModel,
    PendulumModel,
    TimeGrid,
    make_grid,
)
from .presets import PRESETS, get_preset
from .simulate import (
    TrajectoryBatch,
    euler_maruyama,
    realized_return,
    realized_returns,
    rng_for,
    simulate,
)
from .truth import (
    ControllerPerturbation,
    GroundTruthTable,
    analytic_truth,
    analytic_value,
    cosine_bellman_value,
    cosine_value,
    exact_conditional_moments,
    mc_ground_truth,
    perturb_controller,
)

__all__ = [
    "Coef",
    "ControllerPerturbation",
    "CosineRewardModel",
    "DiffusionModel",
    "GroundTruthTable",
    "LinearGaussianModel",
    "PRESETS",
    "PendulumModel",
    "TimeGrid",
    "TrajectoryBatch",
    "analytic_truth",
    "analytic_value",
    "cosine_bellman_value",
    "cosine_value",
    "euler_maruyama",
    "exact_conditional_moments",
    "get_preset",
    "make_grid",
    "mc_ground_truth",
    "perturb_controller",
    "realized_return",
    "realized_returns",
    "rng_for",
    "simulate",
]
