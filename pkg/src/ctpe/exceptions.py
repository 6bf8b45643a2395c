"""Exception types raised across the package."""

import numpy as np


class CapabilityError(ValueError):
    """The requested quantity is not available for this model."""


class SimulationError(FloatingPointError):
    """A simulated state became non-finite."""

    def __init__(self, message, episode=None, step=None):
        super().__init__(message)
        self.episode = episode
        self.step = step


class SingularSystemError(np.linalg.LinAlgError):
    """A recursion system matrix is numerically singular."""

    def __init__(self, message, index=None, sigma_min=None, norm=None):
        super().__init__(message)
        self.index = index
        self.sigma_min = sigma_min
        self.norm = norm
