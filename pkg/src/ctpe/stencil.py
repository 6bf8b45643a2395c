"""One-sided multistep coefficients for the first time derivative.

The order-``i`` stencil ``a = (a_0, ..., a_i)`` on the forward nodes
``0, 1, ..., i`` satisfies the moment conditions::

    sum_j a_j * j**k = 1   for k = 1
    sum_j a_j * j**k = 0   for k in {0, 2, ..., i}

so that ``(1/dt) * sum_j a_j f(t + j*dt) = f'(t) + O(dt**i)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import lu_factor, lu_solve

MAX_ORDER = 8


@dataclass(frozen=True)
class Stencil:
    """Solved order-``i`` coefficients with their truncation diagnostics.

    Attributes
    ----------
    order : int
        Accuracy order ``i``; the stencil spans ``i + 1`` grid points.
    coef : ndarray of shape (order + 1,)
        Coefficients ``a_0, ..., a_i``.
    residual : float
        Max-norm residual of the moment system at solve time.
    """

    order: int
    coef: np.ndarray
    residual: float = 0.0

    @property
    def abs_sum(self) -> float:
        """``S_i = sum_j |a_j|``, the amplification of per-step noise."""
        return float(np.abs(self.coef).sum())

    @property
    def leading(self) -> float:
        return leading_moment(self)

    def moment(self, k: int) -> float:
        return stencil_moment(self, k)

    def __repr__(self) -> str:
        return f"Stencil(order={self.order}, coef={np.array2string(self.coef, precision=6)})"


def _moment_system(order: int) -> tuple[np.ndarray, np.ndarray]:
    nodes = np.arange(order + 1, dtype=float)
    # row k holds j**k; numpy gives 0**0 == 1
    vander = nodes[None, :] ** np.arange(order + 1, dtype=float)[:, None]
    rhs = np.zeros(order + 1)
    rhs[1] = 1.0
    return vander, rhs


def solve_stencil(order: int) -> Stencil:
    """Solve the moment conditions for the order-``order`` stencil.

    The (order+1)x(order+1) Vandermonde system is factorised by LU with
    partial pivoting and refined once by iterative refinement.

    Raises
    ------
    ValueError
        If ``order`` is outside ``1..MAX_ORDER``.
    """
    order = int(order)
    if not 1 <= order <= MAX_ORDER:
        raise ValueError(f"stencil order must be in 1..{MAX_ORDER}, got {order}")
    vander, rhs = _moment_system(order)
    lu = lu_factor(vander)
    coef = lu_solve(lu, rhs)
    coef = coef + lu_solve(lu, rhs - vander @ coef)
    residual = float(np.max(np.abs(vander @ coef - rhs)))
    if residual > 1e-12 * max(1.0, float(np.abs(vander).max())):
        raise FloatingPointError(f"stencil residual {residual:.3e} too large at order {order}")
    return Stencil(order=order, coef=coef, residual=residual)


def stencil_moment(st: Stencil, k: int) -> float:
    """Return ``sum_j a_j * j**k`` with the convention ``0**0 == 1``."""
    if k < 0:
        raise ValueError("moment index must be nonnegative")
    nodes = np.arange(st.order + 1, dtype=float)
    return float(st.coef @ nodes**k)


def leading_moment(st: Stencil) -> float:
    """The first non-cancelled moment ``sum_j a_j * j**(i+1)``."""
    return stencil_moment(st, st.order + 1)
