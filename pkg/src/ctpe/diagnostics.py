"""Error metrics, calibration slopes, recursion stability constants and the regime map."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .stencil import Stencil

REGIMES = ("i", "ii", "iii")


@dataclass
class MetricReport:
    """Value-error summary of one fit.

    ``integrated = sqrt(mean_n rmse_n**2)`` with uniform weights over the
    ``N_T + 1`` grid times; ``t0 = rmse_n[0]``.
    """

    integrated: float
    t0: float
    profile: np.ndarray
    tag: str = ""
    seed: int | None = None
    config_hash: str = ""

    def __post_init__(self):
        if not (np.isfinite(self.profile).all() and (self.profile >= 0).all()):
            raise ValueError("RMSE profile must be finite and nonnegative")


def metrics(surface, truth, seed=None, config_hash: str = "") -> MetricReport:
    """Per-time and integrated RMSE of ``surface`` against ``truth``.

    Parameters
    ----------
    surface : ValueSurface or GroundTruthTable
        Fitted surface, or a table of predicted values on the truth states.
    truth : GroundTruthTable
    """
    if hasattr(surface, "evaluate"):
        if surface.weights.shape[0] != truth.values.shape[1]:
            raise ValueError(
                f"truth covers {truth.values.shape[1]} grid times but the surface has {surface.weights.shape[0]}"
            )
        pred = surface.evaluate(truth.states)
        tag = surface.tag
    else:
        pred = np.asarray(surface.values)
        tag = getattr(surface, "provenance", "")
    if pred.shape != truth.values.shape:
        raise ValueError(f"prediction shape {pred.shape} does not match truth {truth.values.shape}")
    profile = np.sqrt(np.mean((pred - truth.values) ** 2, axis=0))
    return MetricReport(float(np.sqrt(np.mean(profile ** 2))), float(profile[0]), profile, tag, seed, config_hash)


def log_slope(points) -> float:
    """OLS slope of ``log(error)`` on ``log(dt)``.

    Parameters
    ----------
    points : sequence of (dt, error)
        At least three pairs with positive entries.
    """
    arr = np.asarray(points, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] < 3:
        raise ValueError("need at least three (dt, error) pairs")
    if np.any(arr <= 0):
        raise ValueError("log-log slope needs positive dt and error values")
    x, y = np.log(arr[:, 0]), np.log(arr[:, 1])
    x = x - x.mean()
    return float(x @ (y - y.mean()) / (x @ x))


@dataclass
class RecursionDiagnostics:
    """Stability constants of a fitted multistep recursion.

    Attributes
    ----------
    gamma : ndarray of shape (N_T - i + 1, i)
        ``gamma[n, j-1]`` weights the error ``e_{n+j}`` in the bound on ``e_n``.
    Lambda_G, lambda_G : float
        Extreme Gram eigenvalues over ``n``.
    m_min : float
        ``min_n sigma_min(M_n)``.
    C0 : float
        ``sqrt(Lambda_G) / m_min``.
    rho : float
        ``max_n ||C_n||_op`` over the companion matrices.
    C_ms : float
        Horizon-wide amplification of the companion recursion.
    phi0_norm : float
        ``||Phi(n, 0)||_op`` (always 1).
    """

    gamma: np.ndarray
    Lambda_G: float
    lambda_G: float
    m_min: float
    C0: float
    rho: float
    C_ms: float
    phi0_norm: float = 1.0
    sigma_min: np.ndarray = field(default=None, repr=False)

    @property
    def geometric(self) -> bool:
        return self.rho < 1.0

    @property
    def geometric_bound(self) -> float:
        return 1.0 / (1.0 - self.rho) if self.geometric else np.inf

    def check_geometric_bound(self, tol: float = 1e-9) -> bool:
        """``C_ms <= 1/(1 - rho)`` whenever ``rho < 1`` (vacuous otherwise)."""
        return (not self.geometric) or self.C_ms <= self.geometric_bound + tol

    def summary(self) -> dict:
        return {"rho": self.rho, "C0": self.C0, "C_ms": self.C_ms, "min_sigma": self.m_min}


def companion(gamma_row: np.ndarray) -> np.ndarray:
    i = gamma_row.shape[0]
    C = np.zeros((i, i))
    C[0] = gamma_row
    C[1:, :-1] = np.eye(i - 1)
    return C


def _opnorm(mat: np.ndarray) -> float:
    return float(np.linalg.svd(mat, compute_uv=False)[0])


def recursion_constants(blocks, st: Stencil, dt: float) -> RecursionDiagnostics:
    """Stability constants from the moment blocks of one Gen fit.

    ``blocks`` lists the :class:`MomentBlocks` for ``n = 0..N_T - i`` in
    increasing ``n``.  The Gram matrices entering every constant include the
    ridge, matching the matrices actually solved.
    """
    if not blocks:
        raise ValueError("no moment blocks supplied")
    blocks = sorted(blocks, key=lambda b: b.n)
    i = st.order
    grams = [b.regularized_gram for b in blocks]
    evals = [np.linalg.eigvalsh(G) for G in grams]
    Lambda_G = max(float(e[-1]) for e in evals)
    lambda_G = min(float(e[0]) for e in evals)
    if lambda_G <= 0:
        raise np.linalg.LinAlgError("Gram matrix is not positive definite; constants undefined")
    sig = np.array([np.linalg.svd(b.system, compute_uv=False)[-1] for b in blocks])
    if np.any(sig <= 0):
        n = blocks[int(np.argmin(sig))].n
        raise np.linalg.LinAlgError(f"singular recursion matrix at n={n}")
    m_min = float(sig.min())
    scale = np.sqrt(Lambda_G / lambda_G) / dt
    abs_a = np.abs(st.coef[1:])
    gamma = np.array([scale * abs_a * _opnorm(np.linalg.solve(b.system, G)) for b, G in zip(blocks, grams)])
    comps = [companion(g) for g in gamma]
    rho = max(_opnorm(C) for C in comps)
    L = len(comps)  # indices 0..N_T - i
    sums = np.empty(L)
    tails = np.empty(L)
    for n in range(L):
        prod = np.eye(i)
        total = 1.0  # ||Phi(n, 0)||
        for k in range(1, L - n + 1):
            prod = prod @ comps[n + k - 1]
            if k <= L - 1 - n:
                total += _opnorm(prod)
        sums[n] = total
        tails[n] = _opnorm(prod)
    C_ms = float(max(sums.max(), tails.max()))
    return RecursionDiagnostics(gamma, Lambda_G, lambda_G, m_min, float(np.sqrt(Lambda_G) / m_min), rho, C_ms,
                                phi0_norm=_opnorm(np.eye(i)), sigma_min=sig)


def bellman_bound(remaining: float, dt: float, norm_r: float, norm_dt_r: float, norm_L_r: float,
                  discount: float) -> float:
    """Leading sup-norm error bound of the one-step Bellman recursion.

    ``(T - t)/2 * (||L r|| + ||d_t r|| + beta ||r||) * dt`` with
    ``remaining = T - t``.
    """
    return 0.5 * remaining * (norm_L_r + norm_dt_r + discount * norm_r) * dt


def ns_floor(d: float, L: float, dt: float, M: float) -> float:
    """Nonstationarity floor ``(d L dt / M)^(1/3)``, up to an order-one constant."""
    if d <= 0 or dt <= 0 or M <= 0 or L < 0:
        raise ValueError("ns_floor needs d, dt, M > 0 and L >= 0")
    return float(np.cbrt(d * L * dt / M))


@dataclass
class RegimeInputs:
    """Regime-map row: inputs, floor, envelopes and label."""

    d: int
    dt: float
    M: int
    L: float
    F_ns: float
    envelopes: dict
    label: str
    warning: bool = False


def classify_regime(F_ns: float, dt: float, v3_dominant: bool = False):
    """Regime label and error envelopes for a floor ``F_ns`` at width ``dt``.

    Returns ``(label, envelopes)`` where ``label`` is ``"i"`` if
    ``F_ns >= dt``, ``"ii"`` if ``dt**2 <= F_ns < dt`` and ``"iii"`` if
    ``F_ns < dt**2``.  A dominant third-order variance demotes ``"iii"`` to
    ``"ii"`` and sets ``envelopes["v3_warning"]``.
    """
    if F_ns < 0 or dt < 0:
        raise ValueError("F_ns and dt must be nonnegative")
    if F_ns >= dt:
        label = "i"
    elif F_ns >= dt ** 2:
        label = "ii"
    else:
        label = "iii"
    warn = label == "iii" and bool(v3_dominant)
    if warn:
        label = "ii"
    envelopes = {"BE": dt + F_ns, "Gen2": dt ** 2 + F_ns, "Gen3": dt ** 3 + F_ns, "v3_warning": warn}
    return label, envelopes


def regime_inputs(d: int, L: float, dt: float, M: int, v3_dominant: bool = False) -> RegimeInputs:
    F = ns_floor(d, L, dt, M)
    label, env = classify_regime(F, dt, v3_dominant)
    return RegimeInputs(d, dt, M, L, F, env, label, env["v3_warning"])
