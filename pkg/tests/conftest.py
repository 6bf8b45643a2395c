import numpy as np
import pytest

from ctpe.dynamics import Coef
from ctpe.dynamics.presets import _linear


def scalar_model(*, a=0.0, k=0.0, c=0.0, sigma=0.5, R=0.0, r1=0.0, r0=0.0, H=0.0, h1=0.0, h0=0.0,
                 discount=0.5, horizon=1.0, box=1.0):
    """One-dimensional linear-Gaussian model with constant coefficients."""
    m = lambda x: Coef(np.array([[float(x)]]))
    v = lambda x: Coef(np.array([float(x)]))
    return _linear(
        "scalar", 1, A=m(a), K=m(k), sigma=m(sigma), c=v(c), R=m(R), r1=v(r1), r0=r0,
        H=[[H]], h1=[h1], h0=h0, horizon=horizon, discount=discount, zeta=0.0, box=box,
    )


def linear_model(A, sigma, *, discount=0.5, horizon=1.0, box=1.0, r1=None):
    """``ds = A s dt + sigma dW`` with zero gain; reward ``r1 . s``."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    d = A.shape[0]
    sig = sigma * np.eye(d) if np.ndim(sigma) == 0 else np.asarray(sigma, dtype=float)
    return _linear(
        "linear", d, A=Coef(A), K=Coef(np.zeros((d, d))), sigma=Coef(sig),
        r1=None if r1 is None else Coef(np.asarray(r1, dtype=float)),
        horizon=horizon, discount=discount, zeta=0.0, box=box,
    )


@pytest.fixture
def make_scalar():
    return scalar_model


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.summary_lines():
        terminalreporter.write_line(line)
