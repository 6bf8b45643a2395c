import numpy as np
import pytest
from hypothesis import given, settings, strategies as st_

from conftest import linear_model, scalar_model
from ctpe.dynamics import (
    PRESETS,
    ControllerPerturbation,
    TrajectoryBatch,
    analytic_truth,
    analytic_value,
    exact_conditional_moments,
    get_preset,
    make_grid,
    mc_ground_truth,
    perturb_controller,
    realized_return,
    realized_returns,
    rng_for,
    simulate,
)
from ctpe.exceptions import CapabilityError, SimulationError


def test_make_grid_examples():
    g = make_grid(1.0, 0.1)
    assert g.n_steps == 10
    assert g.times[3] == pytest.approx(0.3)
    assert g.times[-1] == 1.0
    assert make_grid(2.0, 0.5).n_steps == 4
    with pytest.raises(ValueError, match="T/dt not integral"):
        make_grid(1.0, 0.3)
    with pytest.raises(ValueError):
        make_grid(1.0, -0.1)


def test_exponential_flow():
    model = scalar_model(a=-1.0, sigma=0.0)
    batch = simulate(model, make_grid(1.0, 0.1), 1, seed=0, substeps=64, start=np.ones((1, 1)))
    assert abs(batch.states[0, -1, 0] - np.exp(-1.0)) < 1e-3


def test_substep_convergence():
    model = scalar_model(a=-1.0, sigma=0.0)
    grid = make_grid(1.0, 0.1)
    end = lambda k: simulate(model, grid, 1, seed=0, substeps=k, start=np.ones((1, 1))).states[0, -1, 0]
    ref = end(640)
    e1, e2 = abs(end(4) - ref), abs(end(8) - ref)
    assert 0.4 < e2 / e1 < 0.6


def test_simulate_shape_and_determinism():
    model = get_preset("pendulum2")
    grid = make_grid(2.0, 0.25)
    a = simulate(model, grid, 3, seed=11)
    b = simulate(model, grid, 3, seed=11)
    assert a.states.shape == (3, 9, 2)
    assert a.states.tobytes() == b.states.tobytes()
    assert not np.array_equal(a.states, simulate(model, grid, 3, seed=12).states)


def test_simulate_rejects_bad_args():
    model = get_preset("ou1")
    grid = make_grid(1.0, 0.1)
    with pytest.raises(ValueError):
        simulate(model, grid, 0, seed=0)
    with pytest.raises(ValueError):
        simulate(model, grid, 2, seed=0, substeps=0)


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_blow_up_reports_location():
    model = scalar_model(a=1e12, sigma=0.0)
    with pytest.raises(SimulationError) as err:
        simulate(model, make_grid(1.0, 0.1), 2, seed=0, substeps=4, start=np.ones((2, 1)))
    assert err.value.episode == 0
    assert err.value.step is not None


def test_streams_disjoint():
    draws = {d: rng_for(5, d).random(4) for d in ("train", "val", "test", "truth", "anchor")}
    vals = list(draws.values())
    for i in range(len(vals)):
        for j in range(i + 1, len(vals)):
            assert not np.allclose(vals[i], vals[j])
    np.testing.assert_array_equal(rng_for(5, "val").random(4), draws["val"])


def test_split_states_differ():
    model = get_preset("ou1")
    grid = make_grid(1.0, 0.1)
    tr = simulate(model, grid, 4, seed=0, split="train")
    va = simulate(model, grid, 4, seed=0, split="val")
    assert not np.shares_memory(tr.states, va.states)
    assert not np.allclose(tr.states[:, 0], va.states[:, 0])


def test_trajectory_round_trips(tmp_path):
    batch = simulate(get_preset("lqcal"), make_grid(2.0, 0.5), 3, seed=4, split="val")
    batch.to_csv(tmp_path / "traj.csv")
    back = TrajectoryBatch.from_csv(tmp_path / "traj.csv")
    np.testing.assert_array_equal(back.states, batch.states)
    assert (back.grid, back.split, back.seed) == (batch.grid, "val", 4)
    batch.save(tmp_path / "traj.npz")
    back = TrajectoryBatch.load(tmp_path / "traj.npz")
    np.testing.assert_array_equal(back.states, batch.states)
    assert (back.grid, back.split, back.seed) == (batch.grid, "val", 4)


def test_batch_shape_check():
    with pytest.raises(ValueError):
        TrajectoryBatch(np.zeros((2, 5, 1)), make_grid(1.0, 0.1))


def test_realized_return_examples():
    grid = make_grid(1.0, 0.1)
    states = np.random.default_rng(0).normal(size=(2, 11, 1))
    batch = TrajectoryBatch(states, grid)
    ones = scalar_model(r0=1.0, discount=0.0)
    assert realized_return(batch, 0, 0, ones) == pytest.approx(1.0)
    assert realized_return(batch, 1, 9, ones) == pytest.approx(0.1)
    term = scalar_model(h0=2.0, discount=0.7)
    for n in (0, 4, 10):
        assert realized_return(batch, 0, n, term) == pytest.approx(2.0 * np.exp(-0.7 * (1.0 - grid.times[n])))
    with pytest.raises(IndexError):
        realized_return(batch, 0, 11, ones)


def test_realized_returns_match_scalar_version():
    model = get_preset("ou1")
    batch = simulate(model, make_grid(1.0, 0.1), 3, seed=2)
    G = realized_returns(batch, model)
    for m in range(3):
        for n in range(11):
            assert G[m, n] == pytest.approx(realized_return(batch, m, n, model), abs=1e-12)


def test_mc_truth_examples():
    grid = make_grid(1.0, 0.25)
    states = np.array([[0.0], [1.0]])
    clock = scalar_model(sigma=0.0, r0=1.0, discount=0.0)
    tab = mc_ground_truth(clock, grid, states, rollouts=4, seed=0)
    np.testing.assert_allclose(tab.values, np.tile(1.0 - grid.times, (2, 1)), atol=1e-12)
    np.testing.assert_allclose(tab.se, 0.0, atol=1e-12)
    const = scalar_model(h0=3.0, discount=0.4)
    tab = mc_ground_truth(const, grid, states, rollouts=4, seed=0)
    np.testing.assert_allclose(tab.values, np.tile(3.0 * np.exp(-0.4 * (1.0 - grid.times)), (2, 1)), atol=1e-12)
    with pytest.raises(ValueError):
        mc_ground_truth(const, grid, states, rollouts=1, seed=0)


def test_mc_truth_indices_subset():
    model = get_preset("ou1")
    grid = make_grid(1.0, 0.25)
    states = np.array([[0.3], [-0.8]])
    full = mc_ground_truth(model, grid, states, rollouts=16, seed=2)
    part = mc_ground_truth(model, grid, states, rollouts=16, seed=2, indices=[1, 4])
    np.testing.assert_array_equal(part.values[:, [1, 4]], full.values[:, [1, 4]])
    assert np.isnan(part.values[:, 0]).all()
    with pytest.raises(ValueError):
        mc_ground_truth(model, grid, states, rollouts=16, seed=2, indices=[5])


def test_terminal_consistency():
    model = get_preset("pendulum2")
    grid = make_grid(2.0, 0.5)
    states = np.random.default_rng(1).uniform(-1, 1, size=(5, 2))
    tab = mc_ground_truth(model, grid, states, rollouts=8, seed=0)
    np.testing.assert_array_equal(tab.values[:, -1], model.terminal(states))


def test_discount_monotone_under_common_random_numbers():
    grid = make_grid(1.0, 0.25)
    states = np.linspace(-1, 1, 4)[:, None]
    base = dict(a=-0.5, sigma=0.5, R=1.0, r0=0.1, H=1.0)
    vals = [mc_ground_truth(scalar_model(discount=b, **base), grid, states, rollouts=64, seed=3).values
            for b in (0.0, 0.5, 1.0)]
    assert np.all(vals[0] >= vals[1] - 1e-12)
    assert np.all(vals[1] >= vals[2] - 1e-12)


def test_analytic_value_examples():
    model = scalar_model(sigma=0.0, r1=1.0, discount=0.0, horizon=1.0)
    for t in (0.0, 0.3, 1.0):
        assert analytic_value(model, np.array([2.0]), t) == pytest.approx(2.0 * (1.0 - t), abs=1e-9)
    ou = get_preset("ou1")
    s = np.array([[0.4], [-1.0]])
    np.testing.assert_allclose(analytic_value(ou, s, ou.horizon), ou.terminal(s))
    with pytest.raises(CapabilityError):
        analytic_value(get_preset("pendulum2"), s, 0.0)


def test_analytic_value_solves_pde():
    # centred differences of V against the backward equation at an interior point
    model = get_preset("ou1")
    s, t, e = 0.3, 0.4, 1e-4
    V = lambda x, tt: float(analytic_value(model, np.array([x]), tt))
    Vt = (V(s, t + e) - V(s, t - e)) / (2 * e)
    Vs = (V(s + e, t) - V(s - e, t)) / (2 * e)
    Vss = (V(s + e, t) - 2 * V(s, t) + V(s - e, t)) / e**2
    mu = float(model.drift(np.array([s]), t)[0])
    var = float(model.covariance(t)[0, 0])
    r = float(model.reward(np.array([s]), t))
    assert Vt + mu * Vs + 0.5 * var * Vss - model.discount * V(s, t) + r == pytest.approx(0.0, abs=1e-5)


def test_brownian_moments():
    model = scalar_model(sigma=1.0)
    s = np.array([0.7])
    for lag in (0.1, 0.3):
        mean, second = exact_conditional_moments(model, s, 0.2, lag)
        assert mean[0] == pytest.approx(0.7, abs=1e-10)
        assert second[0, 0] - mean[0] ** 2 == pytest.approx(lag, abs=1e-10)
    with pytest.raises(CapabilityError):
        exact_conditional_moments(get_preset("pendulum2"), np.zeros(2), 0.0, 0.1)


def test_ou_moments_match_monte_carlo():
    model = get_preset("ou1")
    s0, t0, lag = 0.8, 0.2, 0.3
    mean, second = exact_conditional_moments(model, np.array([s0]), t0, lag)
    from ctpe.dynamics import euler_maruyama

    n = 20000
    rec, _ = euler_maruyama(model, np.full((n, 1), s0), t0, lag / 300, 300, np.random.default_rng(0))
    end = rec[-1, :, 0]
    se = end.std(ddof=1) / np.sqrt(n)
    assert abs(end.mean() - mean[0]) < 3 * se
    se2 = (end**2).std(ddof=1) / np.sqrt(n)
    assert abs((end**2).mean() - second[0, 0]) < 3 * se2


def test_linear_transition_matches_expm():
    from scipy.linalg import expm

    A = np.array([[-0.5, 0.3], [0.1, -0.2]])
    model = linear_model(A, 0.0)
    Phi, q, P = model.transition(0.0, 0.4)
    np.testing.assert_allclose(Phi, expm(0.4 * A), atol=1e-10)
    np.testing.assert_allclose(q, 0.0, atol=1e-12)
    np.testing.assert_allclose(P, 0.0, atol=1e-12)


def test_gain_shift_regulator_by_hand():
    model = get_preset("regulator4")
    pert = perturb_controller(model, ControllerPerturbation("gain_shift", 2.0))
    rng = np.random.default_rng(0)
    chain = np.eye(4, k=1)
    for _ in range(5):
        s, t = rng.normal(size=4), rng.uniform(0, 2)
        A = 0.2 * np.eye(4) + 0.5 * (chain - chain.T) + np.sin(np.pi * t) * 0.5 * (chain + chain.T)
        expect = A @ s - 2.0 * 1.2 * s
        np.testing.assert_allclose(pert.drift(s, t), expect, atol=1e-12)
    np.testing.assert_allclose(pert.reward(s, 0.3), model.reward(s, 0.3))
    assert pert.discount == model.discount


def test_covariance_inflation():
    model = get_preset("regulator4")
    pert = perturb_controller(model, ControllerPerturbation("covariance_inflation", 4.0))
    np.testing.assert_allclose(pert.covariance(0.7), 4.0 * model.covariance(0.7))


def test_time_shift_clamps():
    model = get_preset("ou1")
    pert = perturb_controller(model, ControllerPerturbation("time_shift", 0.5))
    np.testing.assert_allclose(pert.gain(0.9), model.gain(1.0))
    np.testing.assert_allclose(pert.gain(0.2), model.gain(0.7))


@pytest.mark.parametrize("name", sorted(PRESETS))
@pytest.mark.parametrize("kind,identity", [("gain_shift", 1.0), ("covariance_inflation", 1.0), ("time_shift", 0.0)])
def test_perturbation_identity(name, kind, identity):
    model = get_preset(name)
    pert = perturb_controller(model, ControllerPerturbation(kind, identity))
    rng = np.random.default_rng(1)
    s = rng.uniform(-1, 1, size=(1000, model.dim))
    ts = rng.uniform(0, model.horizon, size=1000)
    for k in range(0, 1000, 50):
        np.testing.assert_array_equal(pert.drift(s[k:k + 50], ts[k]), model.drift(s[k:k + 50], ts[k]))
        np.testing.assert_array_equal(pert.diffusion(ts[k]), model.diffusion(ts[k]))


def test_unknown_perturbation():
    with pytest.raises(ValueError):
        ControllerPerturbation("rotate", 1.0)


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_presets_simulate_finite(name):
    model = get_preset(name)
    batch = simulate(model, make_grid(model.horizon, model.horizon / 4), 4, seed=0)
    assert np.isfinite(batch.states).all()
    assert model.time_lipschitz() >= 0


def test_unknown_preset():
    with pytest.raises(KeyError):
        get_preset("ou3")


@settings(max_examples=25, deadline=None)
@given(zeta=st_.floats(0, 3), t=st_.floats(0, 1))
def test_time_lipschitz_bounds_drift_rate(zeta, t):
    model = get_preset("ou1", zeta=zeta)
    s = np.array([[model.box_radius]])
    e = 1e-6
    rate = abs(float(model.drift(s, t + e)[0, 0] - model.drift(s, t)[0, 0])) / e
    assert rate <= model.time_lipschitz() + 1e-3


def test_analytic_truth_table():
    model = get_preset("ou1")
    grid = make_grid(1.0, 0.25)
    tab = analytic_truth(model, grid, np.array([[0.1], [0.5]]))
    assert tab.values.shape == (2, 5)
    assert tab.provenance == "analytic"
    np.testing.assert_array_equal(tab.se, 0.0)
