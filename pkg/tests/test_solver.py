import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from oracles import dense_gamma_map, perturbed_field
from transonic.exceptions import ConfigError, InvalidStateError
from transonic.mesh import OBSTACLE
from transonic.solver import (
    FlowField,
    SolveConfig,
    TransonicFlowSolver,
    coefficients,
    epsilon_sweep,
    fixed_point_defect,
    fixed_point_solve,
    gamma_map,
    residual_jacobian,
    residual_vector,
    wall_flux,
)


@pytest.fixture
def wavy(small_bump_grid, air):
    return perturbed_field(small_bump_grid, air)


def test_lambda_zero_maps_to_zero(wavy):
    out = gamma_map(wavy, 0.0, 0.1)
    assert np.all(out.vector == 0.0)


@pytest.mark.parametrize("lam,eps", [(1.0, 0.1), (0.3, 0.2), (1.0, 0.025)])
def test_gamma_map_matches_dense_assembly(wavy, lam, eps):
    th, sg = dense_gamma_map(wavy, lam, eps)
    out = gamma_map(wavy, lam, eps)
    assert np.max(np.abs(out.theta_bar - th)) <= 1e-10
    assert np.max(np.abs(out.sigma_bar - sg)) <= 1e-10


def test_coefficients_match_finite_differences(air):
    sig = np.linspace(-0.2, -0.01, 7)
    step = 1e-4
    q = air.speed_of_sigma(sig)
    dq, drq = coefficients(air, q)
    fd = lambda f: (-f(sig + 2 * step) + 8 * f(sig + step) - 8 * f(sig - step) + f(sig - 2 * step)) / (12 * step)
    assert np.allclose(dq, fd(air.speed_of_sigma), rtol=1e-7)
    rq = lambda s: air.rho_of_sigma(s) * air.speed_of_sigma(s)
    assert np.allclose(drq, fd(rq), rtol=1e-7)


def test_uniform_flat_channel_is_fixed_point(flat_grid):
    for eps in (0.2, 0.05):
        field, rep = fixed_point_solve(SolveConfig(epsilon=eps), flat_grid)
        assert rep.converged and rep.iterations <= 2
        assert np.all(field.vector == 0.0)
        assert np.allclose(field.q, 0.5 * field.gas.q_cr)


def test_far_field_values(small_bump_grid, air):
    fld = FlowField.uniform(small_bump_grid, air, 0.7 * air.q_cr, theta_inf=0.1)
    assert fld.q_inf == pytest.approx(0.7 * air.q_cr, rel=1e-12)
    u, v = fld.boundary_velocity()
    assert np.allclose(np.hypot(u, v), fld.q_inf)
    assert np.allclose(np.arctan2(v, u), 0.1)


def test_signed_wall_flux_vanishes_for_tangent_flow(flat_grid, air):
    fld = FlowField.uniform(flat_grid, air, 0.5 * air.q_cr)
    assert np.all(wall_flux(fld, 1.0, 0.1, SolveConfig()) == 0.0)
    tilted = FlowField.uniform(flat_grid, air, 0.5 * air.q_cr, theta_inf=0.2)
    flux = wall_flux(tilted, 1.0, 0.1, SolveConfig())
    obs = flat_grid.face_tag == OBSTACLE
    assert np.all(flux[obs] > 0) and np.all(flux[~obs] == 0)


def test_residual_jacobian_against_dense_differences(wavy):
    cfg = SolveConfig()
    lam, eps = 0.7, 0.1
    jac = residual_jacobian(wavy, lam, eps, cfg).toarray()
    x = wavy.vector
    n = wavy.grid.n_cells
    rng = np.random.default_rng(3)
    for col in rng.choice(2 * n, 12, replace=False):
        e = np.zeros_like(x)
        e[col] = 1e-6
        plus = residual_vector(wavy.with_values(*np.split(x + e, 2)), lam, eps, cfg)
        minus = residual_vector(wavy.with_values(*np.split(x - e, 2)), lam, eps, cfg)
        ref = (plus - minus) / 2e-6
        assert np.allclose(jac[:, col], ref, atol=1e-4 * np.abs(ref).max())


def test_solved_field_is_fixed_point(small_bump_grid):
    cfg = SolveConfig(epsilon=0.2, lambda_steps=4)
    field, rep = fixed_point_solve(cfg, small_bump_grid)
    assert rep.converged and rep.defect < cfg.tol
    assert fixed_point_defect(field, 1.0, 0.2) < cfg.tol
    assert len(rep.lambda_iterations) == 4
    assert field.q.max() < field.gas.q_cr


def test_picard_and_ptc_agree_on_easy_problem(small_bump_grid):
    a, ra = fixed_point_solve(SolveConfig(epsilon=0.5, lambda_steps=2), small_bump_grid)
    b, rb = fixed_point_solve(SolveConfig(epsilon=0.5, lambda_steps=2, method="picard"), small_bump_grid)
    assert ra.converged and rb.converged
    assert np.max(np.abs(a.vector - b.vector)) < 1e-6


def test_non_convergence_is_reported(small_bump_grid):
    _, rep = fixed_point_solve(SolveConfig(epsilon=0.05, max_iter=1), small_bump_grid)
    assert not rep.converged
    assert "no convergence" in rep.message


def test_invalid_state_detected(small_bump_grid, air):
    fld = FlowField.uniform(small_bump_grid, air, 0.5 * air.q_cr)
    bad = fld.with_values(fld.theta_bar, fld.sigma_bar - 2 * fld.sigma_inf)
    with pytest.raises(InvalidStateError):
        bad.q
    nan = fld.with_values(fld.theta_bar * np.nan, fld.sigma_bar)
    with pytest.raises(InvalidStateError):
        nan.q


@pytest.mark.parametrize("kw", [
    {"q_inf_ratio": 1.0}, {"q_inf_ratio": 0.0}, {"gamma": 3.0}, {"epsilon": 0.0}, {"omega": 1.5},
    {"lambda_steps": 0}, {"bc_sign": "abs"}, {"method": "newton"}, {"scheme": "upstream"}, {"dt0": -1.0},
])
def test_config_validation(kw):
    with pytest.raises(ConfigError):
        SolveConfig(**kw)


def test_lambda_schedule():
    assert np.allclose(SolveConfig(lambda_steps=4).lambda_schedule(), [0.25, 0.5, 0.75, 1.0])
    assert np.allclose(SolveConfig(lambda_steps=2).lambda_schedule(0.5), [0.25, 0.5])


def test_estimator_interface(small_bump_grid):
    est = TransonicFlowSolver(epsilon=0.2, lambda_steps=3)
    with pytest.raises(NotFittedError):
        est.predict([[0.5, 0.5]])
    twin = clone(est)
    assert twin.get_params() == est.get_params()
    est.fit(small_bump_grid)
    assert est.converged_
    uv = est.predict(np.array([[0.5, 0.9], [0.1, 0.5]]))
    assert uv.shape == (2, 2)
    far = est.field_.q_inf
    assert np.hypot(*uv[0]) == pytest.approx(far, rel=0.05)
    with pytest.raises(ValueError):
        est.predict(np.ones((2, 3)))


def test_sweep_on_flat_channel(flat_grid):
    entries = epsilon_sweep(SolveConfig(), flat_grid, [0.2, 0.1, 0.05])
    assert [e.epsilon for e in entries] == [0.2, 0.1, 0.05]
    assert all(e.report.converged for e in entries)
    assert entries[0].dissipation == 0.0
    assert all(e.l2_change == 0.0 for e in entries[1:])
    with pytest.raises(ConfigError):
        epsilon_sweep(SolveConfig(), flat_grid, [0.1, 0.2])
