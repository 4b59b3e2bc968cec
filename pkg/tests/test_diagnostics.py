import numpy as np
import pytest
from scipy.optimize import brentq

from transonic.diagnostics import (
    conservation_residual,
    containment_report,
    dissipation_integral,
    entropy_inequality_check,
    obstacle_mass_flux,
    sonic_line,
    stagnation_report,
    subdomain_mask,
    test_functions as hat_functions,
)
from transonic.mesh import DomainSpec, build_grid
from transonic.solver import FlowField, SolveConfig, fixed_point_solve


@pytest.fixture(scope="module")
def box():
    return build_grid(DomainSpec("box", length=1.0, height=1.0), 1.0 / 32)


def _with_speed(grid, gas, q, q_inf_ratio=0.5):
    fld = FlowField.uniform(grid, gas, q_inf_ratio * gas.q_cr)
    return fld.with_values(np.zeros(grid.n_cells), gas.sigma_of_speed(q) - fld.sigma_inf)


def test_uniform_field_passes_everything(flat_grid, air):
    fld = FlowField.uniform(flat_grid, air, 0.5 * air.q_cr)
    cont = containment_report(fld)
    assert cont.fraction_inside == 1.0 and cont.all_inside
    assert cont.supersonic_cells == 0 and cont.cavitation_gap > 0
    assert entropy_inequality_check(fld).positive_part <= 1e-10
    dis = dissipation_integral(fld, 0.1)
    assert dis.I2 == 0.0 and dis.I1 == 0.0 and abs(dis.flux) < 1e-12
    assert all(r["alpha"] == pytest.approx(fld.q_inf) for r in stagnation_report(fld, (0.1, 0.2)))
    assert sonic_line(fld).empty
    assert max(conservation_residual(fld, 0.1).values()) < 1e-12
    assert obstacle_mass_flux(fld) == 0.0


def test_near_cavitation_cell_is_flagged(flat_grid, air):
    fld = FlowField.uniform(flat_grid, air, 0.5 * air.q_cr)
    q = fld.q.copy()
    q[17] = air.q_cav - 1e-6
    cont = containment_report(fld, q=q)
    assert cont.fraction_inside < 1.0 and not cont.all_inside
    assert cont.cavitation_gap == pytest.approx(1e-6)


def test_hats_have_zero_mean_derivative(box):
    n = 0
    for phi, px, py in hat_functions(box):
        n += 1
        assert phi.min() >= 0 and phi.max() > 0
        assert abs(px.sum()) < 1e-9 and abs(py.sum()) < 1e-9
    assert n > 100


def test_expansion_jump_violates_and_shock_does_not(box, air):
    q1 = 1.2 * air.q_cr
    mass = air.density(q1) * q1
    q2 = brentq(lambda q: air.density(q) * q - mass, 0.3 * air.q_cr, air.q_cr)
    shock = _with_speed(box, air, np.where(box.x < 0.51, q1, q2), 0.9)
    expansion = _with_speed(box, air, np.where(box.x < 0.51, q2, q1), 0.9)
    ok, bad = entropy_inequality_check(shock), entropy_inequality_check(expansion)
    assert ok.positive_part <= 1e-10
    assert bad.positive_part > 0.1
    assert bad.positive_part == pytest.approx(ok.max_pairing)
    flipped = entropy_inequality_check(shock, sign="as_printed")
    assert flipped.positive_part == pytest.approx(ok.max_pairing)
    with pytest.raises(ValueError):
        entropy_inequality_check(shock, sign="other")


def test_synthetic_sonic_line(flat_grid, air):
    # speed grows with x and crosses q_cr at x = 1.5
    q = air.q_cr * (1.0 + 0.1 * (flat_grid.x - 1.5))
    fld = _with_speed(flat_grid, air, q)
    line = sonic_line(fld)
    assert len(line.polylines) == 1
    xs = line.polylines[0][:, 0]
    assert np.all(np.abs(xs - 1.5) < flat_grid.h)
    assert line.length == pytest.approx(1.0 - flat_grid.h, abs=1e-9)
    assert line.touches_wall


def test_subdomain_mask_shrinks(bump_grid_32):
    sizes = [subdomain_mask(bump_grid_32, d).sum() for d in (0.0, 0.1, 0.2, 0.4)]
    assert sizes[0] == bump_grid_32.n_cells
    assert all(a > b for a, b in zip(sizes, sizes[1:]))


def test_solved_field_diagnostics(small_bump_grid):
    cfg = SolveConfig(epsilon=0.2, lambda_steps=3)
    fld, rep = fixed_point_solve(cfg, small_bump_grid)
    assert rep.converged
    assert containment_report(fld).all_inside
    dis = dissipation_integral(fld, 0.2, cfg)
    assert dis.I2 > 0 and dis.excluded_cells == 0
    # flux balance holds up to discretization error
    assert dis.closure_error < 0.5 * dis.I2
    res = conservation_residual(fld, 0.2, cfg)
    assert res["mass_mean"] < 1e-3
