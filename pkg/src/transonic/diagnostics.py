"""A posteriori checks on computed flow fields.

Every function here is a pure function of the field (and viscosity where
needed); nothing is cached on the field.
"""

from dataclasses import asdict, dataclass

import numpy as np
from skimage.measure import find_contours

from .elliptic import MixedBC, poisson_operator
from .entropy import EntropyPair, HStar
from .mesh import FARFIELD, OBSTACLE, divergence
from .phaseplane import build_region
from .solver import SolveConfig, _gradient, wall_flux


def _far_state(field):
    return field.q_inf, field.theta_inf


def _face_states(field):
    """Speed and angle on every boundary face: far-field values on far-field faces."""
    g = field.grid
    q = field.q[g.face_cell].copy()
    th = field.theta[g.face_cell].copy()
    far = g.face_tag == FARFIELD
    q[far], th[far] = _far_state(field)
    return q, th


@dataclass
class ContainmentReport:
    fraction_inside: float
    min_margin: float
    max_speed: float
    q_star: float
    cavitation_gap: float
    q0: float
    m: int
    supersonic_cells: int

    @property
    def all_inside(self):
        return self.fraction_inside == 1.0 and self.max_speed <= self.q_star

    def to_dict(self):
        d = asdict(self)
        d["all_inside"] = self.all_inside
        return d


def default_region(field):
    """Region anchored at ``max(sqrt(2) q_cr, q_max)`` in the far-field direction."""
    gas = field.gas
    q0 = max(gas.q_junction, float(field.q.max()))
    return build_region(gas, min(q0, 0.999 * gas.q_cav), field.theta_inf)


def containment_report(field, region=None, q=None):
    """Fraction of cells inside ``region``, the smallest margin and the speed headroom.

    ``q`` overrides the field's speeds, e.g. to probe synthetic states.
    """
    gas = field.gas
    region = region if region is not None else default_region(field)
    q = field.q if q is None else np.asarray(q, dtype=float)
    inside, margin = region.contains(q, field.theta)
    inside = np.atleast_1d(inside) & (q <= region.q_star)
    qmax = float(q.max())
    return ContainmentReport(
        fraction_inside=float(inside.mean()),
        min_margin=float(np.min(margin)),
        max_speed=qmax,
        q_star=float(region.q_star),
        cavitation_gap=float(gas.q_cav - qmax),
        q0=float(region.q0),
        m=int(region.m),
        supersonic_cells=int(np.sum(q > gas.q_cr)),
    )


def _hat(t, a, b):
    """Piecewise-linear hat on ``[a, b]`` and its derivative."""
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    val = np.clip(1.0 - np.abs(t - mid) / half, 0.0, None)
    der = np.where(val > 0, -np.sign(t - mid) / half, 0.0)
    return val, der


def test_functions(grid, levels=3):
    """Tensor hats on dyadic sub-boxes that lie entirely in the fluid.

    Yields ``(phi, phi_x, phi_y)`` per-cell arrays; the box corners sit on cell
    faces so midpoint sums of the derivatives vanish exactly.
    """
    spec = grid.spec
    fluid = grid.fluid
    for level in range(1, levels + 1):
        n = 2**level
        wx, wy = spec.length / n, spec.height / n
        cx, cy = wx / grid.h, wy / grid.h
        if cx < 2 or cy < 2 or abs(cx - round(cx)) > 1e-9 or abs(cy - round(cy)) > 1e-9:
            continue
        cx, cy = int(round(cx)), int(round(cy))
        # boxes of size w, shifted by half a box to overlap
        for i0 in range(0, grid.nx - cx + 1, max(cx // 2, 1)):
            for j0 in range(0, grid.ny - cy + 1, max(cy // 2, 1)):
                if not fluid[i0:i0 + cx, j0:j0 + cy].all():
                    continue
                x0, y0 = i0 * grid.h, j0 * grid.h
                px, dx = _hat(grid.x, x0, x0 + wx)
                py, dy = _hat(grid.y, y0, y0 + wy)
                yield px * py, dx * py, px * dy


@dataclass
class EntropyCheck:
    positive_part: float
    max_pairing: float
    min_pairing: float
    n_tests: int
    sign: str


def entropy_inequality_check(field, q_ref=None, levels=3, sign="production"):
    """Largest normalized violation of the entropy inequality for ``(Q1*, Q2*)``.

    The weak divergence is paired with nonnegative test functions,
    ``<div Q*, phi> = -int Q* . grad(phi)``.  With ``sign="production"`` the
    admissible sign is ``div Q* >= 0`` (the sign left by vanishing viscosity)
    and violations are the positive part of ``-<div Q*, phi> / |phi|_1``;
    ``sign="as_printed"`` checks ``div Q* <= 0`` instead.
    """
    if sign not in ("production", "as_printed"):
        raise ValueError("sign must be 'production' or 'as_printed'")
    g = field.grid
    q_ref = field.q_inf if q_ref is None else q_ref
    pair = EntropyPair(HStar(field.gas, q_ref))
    Q1, Q2 = pair.at_speed(field.q, field.theta)
    h2 = g.h**2
    vals = []
    for phi, px, py in test_functions(g, levels):
        mass = phi.sum() * h2
        pairing = -np.sum(Q1 * px + Q2 * py) * h2 / mass
        vals.append(pairing)
    vals = np.asarray(vals)
    if vals.size == 0:
        return EntropyCheck(0.0, 0.0, 0.0, 0, sign)
    viol = -vals if sign == "production" else vals
    return EntropyCheck(float(max(viol.max(), 0.0)), float(vals.max()), float(vals.min()), int(vals.size), sign)


@dataclass
class DissipationReport:
    I2: float
    I1: float
    flux: float
    closure_error: float
    excluded_cells: int

    def to_dict(self):
        return asdict(self)


def _boundary_conditions(field, eps, config):
    g = field.grid
    return MixedBC.homogeneous(g), MixedBC(np.zeros(g.n_faces), wall_flux(field, 1.0, eps, config))


def dissipation_integral(field, eps, config=None, q_floor=1e-6):
    """Dissipation ``I2``, wall term ``I1`` and boundary entropy flux of ``(Q1*, Q2*)``.

    ``I2 = eps * int |grad theta|^2 + c^2 |grad sigma|^2 / (sigma2 rho^2 q^2)`` by
    the midpoint rule with centred differences.  The flux is
    ``int_{boundary} Q* . n_out`` with reference speed ``q_inf``, so
    ``flux = I1 + I2`` up to discretization error.  Cells with
    ``q < q_floor * q_cr`` are left out of ``I2`` and counted.
    """
    config = config or SolveConfig()
    g = field.grid
    gas = field.gas
    q = field.q
    th_bc, sg_bc = _boundary_conditions(field, eps, config)
    tx, ty = _gradient(g, field.theta_bar, th_bc)
    sx, sy = _gradient(g, field.sigma_bar, sg_bc)
    keep = q >= q_floor * gas.q_cr
    rho = gas._rho(q)
    dens = gas._c2(q) / (gas._sigma2(q) * (rho * q) ** 2)
    integrand = tx * tx + ty * ty + dens * (sx * sx + sy * sy)
    I2 = float(eps * np.sum(integrand[keep]) * g.h**2)

    pair = EntropyPair(HStar(gas, field.q_inf))
    qf, thf = _face_states(field)
    Q1, Q2 = pair.at_speed(qf, thf)
    flux = float(-np.sum(Q1 * g.face_normal[:, 0] + Q2 * g.face_normal[:, 1]) * g.h)

    obs = g.face_tag == OBSTACLE
    J = gas.flux_potential(field.q[g.face_cell[obs]], field.q_inf)
    # eps grad(sigma) . n_out = -eps * (Neumann datum along the inward normal)
    I1 = float(-eps * np.sum(J * sg_bc.neumann[obs]) * g.h)
    return DissipationReport(I2, I1, flux, abs(flux - I1 - I2), int(np.sum(~keep)))


def obstacle_mass_flux(field):
    """``int |rho (u, v) . n|`` over the obstacle with the smooth-surface normal."""
    g = field.grid
    obs = g.face_tag == OBSTACLE
    if not obs.any():
        return 0.0
    k = g.face_cell[obs]
    ns = g.surface_normal[obs]
    q, th = field.q[k], field.theta[k]
    normal = field.gas._rho(q) * q * (np.cos(th) * ns[:, 0] + np.sin(th) * ns[:, 1])
    weight = np.abs(np.sum(ns * g.face_normal[obs], axis=1))
    return float(np.sum(weight * np.abs(normal)) * g.h)


def subdomain_mask(grid, delta):
    """Cells at distance at least ``delta`` from the whole boundary."""
    d = np.minimum(grid.distance_to(OBSTACLE), grid.distance_to(FARFIELD))
    return d >= delta


def stagnation_report(field, deltas):
    """``alpha(delta) = min q`` over the cells at distance ``>= delta`` from the boundary."""
    out = []
    for delta in deltas:
        mask = subdomain_mask(field.grid, delta)
        alpha = float(field.q[mask].min()) if mask.any() else float("nan")
        out.append({"delta": float(delta), "alpha": alpha, "cells": int(mask.sum())})
    return out


@dataclass
class SonicLine:
    polylines: list
    length: float
    touches_wall: bool

    @property
    def empty(self):
        return not self.polylines


def sonic_line(field, level=1.0):
    """Level set ``M = level`` by marching squares on the cell-centre lattice."""
    g = field.grid
    mach = g.to_array(field.mach, fill=np.nan)
    if not (np.nanmax(mach) > level and np.nanmin(mach) < level):
        return SonicLine([], 0.0, False)
    filled = np.where(g.fluid, mach, np.nanmin(mach))
    contours = find_contours(filled, level, mask=g.fluid)
    lines = [np.column_stack([(c[:, 0] + 0.5) * g.h, (c[:, 1] + 0.5) * g.h]) for c in contours if len(c) > 1]
    length = float(sum(np.sum(np.hypot(*np.diff(p, axis=0).T)) for p in lines))
    touches = False
    if lines:
        obs = g.faces(OBSTACLE)
        if len(obs):
            ends = np.concatenate([p[[0, -1]] for p in lines])
            d = np.min(np.hypot(*(ends[:, None, :] - g.face_mid[obs][None]).transpose(2, 0, 1)), axis=1)
            touches = bool(np.any(d <= 1.5 * g.h))
    return SonicLine(lines, length, touches)


def conservation_residual(field, eps, config=None):
    """Divergence-form residuals of ``v_x - u_y = eps Lap(theta)`` and ``div(rho u) = eps Lap(sigma)``.

    Uses flux-form differences with far-field values on far-field faces; reported
    as max-norm and mean absolute value per equation.
    """
    config = config or SolveConfig()
    g = field.grid
    op = poisson_operator(g)
    th_bc, sg_bc = _boundary_conditions(field, eps, config)
    qf, thf = _face_states(field)
    rho, rhof = field.rho, field.gas._rho(qf)
    u, v = field.u, field.v
    uf, vf = qf * np.cos(thf), qf * np.sin(thf)
    vort = divergence(g, v, -u, vf, -uf)
    mass = divergence(g, rho * u, rho * v, rhof * uf, rhof * vf)
    r1 = vort - eps * op.apply_laplacian(field.theta_bar, th_bc)
    r2 = mass - eps * op.apply_laplacian(field.sigma_bar, sg_bc)
    return {
        "vorticity_max": float(np.abs(r1).max()),
        "vorticity_mean": float(np.abs(r1).mean()),
        "mass_max": float(np.abs(r2).max()),
        "mass_mean": float(np.abs(r2).mean()),
    }


__all__ = [
    "ContainmentReport",
    "DissipationReport",
    "EntropyCheck",
    "SonicLine",
    "conservation_residual",
    "containment_report",
    "default_region",
    "dissipation_integral",
    "entropy_inequality_check",
    "obstacle_mass_flux",
    "sonic_line",
    "stagnation_report",
    "subdomain_mask",
    "test_functions",
]
