"""Fast property checks behind ``transonic verify``."""

import numpy as np

from .elliptic import MixedBC, solve_mixed_poisson
from .entropy import EntropyPair, HStar, fourier_pair, pair_compatibility_residual, solve_fn, tricomi_residual
from .gas import GasModel, bernoulli_residual
from .mesh import FARFIELD, DomainSpec, build_grid
from .phaseplane import a_of_gamma, find_gamma_star, riemann_viscosity_coefficient, viscosity_identity_lhs
from .solver import SolveConfig, fixed_point_solve


def _gamma_star():
    g = find_gamma_star()
    return 1.223 <= g <= 1.225, f"gamma* = {g:.10f}"


def _a_limit():
    grid = np.linspace(1.05, 2.95, 50)
    a = np.array([a_of_gamma(g) for g in grid])
    end = a_of_gamma(2.999)
    return end < 0.02 and bool(np.all(np.diff(a) < 0)), f"a(2.999) = {end:.3e}"


def _bernoulli(rng):
    worst = 0.0
    for _ in range(20):
        gas = GasModel(float(rng.uniform(1.0, 2.99)))
        q = rng.uniform(0.0, gas.q_cav * (1 - 1e-9), 500)
        worst = max(worst, float(np.max(np.abs(bernoulli_residual(gas, q)) / np.maximum(q * q, gas.q_cr**2))))
    return worst <= 1e-12, f"max relative error {worst:.2e}"


def _viscosity_identity(rng):
    worst = 0.0
    for g in (1.0, 1.2, 1.4, 2.0, 2.8):
        gas = GasModel(g)
        lo, hi = gas.q_junction, min(gas.q_cav, 5 * gas.q_cr)
        q = lo + (hi - lo) * rng.uniform(0.05, 0.95, 100)
        rhs = riemann_viscosity_coefficient(gas, q)
        worst = max(worst, float(np.max(np.abs(viscosity_identity_lhs(gas, q) - rhs) / np.abs(rhs))))
    return worst <= 1e-5, f"max relative error {worst:.2e}"


def _hstar(rng):
    gas = GasModel(1.4)
    gen = HStar(gas)
    q = rng.uniform(0.05, 1.4, 1000) * gas.q_cr
    th = rng.uniform(-1, 1, 1000)
    tri = float(np.max(np.abs(tricomi_residual(gen, gas.mu_of_speed(q), th))))
    rho = gas.density(rng.uniform(0.3, 1.3, 50) * gas.q_cr)
    comp = float(np.max(pair_compatibility_residual(EntropyPair(gen), rho, rng.uniform(-1, 1, 50))))
    return tri <= 1e-10 and comp <= 1e-6, f"Tricomi {tri:.1e}, compatibility {comp:.1e}"


def _fn():
    gas = GasModel(1.4)
    a = solve_fn(gas, 2, initial=(1.0, 0.0))
    b = solve_fn(gas, 2, initial=(0.0, 1.0))
    lo, hi = a.interval
    mu = np.linspace(lo, hi, 400)
    cos_pair, _ = fourier_pair(a)
    tri = float(np.max(np.abs(tricomi_residual(cos_pair.generator, mu, 0.3))))
    w = np.asarray(a.value(mu)) * np.asarray(b.derivative(mu)) - np.asarray(b.value(mu)) * np.asarray(a.derivative(mu))
    drift = float(np.max(np.abs(w - w[-1])))
    return tri <= 1e-6 and drift <= 1e-7, f"Tricomi {tri:.1e}, Wronskian drift {drift:.1e}"


def _elliptic(levels):
    errs = []
    for n in levels:
        grid = build_grid(DomainSpec("box", length=1.0, height=1.0), 1.0 / n)
        x, y = grid.x, grid.y
        exact = np.sin(np.pi * x) * np.exp(y)
        lap = (1.0 - np.pi**2) * exact
        fm = grid.face_mid
        bc = MixedBC.from_values(grid, np.sin(np.pi * fm[:, 0]) * np.exp(fm[:, 1]))
        w = solve_mixed_poisson(grid, lap, bc, 1.0)
        errs.append(np.max(np.abs(w - exact)))
    orders = np.log2(np.asarray(errs[:-1]) / np.asarray(errs[1:]))
    ok = bool(np.all((orders >= 1.8) & (orders <= 2.2))) and bool(np.all(grid.face_tag == FARFIELD))
    return ok, "orders " + ", ".join(f"{o:.3f}" for o in orders)


def _flat_channel():
    grid = build_grid(DomainSpec("channel", bump_height=0.0), 1.0 / 16)
    worst = 0
    for eps in (0.2, 0.05):
        field, rep = fixed_point_solve(SolveConfig(epsilon=eps), grid)
        worst = max(worst, rep.iterations)
        if not rep.converged or np.max(np.abs(field.vector)) > 0:
            return False, f"eps={eps}: not uniform"
    return worst <= 2, f"{worst} iteration(s)"


def _subsonic_bump():
    grid = build_grid(DomainSpec("channel"), 1.0 / 32)
    cfg = SolveConfig(q_inf_ratio=0.5, epsilon=0.1)
    field, rep = fixed_point_solve(cfg, grid)
    ok = rep.converged and float(field.q.max()) < cfg.gas().q_cr
    return ok, f"{rep.iterations} iterations, defect {rep.defect:.1e}, max M {field.mach.max():.4f}"


def run_checks(quick=False, seed=0):
    rng = np.random.default_rng(seed)
    checks = [
        ("gamma* root", _gamma_star),
        ("a(gamma) limit and monotonicity", _a_limit),
        ("Bernoulli identity", lambda: _bernoulli(rng)),
        ("Riemann-invariant viscosity identity", lambda: _viscosity_identity(rng)),
        ("H* pair", lambda: _hstar(rng)),
        ("F_n family", _fn),
        ("elliptic convergence", lambda: _elliptic((16, 32, 64) if quick else (32, 64, 128))),
        ("flat-channel fixed point", _flat_channel),
    ]
    if not quick:
        checks.append(("subsonic bump solve", _subsonic_bump))
    out = []
    for name, fn in checks:
        try:
            ok, detail = fn()
        except Exception as exc:  # a crash is a failure, not an abort
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        out.append((name, bool(ok), detail))
    return out
