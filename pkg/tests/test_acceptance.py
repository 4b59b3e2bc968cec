"""Acceptance criteria, one test each; every test prints a PASS/FAIL line with its timing."""

import time
from dataclasses import replace

import numpy as np
import pytest

from oracles import dense_gamma_map, perturbed_field
from transonic.diagnostics import containment_report, default_region, entropy_inequality_check, sonic_line
from transonic.elliptic import MixedBC, solve_mixed_poisson
from transonic.entropy import EntropyPair, HStar, fourier_pair, pair_compatibility_residual, solve_fn, tricomi_residual
from transonic.gas import GasModel, bernoulli_residual
from transonic.mesh import DomainSpec, build_grid
from transonic.phaseplane import a_of_gamma, find_gamma_star, viscosity_identity_lhs
from transonic.solver import SolveConfig, epsilon_sweep, fixed_point_solve, gamma_map

SWEEP_EPS = (0.2, 0.1, 0.05, 0.025)


def _report(capsys, number, title, ok, detail, elapsed, budget):
    within = elapsed < budget
    status = "PASS" if ok and within else "FAIL"
    with capsys.disabled():
        print(f"\n[criterion {number:>2}] {status}  {title}: {detail}  ({elapsed:.2f} s, budget {budget:g} s)")
    assert ok, detail
    assert within, f"took {elapsed:.1f} s, budget {budget} s"


class _Clock:
    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.start


def test_c01_gamma_star(capsys):
    with _Clock() as t:
        g = find_gamma_star()
    _report(capsys, 1, "gamma* root", 1.223 <= g <= 1.225, f"gamma* = {g:.10f}", t.elapsed, 1)


def test_c02_a_limit(capsys):
    with _Clock() as t:
        grid = np.linspace(1.05, 2.95, 50)
        a = np.array([a_of_gamma(g) for g in grid])
        end = a_of_gamma(2.999)
    ok = end < 0.02 and bool(np.all(np.diff(a) < 0))
    _report(capsys, 2, "a(gamma) -> 0 at 3", ok, f"a(2.999) = {end:.3e}, max step {np.diff(a).max():.3e}", t.elapsed, 1)


def test_c03_bernoulli(capsys):
    rng = np.random.default_rng(3)
    with _Clock() as t:
        worst = 0.0
        # 25 models with 400 speeds each; gamma = 1 has no cavitation speed
        for g in np.concatenate([[1.0], rng.uniform(1.0, 2.999, 24)]):
            gas = GasModel(float(g))
            top = min(gas.q_cav * (1 - 1e-9), 20 * gas.q_cr)
            q = rng.uniform(0.0, top, 400)
            rel = np.abs(bernoulli_residual(gas, q)) / np.maximum(q * q, gas.q_cr**2)
            worst = max(worst, float(rel.max()))
    _report(capsys, 3, "Bernoulli identity", worst <= 1e-12, f"max relative error {worst:.2e} over 10^4 samples", t.elapsed, 1)


def test_c04_viscosity_identity(capsys):
    rng = np.random.default_rng(4)
    with _Clock() as t:
        worst = 0.0
        for g in (1.0, 1.2, 1.4, 2.0, 2.8):
            gas = GasModel(g)
            lo, hi = gas.q_junction, min(gas.q_cav, 5 * gas.q_cr)
            q = lo + (hi - lo) * rng.uniform(0.02, 0.98, 100)
            rho, c2 = gas.density(q), gas.sound_speed_squared(q)
            rhs = np.sqrt(c2) * ((g - 3) * q**2 + 4 * c2) / (2 * rho**2 * q**2 * np.sqrt(q**2 - c2))
            worst = max(worst, float(np.max(np.abs(viscosity_identity_lhs(gas, q) - rhs) / np.abs(rhs))))
    _report(capsys, 4, "Riemann-invariant viscosity identity", worst <= 1e-5,
            f"max relative error {worst:.2e} over 5 x 100 points", t.elapsed, 5)


def _d6(f, x, h):
    """Sixth-order central first derivative."""
    return (45 * (f(x + h) - f(x - h)) - 9 * (f(x + 2 * h) - f(x - 2 * h)) + (f(x + 3 * h) - f(x - 3 * h))) / (60 * h)


def test_c05_hstar(capsys):
    rng = np.random.default_rng(5)
    with _Clock() as t:
        gas = GasModel(1.4)
        gen = HStar(gas)
        q = rng.uniform(0.05, 1.4, 1000) * gas.q_cr
        th = rng.uniform(-1, 1, 1000)
        mu = gas.mu_of_speed(q)
        # second derivatives rebuilt by differencing the first ones
        step = 1e-3 * np.maximum(np.abs(mu), 0.1)
        h_mumu = _d6(lambda m: gen.partials(m, th).H_mu, mu, step)
        h_thth = _d6(lambda a: gen.partials(mu, a).H_theta, th, 1e-3)
        M2 = q * q / gas.sound_speed_squared(q)
        tri = float(np.max(np.abs(h_mumu + (1 - M2) / gas.density(q) ** 2 * h_thth)))
        rho = gas.density(rng.uniform(0.3, 1.3, 100) * gas.q_cr)
        comp = float(np.max(pair_compatibility_residual(EntropyPair(gen), rho, rng.uniform(-1, 1, 100))))
    _report(capsys, 5, "H* pair", tri <= 1e-10 and comp <= 1e-6,
            f"Tricomi {tri:.2e} (differenced partials, 1000 points), compatibility {comp:.2e}", t.elapsed, 5)


def test_c06_fn_family(capsys):
    with _Clock() as t:
        gas = GasModel(1.4)
        a = solve_fn(gas, 2, initial=(1.0, 0.0))
        b = solve_fn(gas, 2, initial=(0.0, 1.0))
        mu = np.linspace(*a.interval, 500)
        gen = fourier_pair(a)[0].generator
        tri = max(float(np.max(np.abs(tricomi_residual(gen, mu, th)))) for th in (0.0, 0.4, 1.3))
        w = np.asarray(a.value(mu)) * np.asarray(b.derivative(mu)) - np.asarray(b.value(mu)) * np.asarray(a.derivative(mu))
        drift = float(np.max(np.abs(w - w[-1])))
    _report(capsys, 6, "F_n family (n = 2)", tri <= 1e-6 and drift <= 1e-7,
            f"Tricomi {tri:.2e}, Wronskian drift {drift:.2e}", t.elapsed, 5)


def _exact(x, y):
    return np.sin(np.pi * x) * np.cosh(y) + x * y


def _elliptic_errors(kind):
    errs = []
    for n in (32, 64, 128):
        if kind == "dirichlet":
            g = build_grid(DomainSpec("box", length=1.0, height=1.0), 1.0 / n)
        else:
            g = build_grid(DomainSpec("channel", length=1.0, height=1.0, bump_height=0.0, bump_center=0.5), 1.0 / n)
        fx, fy = g.face_mid.T
        dudy = np.sin(np.pi * fx) * np.sinh(fy) + fx
        bc = MixedBC.from_values(g, _exact(fx, fy), dudy)
        lap = (1 - np.pi**2) * np.sin(np.pi * g.x) * np.cosh(g.y)
        w = solve_mixed_poisson(g, lap, bc, 1.0)
        errs.append(np.max(np.abs(w - _exact(g.x, g.y))))
    return np.log2(np.asarray(errs[:-1]) / np.asarray(errs[1:]))


def test_c07_elliptic_orders(capsys):
    with _Clock() as t:
        dirichlet = _elliptic_errors("dirichlet")
        mixed = _elliptic_errors("mixed")
    ok = bool(np.all((dirichlet >= 1.8) & (dirichlet <= 2.2))) and bool(np.all(mixed >= 1.0))
    detail = "Dirichlet orders " + ", ".join(f"{o:.3f}" for o in dirichlet) + "; mixed " + ", ".join(f"{o:.3f}" for o in mixed)
    _report(capsys, 7, "elliptic kernel convergence", ok, detail, t.elapsed, 60)


def test_c08_gamma_map_oracle(capsys):
    with _Clock() as t:
        gas = GasModel(1.4)
        grid = build_grid(DomainSpec("channel", length=1.0, height=1.0, bump_center=0.5, bump_chord=0.5), 1.0 / 16)
        worst = 0.0
        for ratio, lam, eps in ((0.5, 1.0, 0.1), (0.9, 0.4, 0.05), (0.7, 1.0, 0.3)):
            fld = perturbed_field(grid, gas, ratio)
            th, sg = dense_gamma_map(fld, lam, eps)
            out = gamma_map(fld, lam, eps)
            worst = max(worst, float(np.max(np.abs(out.theta_bar - th))), float(np.max(np.abs(out.sigma_bar - sg))))
    _report(capsys, 8, "Gamma map vs dense oracle (16 x 16)", worst <= 1e-8, f"max difference {worst:.2e}", t.elapsed, 10)


def test_c09_fixed_points(capsys):
    with _Clock() as t:
        flat = build_grid(DomainSpec("channel", bump_height=0.0), 1.0 / 16)
        iters = []
        uniform = True
        for eps in (0.2, 0.05):
            fld, rep = fixed_point_solve(SolveConfig(epsilon=eps), flat)
            iters.append(rep.iterations if rep.converged else np.inf)
            uniform &= bool(np.all(fld.vector == 0.0))
        square = build_grid(DomainSpec("channel", length=1.0, height=1.0, bump_center=0.5, bump_chord=0.5), 1.0 / 32)
        cfg = SolveConfig(epsilon=0.1)
        half, r1 = fixed_point_solve(cfg, square, lam=0.5)
        # same problem reached along a different continuation path
        scaled, r2 = fixed_point_solve(replace(cfg, epsilon=0.1 / 0.5, lambda_steps=4), square)
        diff = float(np.max(np.abs(half.vector - scaled.vector)))
    ok = max(iters) <= 2 and uniform and r1.converged and r2.converged and diff <= 10 * cfg.tol
    detail = f"flat-channel iterations {iters}, lambda-consistency difference {diff:.2e} (limit {10 * cfg.tol:.0e})"
    _report(capsys, 9, "fixed points", ok, detail, t.elapsed, 120)


@pytest.fixture(scope="module")
def transonic_runs():
    grid = build_grid(DomainSpec("channel"), 1.0 / 64)
    out = {}
    start = time.perf_counter()
    for eps in (0.1, 0.05):
        out[eps] = fixed_point_solve(SolveConfig(q_inf_ratio=0.95, epsilon=eps), grid)
    return out, time.perf_counter() - start


@pytest.mark.slow
def test_c10_transonic(capsys, transonic_runs):
    runs, elapsed = transonic_runs
    fld, rep = runs[0.05]
    coarse, rep_coarse = runs[0.1]
    region = default_region(fld)
    cont = containment_report(fld, region)
    sonic = sonic_line(fld)
    ent = entropy_inequality_check(fld).positive_part
    ent_coarse = entropy_inequality_check(coarse).positive_part
    q_cav = fld.gas.q_cav
    ok = (rep.converged and rep_coarse.converged and cont.fraction_inside == 1.0
          and cont.max_speed <= cont.q_star < q_cav and not sonic.empty and ent <= ent_coarse)
    detail = (f"converged {rep.converged} ({rep.iterations} it), inside {cont.fraction_inside:.0%}, "
              f"max q {cont.max_speed:.4f} <= q* {cont.q_star:.4f} < q_cav {q_cav:.4f}, max M {fld.mach.max():.4f}, "
              f"sonic length {sonic.length:.3f}, entropy violation {ent:.3e} <= {ent_coarse:.3e} (eps 0.1)")
    _report(capsys, 10, "transonic bump, h = 1/64, eps = 0.05", ok, detail, elapsed, 600)


@pytest.mark.slow
def test_c11_epsilon_sweep(capsys):
    cfg = SolveConfig(q_inf_ratio=0.5)
    with _Clock() as t:
        sweeps = {}
        for n in (32, 64, 128):
            entries = epsilon_sweep(cfg, build_grid(DomainSpec("channel"), 1.0 / n), SWEEP_EPS)
            sweeps[n] = entries
    converged = all(e.report is not None and e.report.converged for es in sweeps.values() for e in es)
    ratios = {n: max(e.dissipation for e in es) / min(e.dissipation for e in es) for n, es in sweeps.items()}
    closure = np.array([[e.closure_error for e in sweeps[n]] for n in (32, 64, 128)])
    pair_orders = np.log2(closure[:-1] / closure[1:])
    # observed order on the finest pair; the three-grid fit is reported alongside
    fit = pair_orders.mean(axis=0)
    ok = (converged and all(r <= 10 for r in ratios.values())
          and bool(np.all(closure[1:] < closure[:-1])) and bool(np.all(pair_orders[-1] >= 0.8)))
    i2 = ", ".join(f"{e.dissipation:.3e}" for e in sweeps[64])
    detail = (f"I2 (h = 1/64) [{i2}], max/min by grid "
              + ", ".join(f"1/{n}: {r:.2f}" for n, r in ratios.items())
              + "; closure error by grid " + " | ".join(", ".join(f"{v:.2e}" for v in row) for row in closure)
              + "; finest-pair orders " + ", ".join(f"{o:.2f}" for o in pair_orders[-1])
              + " (three-grid fit " + ", ".join(f"{o:.2f}" for o in fit) + ")")
    _report(capsys, 11, "epsilon sweep boundedness", ok, detail, t.elapsed, 1800)
