"""Command-line entry point: ``transonic {solve,sweep,phaseplane,entropy,verify}``.

Exit codes: 0 success, 2 configuration error, 3 non-convergence, 4 failed verification.
"""

import argparse
import logging
import os
import sys
import time

import numpy as np

from . import io
from .config import load_config
from .diagnostics import (
    conservation_residual,
    containment_report,
    dissipation_integral,
    entropy_inequality_check,
    obstacle_mass_flux,
    sonic_line,
    stagnation_report,
)
from .exceptions import ConfigError, ConstructionError, DomainError, TransonicError
from .gas import GasModel
from .mesh import build_grid
from .phaseplane import a_of_gamma, build_region, find_gamma_star
from .solver import epsilon_sweep, fixed_point_solve

EXIT_OK, EXIT_CONFIG, EXIT_DIVERGED, EXIT_VERIFY = 0, 2, 3, 4

log = logging.getLogger("transonic")


def _grid(run):
    try:
        return build_grid(run.domain, run.h)
    except ConstructionError as exc:
        raise ConfigError(str(exc)) from None


def _field_diagnostics(field, eps, config, deltas=(0.05, 0.1, 0.2)):
    cont = containment_report(field)
    dis = dissipation_integral(field, eps, config)
    ent = entropy_inequality_check(field)
    sonic = sonic_line(field)
    return {
        "max_mach": float(field.mach.max()),
        "min_speed": float(field.q.min()),
        "max_speed": float(field.q.max()),
        "containment": cont.to_dict(),
        "dissipation": dis.to_dict(),
        "entropy_positive_part": ent.positive_part,
        "entropy_tests": ent.n_tests,
        "obstacle_mass_flux": obstacle_mass_flux(field),
        "stagnation": stagnation_report(field, deltas),
        "sonic_line": {"segments": len(sonic.polylines), "length": sonic.length, "touches_wall": sonic.touches_wall},
        "conservation": conservation_residual(field, eps, config),
    }, sonic


def _report_dict(report):
    d = report.to_dict()
    d.pop("elapsed")  # timings would break reproducible hashes
    return d


def cmd_solve(args):
    run = load_config(args.config)
    grid = _grid(run)
    os.makedirs(args.out, exist_ok=True)
    start = time.perf_counter()
    field, report = fixed_point_solve(run.solve, grid)
    log.info("solve finished in %.1f s: %s", time.perf_counter() - start, report.message)
    io.write_text(os.path.join(args.out, "config.ini"), run.to_ini())
    io.write_field(os.path.join(args.out, "field.csv"), field)
    diag, sonic = _field_diagnostics(field, run.solve.epsilon, run.solve)
    io.write_polylines(os.path.join(args.out, "sonic_line.csv"), sonic.polylines)
    io.write_json(os.path.join(args.out, "summary.json"),
                  {"report": _report_dict(report), "diagnostics": diag, "cells": grid.n_cells, "h": grid.h})
    io.write_manifest(args.out)
    print(f"{'converged' if report.converged else 'NOT converged'}: {report.iterations} iterations, "
          f"defect {report.defect:.3e}, max M {diag['max_mach']:.4f} -> {args.out}")
    return EXIT_OK if report.converged else EXIT_DIVERGED


def cmd_sweep(args):
    run = load_config(args.config)
    if not run.epsilon_list:
        raise ConfigError("sweep needs 'epsilon_list'")
    grid = _grid(run)
    os.makedirs(args.out, exist_ok=True)
    entries = epsilon_sweep(run.solve, grid, run.epsilon_list, delta=run.delta)
    io.write_text(os.path.join(args.out, "config.ini"), run.to_ini())
    rows, out = [], []
    ok = True
    for k, e in enumerate(entries):
        rec = {"epsilon": e.epsilon, "error": e.error}
        if e.field is not None:
            io.write_field(os.path.join(args.out, f"field_{k}.csv"), e.field)
            rec.update(report=_report_dict(e.report), I2=e.dissipation, closure_error=e.closure_error,
                       min_speed=e.min_speed, obstacle_mass_flux=e.wall_flux, l2_change=e.l2_change,
                       max_mach=float(e.field.mach.max()))
            ok &= e.report.converged
            rows.append((e.epsilon, e.dissipation, e.closure_error, e.min_speed, e.wall_flux, e.l2_change))
        else:
            ok = False
        out.append(rec)
    io.write_csv(os.path.join(args.out, "sweep.csv"),
                 ["epsilon", "I2", "closure_error", "min_speed", "obstacle_mass_flux", "l2_change"], rows)
    i2 = [r[1] for r in rows if np.isfinite(r[1]) and r[1] > 0]
    ratio = max(i2) / min(i2) if i2 else float("nan")
    io.write_json(os.path.join(args.out, "sweep.json"), {"entries": out, "I2_ratio": ratio})
    io.write_manifest(args.out)
    for r in rows:
        print(f"eps={r[0]:<8g} I2={r[1]:.4e} closure={r[2]:.3e} min q={r[3]:.4f}")
    print(f"I2 max/min = {ratio:.3f} -> {args.out}")
    return EXIT_OK if ok else EXIT_DIVERGED


def cmd_phaseplane(args):
    try:
        gas = GasModel(args.gamma)
        q0 = gas.q_junction if args.q0 is None else args.q0 * gas.q_cr
        region = build_region(gas, q0, args.theta0)
    except (DomainError, ConstructionError) as exc:
        raise ConfigError(str(exc)) from None
    os.makedirs(args.out, exist_ok=True)
    q, th = region.boundary(args.points)
    io.write_csv(os.path.join(args.out, "region.csv"), ["theta", "q", "u", "v"],
                 np.column_stack([th, q, q * np.cos(th), q * np.sin(th)]))
    a = a_of_gamma(args.gamma) if 1.0 < args.gamma < 3.0 else float("inf")
    summary = {"gamma": args.gamma, "a": a, "gamma_star": find_gamma_star(), "m": region.m,
               "a_eff": region.a_eff, "q0": region.q0, "q_star": region.q_star, "q_cav": gas.q_cav,
               "q_cr": gas.q_cr}
    io.write_json(os.path.join(args.out, "phaseplane.json"), summary)
    io.write_manifest(args.out)
    print(f"a({args.gamma:g}) = {a:.6f}, gamma* = {summary['gamma_star']:.8f}, m = {region.m}, "
          f"q* = {region.q_star:.6f} -> {args.out}")
    return EXIT_OK


def cmd_entropy(args):
    from .entropy import EntropyPair, FourierGenerator, HStar, solve_fn, solve_kn, ExponentialGenerator, tricomi_residual

    try:
        gas = GasModel(args.gamma)
        if args.generator == "star":
            q_ref = gas.q_cr if args.q_ref is None else args.q_ref * gas.q_cr
            gen = HStar(gas, q_ref)
            lo = args.q_min * gas.q_cr if args.q_min is not None else 0.2 * gas.q_cr
            hi = args.q_max * gas.q_cr if args.q_max is not None else 1.4 * gas.q_cr
        else:
            sol = solve_fn(gas, args.n) if args.generator == "fn" else solve_kn(gas, args.n)
            gen = FourierGenerator(sol, "cos") if args.generator == "fn" else ExponentialGenerator(sol, 1)
            band = sorted(float(gas.speed_of_mu(m)) for m in sol.interval)
            lo = max(band[0], args.q_min * gas.q_cr) if args.q_min is not None else band[0]
            hi = min(band[1], args.q_max * gas.q_cr) if args.q_max is not None else band[1]
        q = np.linspace(lo, hi, args.points)
        theta = np.full_like(q, args.theta)
        pair = EntropyPair(gen)
        Q1, Q2 = pair.at_speed(q, theta)
        res = tricomi_residual(gen, gas.mu_of_speed(q), theta)
    except (DomainError, ConstructionError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    os.makedirs(args.out, exist_ok=True)
    rho = gas.density(q)
    io.write_csv(os.path.join(args.out, "pair.csv"), ["q", "theta", "rho", "Q1", "Q2", "tricomi_residual"],
                 np.column_stack([q, theta, rho, Q1, Q2, res]))
    io.write_json(os.path.join(args.out, "entropy.json"),
                  {"gamma": args.gamma, "generator": args.generator, "n": args.n,
                   "max_tricomi_residual": float(np.max(np.abs(res)))})
    io.write_manifest(args.out)
    print(f"{args.generator} pair on q in [{lo:.4f}, {hi:.4f}], max Tricomi residual "
          f"{np.max(np.abs(res)):.3e} -> {args.out}")
    return EXIT_OK


def verification_checks(quick=False):
    """``(name, passed, detail)`` for a fast property suite; the flow solve is skipped when ``quick``."""
    from . import verification

    return verification.run_checks(quick=quick)


def cmd_verify(args):
    failed = 0
    for name, ok, detail in verification_checks(quick=args.quick):
        failed += not ok
        print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
    print(f"{failed} check(s) failed" if failed else "all checks passed")
    return EXIT_VERIFY if failed else EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="transonic", description="Viscous transonic flow solver and verification tools.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="solve one configuration")
    s.add_argument("config")
    s.add_argument("-o", "--out", default="run")
    s.set_defaults(func=cmd_solve)

    s = sub.add_parser("sweep", help="warm-started solves over epsilon_list")
    s.add_argument("config")
    s.add_argument("-o", "--out", default="sweep")
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("phaseplane", help="invariant region and a(gamma)")
    s.add_argument("--gamma", type=float, default=1.4)
    s.add_argument("--q0", type=float, default=None, help="anchor speed as a multiple of q_cr (default sqrt 2)")
    s.add_argument("--theta0", type=float, default=0.0)
    s.add_argument("--points", type=int, default=721)
    s.add_argument("-o", "--out", default="phaseplane")
    s.set_defaults(func=cmd_phaseplane)

    s = sub.add_parser("entropy", help="tabulate an entropy pair along a speed path")
    s.add_argument("--gamma", type=float, default=1.4)
    s.add_argument("--generator", choices=("star", "fn", "kn"), default="star")
    s.add_argument("--n", type=int, default=2)
    s.add_argument("--q-ref", type=float, default=None, help="reference speed / q_cr for the star generator")
    s.add_argument("--q-min", type=float, default=None, help="path start / q_cr")
    s.add_argument("--q-max", type=float, default=None, help="path end / q_cr")
    s.add_argument("--theta", type=float, default=0.0)
    s.add_argument("--points", type=int, default=101)
    s.add_argument("-o", "--out", default="entropy")
    s.set_defaults(func=cmd_entropy)

    s = sub.add_parser("verify", help="run the property suite")
    s.add_argument("--quick", action="store_true", help="skip the flow solve")
    s.set_defaults(func=cmd_verify)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except TransonicError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGED


if __name__ == "__main__":
    sys.exit(main())
