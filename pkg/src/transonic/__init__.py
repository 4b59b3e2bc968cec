"""Vanishing-viscosity solver and verification toolkit for steady 2-D transonic potential flow."""

from .diagnostics import containment_report, dissipation_integral, entropy_inequality_check, sonic_line
from .entropy import EntropyPair, HStar, entropy_pair, hstar, solve_fn, solve_kn
from .exceptions import (
    ConfigError,
    ConstructionError,
    DomainError,
    InvalidStateError,
    IterationError,
    SingularSystemError,
    TransonicError,
)
from .gas import GasModel
from .mesh import DomainSpec, Grid, build_grid
from .phaseplane import InvariantRegion, PhaseState, a_of_gamma, build_region, find_gamma_star, w_profile
from .solver import FlowField, SolveConfig, TransonicFlowSolver, epsilon_sweep, fixed_point_solve, gamma_map

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "ConstructionError",
    "DomainError",
    "DomainSpec",
    "EntropyPair",
    "FlowField",
    "GasModel",
    "Grid",
    "HStar",
    "InvalidStateError",
    "InvariantRegion",
    "IterationError",
    "PhaseState",
    "SingularSystemError",
    "SolveConfig",
    "TransonicError",
    "TransonicFlowSolver",
    "a_of_gamma",
    "build_grid",
    "build_region",
    "containment_report",
    "dissipation_integral",
    "entropy_inequality_check",
    "entropy_pair",
    "epsilon_sweep",
    "find_gamma_star",
    "fixed_point_solve",
    "gamma_map",
    "hstar",
    "solve_fn",
    "solve_kn",
    "sonic_line",
    "w_profile",
]
