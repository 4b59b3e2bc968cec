"""Exception types raised across the package."""


class TransonicError(Exception):
    """Base class for all package errors."""


class DomainError(TransonicError, ValueError):
    """An argument lies outside the domain of a thermodynamic or phase-plane function."""


class ConstructionError(TransonicError, ValueError):
    """An object (region, grid, generator) cannot be built from the given parameters."""


class SingularSystemError(TransonicError):
    """The discrete elliptic problem has no unique solution (no Dirichlet boundary)."""


class IterationError(TransonicError):
    """An iterative method stopped before reaching its tolerance."""

    def __init__(self, message, residual=None, history=None):
        super().__init__(message)
        self.residual = residual
        self.history = list(history) if history is not None else []


class InvalidStateError(TransonicError):
    """A flow state left the physical range (rho outside (0, 1], NaN, q >= q_cav)."""


class ConfigError(TransonicError, ValueError):
    """A configuration file or parameter set is malformed or unphysical."""
