"""Pointwise thermodynamics of the normalized polytropic / isothermal gas.

All speeds are scaled so that the stagnation density is 1 and, for the
isothermal case, the sound speed is 1.  A :class:`GasModel` also carries the
viscosity coefficient ``sigma2(q)``, the density potential
``sigma(rho) = int_1^rho sigma2``, and the hodograph-type variable ``mu(rho)``
with ``mu'(rho) = c^2 / q^2``.  Integrals are tabulated once per model on a
panel table in the speed variable (see :class:`~transonic._quadrature.PanelIntegral`).
"""

import numpy as np
from scipy.interpolate import PchipInterpolator

from ._quadrature import PanelIntegral
from ._validation import as_float_array, check_interval, check_scalar, restore_shape
from .exceptions import DomainError

_GAMMA1_SPEED_MAX = 9.0


class GasModel:
    """Thermodynamic functions for adiabatic exponent ``gamma`` in ``[1, 3)``.

    Parameters
    ----------
    gamma : float
        Adiabatic exponent; ``gamma == 1`` selects the isothermal law
        ``rho = exp(-q^2 / 2)``.
    q_min_mu_ratio : float
        Stagnation-side cutoff for ``mu`` as a fraction of ``q_cr``.  ``mu`` is
        logarithmically singular at ``q = 0`` and is only defined above it.
    mu_anchor : float, optional
        Density at which ``mu`` vanishes.  Defaults to the sonic density.
    table_size : int
        Number of nodes in the speed table used for the integrals.

    Notes
    -----
    Below ``q_j = sqrt(2) q_cr`` the coefficient ``sigma2`` is replaced by the
    cubic Hermite continuation in ``s = q^2`` matching value and slope at
    ``q_j`` with ``sigma2(0) = (gamma + 1) / 8`` and zero slope at ``s = 0``.
    The interpolant collapses to ``(gamma + 1) / 8 * (1 + (s / s_j)^2)``.

    Instances are treated as immutable; every method is a pure function.
    """

    def __init__(self, gamma, q_min_mu_ratio=1e-3, mu_anchor=None, table_size=2048):
        self.gamma = check_scalar(gamma, "gamma", 1.0, 3.0, hi_open=True)
        self.isothermal = self.gamma == 1.0
        g = self.gamma
        self.q_cr = np.sqrt(2.0 / (g + 1.0))
        self.q_cav = np.inf if self.isothermal else np.sqrt(2.0 / (g - 1.0))
        self.q_junction = np.sqrt(2.0) * self.q_cr
        self._s_junction = self.q_junction**2
        self.sigma2_junction = (g + 1.0) / 4.0
        self.sigma2_floor = (g + 1.0) / 8.0
        self.q_min_mu = check_scalar(q_min_mu_ratio, "q_min_mu_ratio", 0.0, 1.0, lo_open=True) * self.q_cr

        nodes = self._speed_nodes(int(table_size))
        self._nodes = nodes
        self._sigma_int = PanelIntegral(self._sigma_integrand, nodes)
        self._mu_int = PanelIntegral(self._mu_integrand, nodes)
        self._flux_int = PanelIntegral(self._flux_integrand, nodes)
        self.q_table_max = nodes[-1]

        sig = self._sigma_int.cumulative
        self.sigma_min = sig[-1]
        # sigma is decreasing in q; interpolate s = q^2 against increasing sigma
        keep = _strictly_decreasing(sig)
        self._s_of_sigma = PchipInterpolator(sig[keep][::-1], nodes[keep][::-1] ** 2)

        if mu_anchor is None:
            self.mu_anchor = float(self._rho(self.q_cr))
            self._q_mu_anchor = self.q_cr
        else:
            self.mu_anchor = check_scalar(mu_anchor, "mu_anchor", 0.0, 1.0, lo_open=True, hi_open=True)
            self._q_mu_anchor = float(self.speed_from_density(self.mu_anchor))
        self._mu_offset = float(self._mu_raw(self._q_mu_anchor))
        mu_nodes = nodes[nodes >= self.q_min_mu]
        mu_nodes = np.concatenate([[self.q_min_mu], mu_nodes[mu_nodes > self.q_min_mu]])
        mu_vals = self._mu_unchecked(mu_nodes)
        self.mu_max = float(mu_vals[0])
        self.mu_min = float(mu_vals[-1])
        keep = _strictly_decreasing(mu_vals)
        self._logq_of_mu = PchipInterpolator(mu_vals[keep][::-1], np.log(mu_nodes[keep][::-1]))

    def __repr__(self):
        return f"GasModel(gamma={self.gamma!r})"

    def _speed_nodes(self, n):
        if self.isothermal:
            base = np.linspace(0.0, _GAMMA1_SPEED_MAX, n - 2)
        else:
            n_tail = n // 4
            head = np.linspace(0.0, 0.9 * self.q_cav, n - 2 - n_tail)
            tail = self.q_cav - 0.1 * self.q_cav * np.geomspace(1.0, 1e-10, n_tail + 1)[1:]
            base = np.concatenate([head, tail])
        return np.unique(np.concatenate([base, [self.q_cr, self.q_junction]]))

    # -- unchecked elementwise kernels -------------------------------------------------

    def _c2(self, q):
        if self.isothermal:
            return np.ones_like(q)
        return 1.0 - 0.5 * (self.gamma - 1.0) * q * q

    def _log_rho(self, q):
        if self.isothermal:
            return -0.5 * q * q
        return np.log1p(-0.5 * (self.gamma - 1.0) * q * q) / (self.gamma - 1.0)

    def _rho(self, q):
        return np.exp(self._log_rho(q))

    def _sigma2(self, q):
        s = q * q
        g = self.gamma
        with np.errstate(divide="ignore"):
            outer = 0.5 * (g + 1.0) - 1.0 / s
        inner = self.sigma2_floor * (1.0 + (s / self._s_junction) ** 2)
        return np.where(s >= self._s_junction, outer, inner)

    def _sigma_integrand(self, s):
        # d sigma / dq = sigma2 * d rho / dq = -sigma2 * rho * q / c^2
        c2 = self._c2(s)
        if self.isothermal:
            rho_over_c2 = self._rho(s)
        else:
            rho_over_c2 = c2 ** ((2.0 - self.gamma) / (self.gamma - 1.0))
        return -self._sigma2(s) * rho_over_c2 * s

    def _mu_integrand(self, s):
        # regular part of rho / s; the log singularity is handled analytically
        return np.expm1(self._log_rho(s)) / s

    def _flux_integrand(self, s):
        # regular part of 1 / (rho s); overflows to inf next to cavitation when gamma is near 1
        with np.errstate(over="ignore"):
            return np.expm1(-self._log_rho(s)) / s

    def _mu_raw(self, q):
        return -np.log(q) - self._mu_int(q)

    def _mu_unchecked(self, q):
        return self._mu_raw(q) - self._mu_offset

    # -- public pointwise functions ---------------------------------------------------

    def critical_speed(self):
        """Sonic speed ``q_cr = sqrt(2 / (gamma + 1))``."""
        return self.q_cr

    def cavitation_speed(self):
        """Speed at which the density vanishes (``inf`` when isothermal)."""
        return self.q_cav

    def _check_speed(self, q, name="q"):
        q, scalar = as_float_array(q)
        check_interval(q, name, 0.0, self.q_cav)
        return q, scalar

    def density(self, q):
        """Bernoulli density ``rho(q)``; decreasing on ``[0, q_cav]`` with ``rho(0) = 1``."""
        q, scalar = self._check_speed(q)
        if self.isothermal:
            rho = np.exp(-0.5 * q * q)
        else:
            rho = np.maximum(self._c2(q), 0.0) ** (1.0 / (self.gamma - 1.0))
        return restore_shape(rho, scalar)

    def sound_speed_squared(self, q):
        q, scalar = self._check_speed(q)
        return restore_shape(np.maximum(self._c2(q), 0.0), scalar)

    def sound_speed(self, q):
        """Local sound speed ``c(q)``; identically 1 in the isothermal case."""
        q, scalar = self._check_speed(q)
        return restore_shape(np.sqrt(np.maximum(self._c2(q), 0.0)), scalar)

    def mach(self, q):
        q, scalar = self._check_speed(q)
        with np.errstate(divide="ignore"):
            m = q / np.sqrt(np.maximum(self._c2(q), 0.0))
        return restore_shape(m, scalar)

    def pressure(self, q):
        """Normalized pressure ``rho^gamma / gamma`` (``rho`` when isothermal)."""
        rho = np.asarray(self.density(q))
        p = rho if self.isothermal else rho**self.gamma / self.gamma
        return restore_shape(p, p.ndim == 0)

    def speed_from_density(self, rho):
        """Inverse of :meth:`density` on ``(0, 1]``."""
        rho, scalar = as_float_array(rho)
        check_interval(rho, "rho", 0.0, 1.0, lo_open=True)
        if self.isothermal:
            q2 = -2.0 * np.log(rho)
        else:
            q2 = -2.0 * np.expm1((self.gamma - 1.0) * np.log(rho)) / (self.gamma - 1.0)
        return restore_shape(np.sqrt(np.maximum(q2, 0.0)), scalar)

    def sigma2(self, q):
        """Viscosity coefficient ``sigma2(q)``.

        Equals ``(q^2 - c^2) / q^2`` for ``q >= sqrt(2) q_cr`` and the positive
        C^1 continuation below.
        """
        q, scalar = as_float_array(q)
        check_interval(q, "q", 0.0, self.q_cav, hi_open=True)
        return restore_shape(self._sigma2(q), scalar)

    def dsigma2_dq(self, q):
        q, scalar = as_float_array(q)
        check_interval(q, "q", 0.0, self.q_cav, hi_open=True)
        s = q * q
        with np.errstate(divide="ignore"):
            outer = 2.0 / (q * s)
        inner = self.sigma2_floor * 4.0 * q * s / self._s_junction**2
        return restore_shape(np.where(s >= self._s_junction, outer, inner), scalar)

    def sigma_of_speed(self, q):
        q, scalar = as_float_array(q)
        check_interval(q, "q", 0.0, self.q_table_max)
        return restore_shape(self._sigma_int(q), scalar)

    def sigma_of_rho(self, rho):
        """Density potential ``sigma(rho) = int_1^rho sigma2``; ``sigma(1) = 0``."""
        rho, scalar = as_float_array(rho)
        check_interval(rho, "rho", 0.0, 1.0, lo_open=True)
        q = np.asarray(self.speed_from_density(rho))
        if np.any(q > self.q_table_max):
            raise DomainError("rho too close to cavitation for the sigma table")
        return restore_shape(self._sigma_int(q), scalar)

    def speed_of_sigma(self, sigma):
        """Speed ``q`` with ``sigma_of_speed(q) == sigma``."""
        sigma, scalar = as_float_array(sigma)
        check_interval(sigma, "sigma", self.sigma_min, 0.0)
        return restore_shape(self._speed_of_sigma(sigma), scalar)

    def _speed_of_sigma(self, sigma):
        # Newton in s = q^2, where d sigma / ds = -sigma2 rho / (2 c^2) stays nonzero at q = 0
        s = np.clip(self._s_of_sigma(sigma), 0.0, self.q_table_max**2)
        for _ in range(3):
            q = np.sqrt(s)
            c2 = self._c2(q)
            slope = -0.5 * self._sigma2(q) * self._rho(q) / c2
            s = np.clip(s - (self._sigma_int(q) - sigma) / slope, 0.0, self.q_table_max**2)
        return np.sqrt(s)

    def rho_of_sigma(self, sigma):
        """Inverse of :meth:`sigma_of_rho`."""
        q = np.asarray(self.speed_of_sigma(sigma))
        rho = self._rho(q)
        return restore_shape(rho, rho.ndim == 0)

    def mu_of_speed(self, q):
        q, scalar = as_float_array(q)
        check_interval(q, "q", self.q_min_mu, self.q_table_max)
        return restore_shape(self._mu_unchecked(q), scalar)

    def mu_of_rho(self, rho):
        """``mu(rho)`` with ``mu' = c^2 / q^2`` and ``mu(mu_anchor) = 0``.

        Raises :class:`DomainError` at or above the stagnation-side cutoff density
        ``rho(q_min_mu)``.
        """
        rho, scalar = as_float_array(rho)
        check_interval(rho, "rho", 0.0, 1.0, lo_open=True)
        q = np.asarray(self.speed_from_density(rho))
        if np.any(q <= self.q_min_mu):
            raise DomainError("mu is undefined at or below the stagnation cutoff speed")
        if np.any(q > self.q_table_max):
            raise DomainError("rho too close to cavitation for the mu table")
        return restore_shape(self._mu_unchecked(q), scalar)

    def speed_of_mu(self, mu):
        mu, scalar = as_float_array(mu)
        check_interval(mu, "mu", self.mu_min, self.mu_max)
        logq = self._logq_of_mu(mu)
        # d mu / d log q = -rho
        for _ in range(3):
            q = np.exp(logq)
            logq = logq + (self._mu_unchecked(q) - mu) / self._rho(q)
        return restore_shape(np.exp(logq), scalar)

    def flux_potential(self, q, q_ref):
        """``int_{q_ref}^q ds / (rho(s) s)``, the speed integral in the entropy flux."""
        q, scalar = as_float_array(q)
        check_interval(q, "q", 0.0, self.q_table_max, lo_open=True)
        q_ref = check_scalar(q_ref, "q_ref", 0.0, self.q_table_max, lo_open=True)
        val = np.log(q / q_ref) + self._flux_int(q) - self._flux_int(q_ref)
        return restore_shape(val, scalar)


def _strictly_decreasing(values):
    """Indices of the longest prefix-greedy strictly decreasing subsequence."""
    keep = [0]
    for i in range(1, len(values)):
        if values[i] < values[keep[-1]]:
            keep.append(i)
    return np.asarray(keep)


def bernoulli_residual(gas, q):
    """``q^2 - q_cr^2 - 2 / (gamma + 1) (q^2 - c^2)``; identically zero for ``gamma > 1``."""
    q = np.asarray(q, dtype=float)
    c2 = np.asarray(gas.sound_speed_squared(q))
    return q * q - gas.q_cr**2 - 2.0 / (gas.gamma + 1.0) * (q * q - c2)
