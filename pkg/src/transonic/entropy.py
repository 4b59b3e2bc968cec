"""Entropy generators, Loewner-Morawetz entropy pairs and the separated families.

A generator ``H(mu, theta)`` solving the generalized Tricomi equation

    H_mumu + (1 - M^2) / rho^2 * H_thetatheta = 0

produces the entropy pair

    Q1 = rho q H_mu cos(theta) - q H_theta sin(theta)
    Q2 = rho q H_mu sin(theta) + q H_theta cos(theta).
"""

from typing import NamedTuple

import numpy as np
from scipy.integrate import quad, solve_ivp

from ._quadrature import PanelIntegral
from ._validation import as_float_array, check_interval, check_scalar, restore_shape
from .exceptions import DomainError


class Partials(NamedTuple):
    H: np.ndarray
    H_mu: np.ndarray
    H_theta: np.ndarray
    H_mumu: np.ndarray
    H_thetatheta: np.ndarray
    H_mutheta: np.ndarray

    def scaled(self, a):
        return Partials(*(a * np.asarray(p) for p in self))

    def __add__(self, other):
        return Partials(*(np.asarray(p) + np.asarray(o) for p, o in zip(self, other)))


class EntropyGenerator:
    """Base class: subclasses implement :meth:`partials` in the ``(mu, theta)`` variables."""

    tag = "custom"

    def __init__(self, gas):
        self.gas = gas

    def partials(self, mu, theta):
        raise NotImplementedError

    def partials_at_speed(self, q, theta):
        mu = self.gas.mu_of_speed(q)
        return self.partials(mu, theta)

    def __add__(self, other):
        return CombinedGenerator(self.gas, [(1.0, self), (1.0, other)])

    def __mul__(self, a):
        return CombinedGenerator(self.gas, [(float(a), self)])

    __rmul__ = __mul__


class CombinedGenerator(EntropyGenerator):
    tag = "combination"

    def __init__(self, gas, terms):
        super().__init__(gas)
        self.terms = list(terms)

    def partials(self, mu, theta):
        out = None
        for a, gen in self.terms:
            p = gen.partials(mu, theta).scaled(a)
            out = p if out is None else out + p
        return out

    def partials_at_speed(self, q, theta):
        out = None
        for a, gen in self.terms:
            p = gen.partials_at_speed(q, theta).scaled(a)
            out = p if out is None else out + p
        return out


class CustomGenerator(EntropyGenerator):
    """Generator assembled from user callables ``f(mu, theta)``; missing partials are zero."""

    def __init__(self, gas, H, H_mu=None, H_theta=None, H_mumu=None, H_thetatheta=None, H_mutheta=None):
        super().__init__(gas)
        self._funcs = (H, H_mu, H_theta, H_mumu, H_thetatheta, H_mutheta)

    def partials(self, mu, theta):
        mu, theta = np.broadcast_arrays(np.asarray(mu, float), np.asarray(theta, float))
        vals = [np.zeros_like(mu) if f is None else np.broadcast_to(f(mu, theta), mu.shape).astype(float)
                for f in self._funcs]
        return Partials(*vals)


class HStar(EntropyGenerator):
    """Convex prototype ``H* = theta^2 / 2 + G(mu)`` with ``G'' = (M^2 - 1) / rho^2``.

    The free constant in ``G'`` is fixed by ``H*_mu + 1 / rho = int_{q_ref}^q ds / (rho s)``,
    which makes ``V* = theta^2 / 2 + P(rho)`` share the same reference speed.  ``G``
    itself vanishes at ``mu = 0``.
    """

    tag = "star"

    def __init__(self, gas, q_ref=None):
        super().__init__(gas)
        self.q_ref = gas.q_cr if q_ref is None else check_scalar(q_ref, "q_ref", 0.0, gas.q_table_max, lo_open=True)
        nodes = gas._nodes[gas._nodes > gas.q_min_mu]
        nodes = np.concatenate([[gas.q_min_mu], nodes])
        # dG/dq = G'(mu) * dmu/dq = -H*_mu rho / q
        self._G = PanelIntegral(lambda s: -self._h_mu(s) * gas._rho(s) / s, nodes)
        self._G_offset = float(self._G(gas._q_mu_anchor))

    def _h_mu(self, q):
        gas = self.gas
        return np.log(q / self.q_ref) + gas._flux_int(q) - gas._flux_int(self.q_ref) - np.exp(-gas._log_rho(q))

    def partials_at_speed(self, q, theta):
        gas = self.gas
        q, theta = np.broadcast_arrays(np.asarray(q, float), np.asarray(theta, float))
        check_interval(q, "q", gas.q_min_mu, gas.q_table_max)
        rho = gas._rho(q)
        c2 = gas._c2(q)
        G = self._G(q) - self._G_offset
        return Partials(
            H=0.5 * theta**2 + G,
            H_mu=self._h_mu(q),
            H_theta=theta.copy(),
            H_mumu=(q * q / c2 - 1.0) / rho**2,
            H_thetatheta=np.ones_like(q),
            H_mutheta=np.zeros_like(q),
        )

    def partials(self, mu, theta):
        q = self.gas.speed_of_mu(mu)
        return self.partials_at_speed(q, theta)


def hstar(gas, mu, theta, q_ref=None):
    """Evaluate ``H*`` and its partials at ``(mu, theta)``."""
    return HStar(gas, q_ref).partials(mu, theta)


def tricomi_coefficient(gas, q):
    """``(M^2 - 1) / rho^2`` as a function of speed."""
    q = np.asarray(q, dtype=float)
    return (q * q / gas._c2(q) - 1.0) / gas._rho(q) ** 2


def tricomi_residual(generator, mu, theta):
    """``H_mumu + (1 - M^2) / rho^2 * H_thetatheta`` at ``(mu, theta)``."""
    gas = generator.gas
    q = np.asarray(gas.speed_of_mu(mu))
    p = generator.partials(mu, theta)
    return np.asarray(p.H_mumu) - tricomi_coefficient(gas, q) * np.asarray(p.H_thetatheta)


class EntropyPair:
    """Entropy flux pair ``(Q1, Q2)`` generated by ``generator``."""

    def __init__(self, generator):
        self.generator = generator
        self.gas = generator.gas

    def at_speed(self, q, theta):
        q, theta = np.broadcast_arrays(np.asarray(q, float), np.asarray(theta, float))
        p = self.generator.partials_at_speed(q, theta)
        rho = self.gas._rho(q)
        cos, sin = np.cos(theta), np.sin(theta)
        rq = rho * q * np.asarray(p.H_mu)
        qh = q * np.asarray(p.H_theta)
        return rq * cos - qh * sin, rq * sin + qh * cos

    def at_density(self, rho, theta):
        return self.at_speed(self.gas.speed_from_density(rho), theta)

    def derivative_forms(self, rho, theta):
        """The four first derivatives ``(dQ1/drho, dQ1/dtheta, dQ2/drho, dQ2/dtheta)``.

        Written with ``A = rho H_mutheta - H_theta`` and ``B = H_mu + H_thetatheta / rho``;
        the ``rho``-derivatives already use the Tricomi equation to remove ``H_mumu``.
        """
        gas = self.gas
        rho, theta = np.broadcast_arrays(np.asarray(rho, float), np.asarray(theta, float))
        q = np.asarray(gas.speed_from_density(rho))
        c2 = gas._c2(q)
        p = self.generator.partials_at_speed(q, theta)
        A = rho * p.H_mutheta - p.H_theta
        B = p.H_mu + p.H_thetatheta / rho
        cos, sin = np.cos(theta), np.sin(theta)
        k = c2 / (rho * q)
        m = (c2 - q * q) / q
        return (
            -k * sin * A - m * cos * B,
            q * cos * A - rho * q * sin * B,
            k * cos * A - m * sin * B,
            q * sin * A + rho * q * cos * B,
        )


def entropy_pair(generator):
    return EntropyPair(generator)


def _central4(f, x, h):
    return (f(x - 2 * h) - 8 * f(x - h) + 8 * f(x + h) - f(x + 2 * h)) / (12 * h)


def _forward4(f, x, h):
    return (-25 * f(x) + 48 * f(x + h) - 36 * f(x + 2 * h) + 16 * f(x + 3 * h) - 3 * f(x + 4 * h)) / (12 * h)


def pair_compatibility_residual(pair, rho, theta, h_rho=None, h_theta=1e-3):
    """Max over ``i`` of ``|d/dtheta dQi/drho - d/drho dQi/dtheta|`` by finite differences.

    Near zero exactly when the generator solves the Tricomi equation.
    """
    rho = np.asarray(rho, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if h_rho is None:
        h_rho = 1e-4 * rho
    d_theta = _central4(lambda t: np.stack(pair.derivative_forms(rho, t)), theta, h_theta)
    d_rho = _central4(lambda r: np.stack(pair.derivative_forms(r, theta)), rho, h_rho)
    r1 = np.abs(d_theta[0] - d_rho[1])
    r2 = np.abs(d_theta[2] - d_rho[3])
    return np.maximum(r1, r2)


class SeparatedSolution:
    """Dense solution of ``F'' + sign * n^2 (M^2 - 1) / rho^2 F = 0`` in ``mu``.

    ``sign = +1`` gives the oscillatory family ``F_n``, ``sign = -1`` the
    exponential family ``K_n``.
    """

    def __init__(self, gas, n, mu_start, mu_end, initial=(1.0, 0.0), sign=1, rtol=1e-12, atol=1e-14):
        self.gas = gas
        self.n = n
        self.sign = sign
        lo, hi = min(mu_start, mu_end), max(mu_start, mu_end)
        if lo < gas.mu_min or hi > gas.mu_max:
            raise DomainError("integration interval leaves the mu table")
        self.interval = (lo, hi)
        self.mu_start = mu_start
        scale = sign * n * n

        def rhs(mu, y):
            a = tricomi_coefficient(gas, gas.speed_of_mu(min(max(mu, lo), hi)))
            return [y[1], -scale * a * y[0]]

        sol = solve_ivp(rhs, (mu_start, mu_end), list(initial), method="RK45", rtol=rtol, atol=atol,
                        dense_output=True)
        if not sol.success:
            raise DomainError(f"ODE integration failed: {sol.message}")
        self._sol = sol.sol
        self.nfev = sol.nfev
        self._fd = 1e-4 * (hi - lo)

    def _check(self, mu):
        mu, scalar = as_float_array(mu)
        check_interval(mu, "mu", *self.interval)
        return mu, scalar

    def value(self, mu):
        mu, scalar = self._check(mu)
        return restore_shape(self._sol(mu.ravel())[0].reshape(mu.shape), scalar)

    def derivative(self, mu):
        mu, scalar = self._check(mu)
        return restore_shape(self._sol(mu.ravel())[1].reshape(mu.shape), scalar)

    def second_derivative(self, mu):
        """``d/dmu`` of the dense first derivative; one-sided stencils near the ends."""
        mu, scalar = self._check(mu)
        lo, hi = self.interval
        h = self._fd
        f = lambda x: self._sol(x.ravel())[1].reshape(x.shape)
        d = _central4(f, np.clip(mu, lo + 2 * h, hi - 2 * h), h)
        left = mu < lo + 2 * h
        if np.any(left):
            d[left] = _forward4(f, mu[left], h)
        right = mu > hi - 2 * h
        if np.any(right):
            d[right] = _forward4(f, mu[right], -h)
        return restore_shape(d, scalar)

    def ode_residual(self, mu):
        q = self.gas.speed_of_mu(mu)
        return np.asarray(self.second_derivative(mu)) + self.sign * self.n**2 * tricomi_coefficient(self.gas, q) * np.asarray(self.value(mu))


def supersonic_band(gas, q_max=None):
    """Default ``mu`` interval ``(mu(q_max), mu(q_cr))`` covering a supersonic band."""
    if q_max is None:
        q_max = min(1.5 * gas.q_cr, gas.q_cr + 0.8 * (min(gas.q_cav, gas.q_table_max) - gas.q_cr))
    return float(gas.mu_of_speed(q_max)), float(gas.mu_of_speed(gas.q_cr))


def solve_fn(gas, n, mu_interval=None, initial=(1.0, 0.0)):
    """Oscillatory separated solution ``F_n``; integrates from the sonic end of the interval."""
    lo, hi = supersonic_band(gas) if mu_interval is None else mu_interval
    return SeparatedSolution(gas, n, hi, lo, initial, sign=1)


def solve_kn(gas, n, mu_interval=None, initial=(1.0, 0.0)):
    lo, hi = supersonic_band(gas) if mu_interval is None else mu_interval
    return SeparatedSolution(gas, n, hi, lo, initial, sign=-1)


class FourierGenerator(EntropyGenerator):
    """``F_n(mu) cos(n theta)`` or ``F_n(mu) sin(n theta)``."""

    tag = "fourier"

    def __init__(self, solution, part="cos"):
        super().__init__(solution.gas)
        if part not in ("cos", "sin"):
            raise ValueError("part must be 'cos' or 'sin'")
        self.solution = solution
        self.part = part
        self.n = solution.n

    def partials(self, mu, theta):
        mu, theta = np.broadcast_arrays(np.asarray(mu, float), np.asarray(theta, float))
        s = self.solution
        F, dF, ddF = (np.asarray(s.value(mu)), np.asarray(s.derivative(mu)), np.asarray(s.second_derivative(mu)))
        n = self.n
        if self.part == "cos":
            e, de = np.cos(n * theta), -n * np.sin(n * theta)
        else:
            e, de = np.sin(n * theta), n * np.cos(n * theta)
        return Partials(F * e, dF * e, F * de, ddF * e, -n * n * F * e, dF * de)


class ExponentialGenerator(EntropyGenerator):
    """``K_n(mu) exp(+/- n theta)``."""

    tag = "exponential"

    def __init__(self, solution, sign=1):
        super().__init__(solution.gas)
        self.solution = solution
        self.n = solution.n
        self.sign = 1 if sign >= 0 else -1

    def partials(self, mu, theta):
        mu, theta = np.broadcast_arrays(np.asarray(mu, float), np.asarray(theta, float))
        s = self.solution
        K, dK, ddK = (np.asarray(s.value(mu)), np.asarray(s.derivative(mu)), np.asarray(s.second_derivative(mu)))
        k = self.sign * self.n
        e = np.exp(k * theta)
        return Partials(K * e, dK * e, k * K * e, ddK * e, k * k * K * e, k * dK * e)


def fourier_pair(solution):
    """Entropy pairs of the real and imaginary parts of ``F_n(mu) exp(i n theta)``."""
    return EntropyPair(FourierGenerator(solution, "cos")), EntropyPair(FourierGenerator(solution, "sin"))


def vstar_p_prime(gas, rho, q_ref):
    """``P'(rho) = (c^2 - q^2) / q^2 * int_{q_ref}^q ds / (rho s)``."""
    rho = np.asarray(rho, dtype=float)
    q = np.asarray(gas.speed_from_density(rho))
    c2 = gas._c2(q)
    return (c2 - q * q) / (q * q) * np.asarray(gas.flux_potential(q, q_ref))


def vstar_p(gas, rho, q_ref):
    """``P(rho)`` normalized by ``P(rho(q_ref)) = 0``, by adaptive quadrature.

    Integrated in ``t = log q``, where ``dP/dt = -(c^2 - q^2) rho J / c^2`` is smooth
    down to stagnation (``P`` grows like ``(log q)^2 / 2`` there).
    """
    rho = check_scalar(rho, "rho", 0.0, 1.0, lo_open=True, hi_open=True)
    q = float(gas.speed_from_density(rho))

    def dp_dt(t):
        s = np.exp(t)
        c2 = gas._c2(s)
        return float(-(c2 - s * s) * gas._rho(s) * gas.flux_potential(s, q_ref) / c2)

    a, b = np.log(q_ref), np.log(q)
    if abs(b - a) < 1e-12:
        return 0.0
    val, _ = quad(dp_dt, a, b, epsabs=1e-14, epsrel=1e-12, limit=200)
    return val


def vstar(gas, rho, theta, q_ref):
    """``V* = theta^2 / 2 + P(rho)``; ``V*_theta = theta``."""
    return 0.5 * theta**2 + vstar_p(gas, rho, q_ref)
