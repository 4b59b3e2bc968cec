"""Riemann invariants and invariant "apple" regions in the (q, theta) phase plane."""

from dataclasses import dataclass, field

import numpy as np

from ._validation import as_float_array, check_interval, check_scalar, restore_shape
from .exceptions import ConstructionError, DomainError
from .gas import GasModel


@dataclass(frozen=True)
class PhaseState:
    """Velocity in polar form; ``theta`` is kept unwrapped."""

    q: float
    theta: float

    def __post_init__(self):
        if self.q < 0:
            raise DomainError("speed must be nonnegative")

    @property
    def u(self):
        return self.q * np.cos(self.theta)

    @property
    def v(self):
        return self.q * np.sin(self.theta)

    @classmethod
    def from_velocity(cls, u, v):
        return cls(float(np.hypot(u, v)), float(np.arctan2(v, u)))


def w_profile(gas, q):
    """Speed part ``W(q)`` of the Riemann invariants, normalized by ``W(q_cr) = 0``.

    ``dW/dq = sqrt(q^2 - c^2) / (q c)`` on the supersonic range.
    """
    q, scalar = as_float_array(q)
    check_interval(q, "q", gas.q_cr * (1.0 - 1e-14), gas.q_cav)
    q = np.maximum(q, gas.q_cr)
    if gas.isothermal:
        w = np.sqrt(q * q - 1.0) - np.arccos(1.0 / q)
    else:
        g = gas.gamma
        k = np.sqrt((g + 1.0) / (g - 1.0))
        ratio = q * q / gas.q_cr**2
        a1 = np.clip(0.5 * (g - 1.0) * (ratio - 1.0), 0.0, 1.0)
        a2 = np.clip(0.5 * (g + 1.0) * (1.0 - 1.0 / ratio), 0.0, 1.0)
        w = k * np.arcsin(np.sqrt(a1)) - np.arcsin(np.sqrt(a2))
    return restore_shape(w, scalar)


def w_at_cavitation(gas):
    if gas.isothermal:
        return np.inf
    k = np.sqrt((gas.gamma + 1.0) / (gas.gamma - 1.0))
    return (k - 1.0) * np.pi / 2.0


def inverse_w(gas, w, tol=1e-10):
    """Speed ``q >= q_cr`` with ``W(q) = w``, by vectorized bisection."""
    w, scalar = as_float_array(w)
    check_interval(w, "w", 0.0, w_at_cavitation(gas))
    lo = np.full_like(w, gas.q_cr)
    if gas.isothermal:
        hi = np.maximum(2.0, w + 3.0)
    else:
        hi = np.full_like(w, gas.q_cav)
    while np.max(hi - lo) > tol * gas.q_cr:
        mid = 0.5 * (lo + hi)
        below = np.asarray(w_profile(gas, mid)) < w
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return restore_shape(0.5 * (lo + hi), scalar)


def riemann_invariants(gas, q, theta, q_anchor):
    """``(W+, W-) = theta -/+ (W(q) - W(q_anchor))``; equal to ``theta`` at the anchor."""
    if np.any(np.asarray(q) < gas.q_cr) or q_anchor < gas.q_cr:
        raise DomainError("Riemann invariants are only defined for supersonic states")
    shift = np.asarray(w_profile(gas, q)) - w_profile(gas, q_anchor)
    theta = np.asarray(theta, dtype=float)
    return theta - shift, theta + shift


def level_curve_slope(gas, q):
    """``|d theta / dq|`` along a level curve of ``W+`` or ``W-``."""
    q, scalar = as_float_array(q)
    check_interval(q, "q", gas.q_cr, gas.q_cav, lo_open=True)
    c = np.sqrt(np.maximum(gas._c2(q), 0.0))
    return restore_shape(np.sqrt(q * q - c * c) / (q * c), scalar)


def a_of_gamma(gamma):
    """Angular sweep ``W(q_cav) - W(sqrt(2) q_cr)`` of a level curve; decreasing in gamma."""
    g = check_scalar(gamma, "gamma", 1.0, 3.0, lo_open=True, hi_open=True)
    k = np.sqrt((g + 1.0) / (g - 1.0))
    return float((k - 1.0) * np.pi / 2.0 - (k * np.arcsin(np.sqrt((g - 1.0) / 2.0)) - np.arcsin(np.sqrt((g + 1.0) / 4.0))))


def find_gamma_star(tol=1e-8):
    """Root of ``a(gamma) = pi`` on ``(1, 3)`` by bisection."""
    lo, hi = 1.0 + 1e-9, 3.0 - 1e-9
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if a_of_gamma(mid) > np.pi:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def riemann_viscosity_coefficient(gas, q):
    """Closed-form coefficient ``c((gamma-3) q^2 + 4 c^2) / (2 rho^2 q^2 sqrt(q^2 - c^2))``.

    Multiplies ``|grad rho|^2`` in the viscous equation satisfied by ``W+``;
    negative exactly when ``q > sqrt(2) q_cr``.
    """
    q, scalar = as_float_array(q)
    check_interval(q, "q", gas.q_cr, gas.q_cav, lo_open=True, hi_open=True)
    c2 = gas._c2(q)
    c = np.sqrt(c2)
    rho = gas._rho(q)
    val = c * ((gas.gamma - 3.0) * q * q + 4.0 * c2) / (2.0 * rho**2 * q * q * np.sqrt(q * q - c2))
    return restore_shape(val, scalar)


def viscosity_identity_lhs(gas, q, rel_step=1e-3):
    """``W+'' - (d sigma2 / d rho) q^2 / (q^2 - c^2) W+'`` with ``rho``-derivatives by finite differences.

    ``W+ = -W(q(rho))`` along a fixed direction.  Fourth-order central
    differences with step ``rel_step * rho``; ``sigma2 = (q^2 - c^2) / q^2``, so
    only speeds with ``q > sqrt(2) q_cr`` are meaningful.
    """
    q, scalar = as_float_array(q)
    check_interval(q, "q", gas.q_junction, gas.q_cav, hi_open=True)
    rho = gas._rho(q)
    h = rel_step * rho

    def wp(r):
        return -np.asarray(w_profile(gas, gas.speed_from_density(r)))

    f = [wp(rho + k * h) for k in (-2, -1, 0, 1, 2)]
    d1 = (f[0] - 8 * f[1] + 8 * f[3] - f[4]) / (12 * h)
    d2 = (-f[0] + 16 * f[1] - 30 * f[2] + 16 * f[3] - f[4]) / (12 * h * h)
    c2 = gas._c2(q)
    # sigma2 = 1 - c^2 / q^2 and dq/drho = -c^2 / (rho q)
    dsig_drho = 2.0 / q**3 * (-c2 / (rho * q))
    lhs = d2 - dsig_drho * q * q / (q * q - c2) * d1
    return restore_shape(lhs, scalar)


def angular_distance(a, b):
    """Distance between angles on the circle, in ``[0, pi]``."""
    d = np.mod(np.asarray(a) - np.asarray(b), 2.0 * np.pi)
    return np.minimum(d, 2.0 * np.pi - d)


@dataclass(frozen=True)
class InvariantRegion:
    """Intersection of ``m`` rotated apple regions anchored at ``(q0, theta0 + 2 pi j / m)``.

    A state with ``q > q0`` is inside when ``W(q) - W(q0)`` does not exceed its
    angular distance to the nearest anchor direction; every state with
    ``q <= q0`` is inside.
    """

    gas: GasModel = field(repr=False)
    q0: float
    theta0: float
    m: int
    a_eff: float
    q_star: float

    @property
    def anchors(self):
        return self.theta0 + 2.0 * np.pi * np.arange(self.m) / self.m

    def _gap(self, theta):
        theta = np.asarray(theta, dtype=float)
        return np.min(angular_distance(theta[..., None], self.anchors), axis=-1)

    def speed_cap(self, theta):
        """Largest speed inside the region along direction ``theta``."""
        w0 = w_profile(self.gas, self.q0)
        return inverse_w(self.gas, w0 + self._gap(theta))

    def margin(self, q, theta):
        """Signed containment margin in W units; nonnegative inside."""
        gas = self.gas
        q = np.asarray(q, dtype=float)
        gap = self._gap(theta)
        w0 = w_profile(gas, self.q0)
        qc = np.clip(q, gas.q_cr, gas.q_cav)
        wq = np.asarray(w_profile(gas, qc))
        return np.where(q > self.q0, gap - (wq - w0), gap + (w0 - wq))

    def contains(self, q, theta):
        """Return ``(inside, margin)`` for one state or arrays of states."""
        q_arr = np.asarray(q, dtype=float)
        margin = self.margin(q_arr, theta)
        inside = (margin >= 0.0) & (q_arr < self.gas.q_cav)
        if inside.ndim == 0:
            return bool(inside), float(margin)
        return inside, margin

    def boundary(self, n=721):
        """Closed boundary polyline as arrays ``(q, theta)``."""
        theta = self.theta0 - np.pi + np.linspace(0.0, 2.0 * np.pi, n)
        return np.asarray(self.speed_cap(theta)), theta


def build_region(gas, q0, theta0=0.0):
    """Smallest covering family of apples anchored at ``(q0, theta0)``.

    ``m = 1`` when the level curves of a single apple meet before cavitation
    (``a_eff > pi``); otherwise ``m`` is the smallest integer with
    ``pi / m < a_eff``.
    """
    q0 = check_scalar(q0, "q0", gas.q_junction * (1.0 - 1e-12), gas.q_cav, hi_open=True)
    theta0 = check_scalar(theta0, "theta0")
    a_eff = w_at_cavitation(gas) - w_profile(gas, q0)
    if not a_eff > 0.0:
        raise ConstructionError("q0 too close to cavitation: level curves have no angular sweep")
    if a_eff > np.pi:
        m = 1
    else:
        m = max(2, int(np.floor(np.pi / a_eff)) + 1)
    q_star = float(inverse_w(gas, w_profile(gas, q0) + np.pi / m))
    if not q_star < gas.q_cav:
        raise ConstructionError("region cap reaches cavitation")
    return InvariantRegion(gas, q0, theta0, m, float(a_eff), q_star)
