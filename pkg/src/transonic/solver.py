"""Viscous transonic flow in the ``(theta, sigma)`` variables.

The unknowns are deviations from the far field, ``theta_bar = theta - theta_inf``
and ``sigma_bar = sigma - sigma_inf``.  One application of the map ``Gamma``
evaluates the first-order terms at the current state and solves the two
decoupled Poisson problems

    eps Lap(theta_bar) = lam f1,   grad(theta_bar) . n = 0 on the obstacle
    eps Lap(sigma_bar) = lam f2,   eps grad(sigma_bar) . n = lam g(rho q e_theta . n)

with both unknowns zero on the far field.  ``g`` is the identity for
``bc_sign="signed"`` (no net mass through the wall) and ``-|.|`` or ``+|.|``
otherwise.  Fixed points of ``Gamma`` at ``lam = 1`` are viscous solutions.

Plain damped iteration of ``Gamma`` does not converge in general: its
linearization has real eigenvalues above one.  The default solver is therefore
Newton's method with pseudo-transient continuation on the discrete residual
``eps Lap_h x - lam f(x)``; convergence is still certified by the fixed-point
defect ``|Gamma(x) - x|``.
"""

import time
from dataclasses import asdict, dataclass, field, replace

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu
from scipy.spatial import cKDTree
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .elliptic import MixedBC, poisson_operator
from .exceptions import ConfigError, InvalidStateError
from .gas import GasModel
from .mesh import FARFIELD, OBSTACLE


BC_SIGNS = ("signed", "negative", "positive")


@dataclass(frozen=True)
class SolveConfig:
    """Parameters of a viscous solve.  ``q_inf_ratio`` is ``q_inf / q_cr``."""

    gamma: float = 1.4
    q_inf_ratio: float = 0.5
    theta_inf: float = 0.0
    epsilon: float = 0.1
    lambda_steps: int = 10
    omega: float = 0.5
    tol: float = 1e-8
    max_iter: int = 5000
    bc_sign: str = "signed"
    scheme: str = "centered"
    anderson_memory: int = 8
    flux_smoothing: float = 1e-8
    method: str = "ptc"
    dt0: float = 0.1

    def __post_init__(self):
        if not 1.0 <= self.gamma < 3.0:
            raise ConfigError("gamma must lie in [1, 3)")
        if not 0.0 < self.q_inf_ratio < 1.0:
            raise ConfigError("the far-field speed must satisfy 0 < q_inf < q_cr (q_inf_ratio in (0, 1))")
        if not self.epsilon > 0:
            raise ConfigError("epsilon must be positive")
        if not 0.0 < self.omega <= 1.0:
            raise ConfigError("omega must lie in (0, 1]")
        if self.lambda_steps < 1:
            raise ConfigError("lambda_steps must be at least 1")
        if not self.tol > 0 or self.max_iter < 1:
            raise ConfigError("tol must be positive and max_iter at least 1")
        if self.bc_sign not in BC_SIGNS:
            raise ConfigError(f"bc_sign must be one of {', '.join(BC_SIGNS)}")
        if self.method not in ("ptc", "picard"):
            raise ConfigError("method must be 'ptc' or 'picard'")
        if not self.dt0 > 0:
            raise ConfigError("dt0 must be positive")
        if self.scheme not in ("centered", "upwind"):
            raise ConfigError("scheme must be 'centered' or 'upwind'")
        if self.anderson_memory < 0:
            raise ConfigError("anderson_memory must be nonnegative")

    def gas(self):
        return _gas(self.gamma)

    def lambda_schedule(self, lam=1.0):
        return np.linspace(0.0, lam, self.lambda_steps + 1)[1:]


_GAS_CACHE = {}


def _gas(gamma):
    gas = _GAS_CACHE.get(gamma)
    if gas is None:
        gas = _GAS_CACHE[gamma] = GasModel(gamma)
    return gas


class FlowField:
    """Cell values of ``(theta_bar, sigma_bar)`` with derived flow views."""

    def __init__(self, grid, gas, theta_bar, sigma_bar, theta_inf, sigma_inf):
        self.grid = grid
        self.gas = gas
        self.theta_bar = np.asarray(theta_bar, dtype=float)
        self.sigma_bar = np.asarray(sigma_bar, dtype=float)
        self.theta_inf = float(theta_inf)
        self.sigma_inf = float(sigma_inf)
        self._q = None

    @classmethod
    def uniform(cls, grid, gas, q_inf, theta_inf=0.0):
        n = grid.n_cells
        return cls(grid, gas, np.zeros(n), np.zeros(n), theta_inf, float(gas.sigma_of_speed(q_inf)))

    def with_values(self, theta_bar, sigma_bar):
        return FlowField(self.grid, self.gas, theta_bar, sigma_bar, self.theta_inf, self.sigma_inf)

    @property
    def vector(self):
        return np.concatenate([self.theta_bar, self.sigma_bar])

    @property
    def theta(self):
        return self.theta_bar + self.theta_inf

    @property
    def sigma(self):
        return self.sigma_bar + self.sigma_inf

    @property
    def q_inf(self):
        return float(self.gas.speed_of_sigma(self.sigma_inf))

    def check_valid(self):
        s = self.sigma
        if not (np.all(np.isfinite(s)) and np.all(np.isfinite(self.theta_bar))):
            raise InvalidStateError("non-finite values in the flow field")
        if s.max() > 0.0:
            raise InvalidStateError("density above stagnation density")
        if s.min() <= self.gas.sigma_min:
            raise InvalidStateError("speed reached cavitation")

    @property
    def q(self):
        if self._q is None:
            self.check_valid()
            self._q = self.gas._speed_of_sigma(self.sigma)
        return self._q

    @property
    def rho(self):
        return self.gas._rho(self.q)

    @property
    def u(self):
        return self.q * np.cos(self.theta)

    @property
    def v(self):
        return self.q * np.sin(self.theta)

    @property
    def mach(self):
        return self.q / np.sqrt(self.gas._c2(self.q))

    def table(self):
        """Columns ``x, y, u, v, q, M, theta, rho``."""
        g = self.grid
        return np.column_stack([g.x, g.y, self.u, self.v, self.q, self.mach, self.theta, self.rho])

    def boundary_velocity(self):
        """Velocity at boundary faces: the far-field value on far-field faces, else the cell value."""
        g = self.grid
        u = self.u[g.face_cell].copy()
        v = self.v[g.face_cell].copy()
        far = g.face_tag == FARFIELD
        q_inf = self.q_inf
        u[far] = q_inf * np.cos(self.theta_inf)
        v[far] = q_inf * np.sin(self.theta_inf)
        return u, v


def _smoothabs(x, delta):
    return np.sqrt(x * x + delta * delta) - delta


def wall_flux(field, lam, eps, config):
    """Neumann datum ``grad(sigma_bar) . n`` on every boundary face (zero off the obstacle).

    The mass flux ``rho q e_theta . n_s`` uses the smooth-surface normal ``n_s``
    and is shared among staircase faces with weight ``|n_s . n_face|``, so the
    total over the staircase matches the integral over the smooth surface.
    """
    g = field.grid
    k = g.face_cell
    q, th = field.q[k], field.theta[k]
    rho = field.gas._rho(q)
    ns = g.surface_normal
    normal = rho * q * (np.cos(th) * ns[:, 0] + np.sin(th) * ns[:, 1])
    weight = np.abs(np.sum(ns * g.face_normal, axis=1))
    if config.bc_sign == "signed":
        out = lam * weight * normal / eps
    else:
        q_inf = field.q_inf
        delta = config.flux_smoothing * float(field.gas._rho(q_inf)) * q_inf
        sign = -1.0 if config.bc_sign == "negative" else 1.0
        out = sign * lam * weight * _smoothabs(normal, delta) / eps
    out[g.face_tag != OBSTACLE] = 0.0
    return out


def _neighbor_values(grid, w, bc):
    """Per-direction neighbour values with ghosts from ``bc``."""
    out = np.empty((4, grid.n_cells))
    for d in range(4):
        k = grid.neighbors[d]
        inner = k >= 0
        vals = np.empty(grid.n_cells)
        vals[inner] = w[k[inner]]
        b = np.nonzero(~inner)[0]
        f = grid.face_of[d, b]
        far = grid.face_tag[f] == FARFIELD
        vals[b] = np.where(far, 2.0 * bc.dirichlet[f] - w[b], w[b] - grid.h * bc.neumann[f])
        out[d] = vals
    return out


def _gradient(grid, w, bc, scheme="centered", theta=None):
    nb = _neighbor_values(grid, w, bc)
    h = grid.h
    if scheme == "centered":
        return (nb[0] - nb[1]) / (2 * h), (nb[2] - nb[3]) / (2 * h)
    cos, sin = np.cos(theta), np.sin(theta)
    gx = np.where(cos >= 0, w - nb[1], nb[0] - w) / h
    gy = np.where(sin >= 0, w - nb[3], nb[2] - w) / h
    return gx, gy


def coefficients(gas, q):
    """``(q'(sigma), (rho q)'(sigma))`` by the chain rule."""
    c2 = gas._c2(q)
    rho = gas._rho(q)
    s2 = gas._sigma2(q)
    return -c2 / (rho * q * s2), (q * q - c2) / (q * s2)


def right_sides(field, lam, eps, config):
    """``(f1, f2, theta_bc, sigma_bc)`` evaluated at ``field``."""
    g = field.grid
    gas = field.gas
    q = field.q
    if np.any(q <= 0):
        raise InvalidStateError("stagnation point in the flow field")
    th_bc = MixedBC.homogeneous(g)
    sg_bc = MixedBC(np.zeros(g.n_faces), wall_flux(field, lam, eps, config))
    theta = field.theta
    tx, ty = _gradient(g, field.theta_bar, th_bc, config.scheme, theta)
    sx, sy = _gradient(g, field.sigma_bar, sg_bc, config.scheme, theta)
    dq, drq = coefficients(gas, q)
    rq = gas._rho(q) * q
    cos, sin = np.cos(theta), np.sin(theta)
    f1 = dq * sin * sx + q * cos * tx - dq * cos * sy + q * sin * ty
    f2 = drq * cos * sx - rq * sin * tx + drq * sin * sy + rq * cos * ty
    if not (np.all(np.isfinite(f1)) and np.all(np.isfinite(f2))):
        raise InvalidStateError("non-finite coefficients")
    return f1, f2, th_bc, sg_bc


def gamma_map(field, lam, eps, config=None):
    """One application of the solution map ``Gamma_lam``."""
    config = config or SolveConfig()
    f1, f2, th_bc, sg_bc = right_sides(field, lam, eps, config)
    op = poisson_operator(field.grid)
    theta_bar = op.solve(-lam * f1 / eps + op.boundary_rhs(th_bc))
    sigma_bar = op.solve(-lam * f2 / eps + op.boundary_rhs(sg_bc))
    return field.with_values(theta_bar, sigma_bar)


def residual_vector(field, lam, eps, config=None):
    """Stacked residual ``eps Lap_h x - lam f(x)`` of both equations, unscaled."""
    config = config or SolveConfig()
    f1, f2, th_bc, sg_bc = right_sides(field, lam, eps, config)
    op = poisson_operator(field.grid)
    r1 = eps * op.apply_laplacian(field.theta_bar, th_bc) - lam * f1
    r2 = eps * op.apply_laplacian(field.sigma_bar, sg_bc) - lam * f2
    return np.concatenate([r1, r2])


def discrete_residual(field, lam, eps, config=None):
    """Max-norm of ``eps Lap_h x - lam f(x)`` scaled by the diagonal of ``eps Lap_h``."""
    r = residual_vector(field, lam, eps, config)
    scale = eps * poisson_operator(field.grid).diagonal
    n = field.grid.n_cells
    return float(max(np.max(np.abs(r[:n]) / scale), np.max(np.abs(r[n:]) / scale)))


def fixed_point_defect(field, lam, eps, config=None):
    """``max |Gamma(x) - x|``."""
    return float(np.max(np.abs(gamma_map(field, lam, eps, config).vector - field.vector)))


def _colouring(grid):
    # no two cells of one colour share a 5-point stencil
    return (grid.ci + 3 * grid.cj) % 7


def residual_jacobian(field, lam, eps, config, r0=None, step=1e-7):
    """Sparse finite-difference Jacobian of :func:`residual_vector` by stencil colouring."""
    g = field.grid
    n = g.n_cells
    x = field.vector
    if r0 is None:
        r0 = residual_vector(field, lam, eps, config)
    colour = _colouring(g)
    stencil = [np.arange(n)] + [g.neighbors[d] for d in range(4)]
    rows, cols, vals = [], [], []
    for var in range(2):
        for c in range(7):
            sel = np.nonzero(colour == c)[0]
            if sel.size == 0:
                continue
            xp = x.copy()
            xp[var * n + sel] += step
            dr = (residual_vector(_split(field, xp), lam, eps, config) - r0) / step
            for nb in stencil:
                tgt = nb[sel]
                ok = tgt >= 0
                for eq in range(2):
                    rr = eq * n + tgt[ok]
                    rows.append(rr)
                    cols.append(var * n + sel[ok])
                    vals.append(dr[rr])
    return sp.csc_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(2 * n, 2 * n))


@dataclass
class SolveReport:
    converged: bool
    iterations: int
    defect: float
    residual: float
    lambda_iterations: list = field(default_factory=list)
    history: list = field(default_factory=list)
    step_size: float = 0.5  # final damping (picard) or pseudo-time step (ptc)
    elapsed: float = 0.0
    message: str = ""
    method: str = "ptc"

    def to_dict(self):
        d = asdict(self)
        d["history"] = [float(x) for x in self.history]
        return d


class _Anderson:
    """Damped Picard iteration with Anderson mixing over the last ``memory`` steps."""

    def __init__(self, memory, omega):
        self.memory = memory
        self.omega = omega
        self.reset()

    def reset(self):
        self.dx, self.df = [], []
        self.x_prev = self.f_prev = None

    def step(self, x, f):
        if self.x_prev is not None and self.memory > 0:
            self.dx.append(x - self.x_prev)
            self.df.append(f - self.f_prev)
            if len(self.dx) > self.memory:
                self.dx.pop(0)
                self.df.pop(0)
        self.x_prev, self.f_prev = x, f
        new = x + self.omega * f
        if self.dx:
            DF = np.column_stack(self.df)
            DX = np.column_stack(self.dx)
            coef = np.linalg.lstsq(DF, f, rcond=1e-12)[0]
            new = new - (DX + self.omega * DF) @ coef
        return new


def _split(field, x):
    n = field.grid.n_cells
    return field.with_values(x[:n], x[n:])


class _Budget:
    def __init__(self, limit):
        self.limit = limit
        self.used = 0

    def take(self):
        self.used += 1
        return self.used <= self.limit


def _picard(field, x, lam, eps, config, budget, history, callback, carry):
    """Damped, Anderson-accelerated iteration of ``Gamma``.  Returns ``(x, defect, converged, omega)``."""
    acc = _Anderson(config.anderson_memory, carry)
    best = (np.inf, x)
    lowest = np.inf
    x_good = x
    it = 0
    while budget.take():
        try:
            f = gamma_map(_split(field, x), lam, eps, config).vector - x
        except InvalidStateError:
            if x is x_good:
                raise
            # left the physical range: back off toward the last good iterate
            x = x_good + 0.25 * (x - x_good)
            acc.omega = max(acc.omega * 0.5, 1e-4)
            acc.reset()
            continue
        x_good = x
        defect = float(np.max(np.abs(f)))
        history.append(defect)
        if callback is not None:
            callback(lam, it, defect)
        it += 1
        if defect < best[0]:
            best = (defect, x)
        if defect < config.tol:
            return x, defect, True, acc.omega
        if defect > 10.0 * lowest:
            acc.omega = max(acc.omega * 0.5, 1e-4)
            acc.reset()
            x = best[1]
            lowest = best[0]
            continue
        lowest = min(lowest, defect)
        x = acc.step(x, f)
    return best[1], best[0], False, acc.omega


def _ptc(field, x, lam, eps, config, budget, history, callback, carry):
    """Backward-Euler pseudo-time stepping of ``x_t = R(x) / D`` with growing steps.

    ``D`` is the diagonal of ``eps Lap_h``; each step solves
    ``(I / dt - D^-1 J) dx = R / D`` with the coloured finite-difference Jacobian.
    As ``dt`` grows the step becomes a Newton step.  ``carry`` is the step size
    reached at the previous continuation level.
    """
    n2 = x.size
    scale = np.tile(eps * poisson_operator(field.grid).diagonal, 2)
    eye = sp.identity(n2, format="csc")
    dinv = sp.diags(1.0 / scale)
    dt = carry
    cur = _split(field, x)
    r = residual_vector(cur, lam, eps, config)
    norm = float(np.max(np.abs(r / scale)))
    best = (np.inf, x)
    it = 0
    while True:
        defect = fixed_point_defect(cur, lam, eps, config)
        history.append(defect)
        if callback is not None:
            callback(lam, it, defect)
        if defect < best[0]:
            best = (defect, x)
        if defect < config.tol:
            return x, defect, True, dt
        if not budget.take():
            break
        it += 1
        jac = residual_jacobian(cur, lam, eps, config, r0=r)
        dx = splu((eye / dt - dinv @ jac).tocsc()).solve(r / scale)
        while True:
            trial = _split(field, x + dx)
            try:
                r_new = residual_vector(trial, lam, eps, config)
                break
            except InvalidStateError:
                # the step left the physical range
                dt *= 0.25
                if dt < 1e-12:
                    return best[1], best[0], False, dt
                dx = splu((eye / dt - dinv @ jac).tocsc()).solve(r / scale)
        norm_new = float(np.max(np.abs(r_new / scale)))
        dt = min(dt * 1.5, 1e12) if norm_new < 3.0 * norm else dt * 0.5
        x, cur, r, norm = x + dx, trial, r_new, norm_new
    return best[1], best[0], False, dt


def fixed_point_solve(config, grid, initial=None, callback=None, lam=1.0):
    """Continuation in ``lam`` from 0 to ``lam`` with a nonlinear solve at each step.

    Each step is converged until the fixed-point defect ``max |Gamma(x) - x|`` drops
    below ``config.tol``.  Returns ``(field, report)``; a non-converged solve returns
    the best iterate with ``report.converged = False``.
    """
    start = time.perf_counter()
    gas = config.gas()
    eps = config.epsilon
    q_inf = config.q_inf_ratio * gas.q_cr
    field = initial if initial is not None else FlowField.uniform(grid, gas, q_inf, config.theta_inf)
    history = []
    lam_iters = []

    def report(conv, fld, lam_, defect, total, extra, msg):
        res = discrete_residual(fld, lam_, eps, config)
        return SolveReport(conv, total, defect, res, lam_iters, history, extra, time.perf_counter() - start, msg,
                           config.method)

    # a state that is already a fixed point needs no continuation
    x = field.vector
    d0 = fixed_point_defect(field, lam, eps, config)
    history.append(d0)
    if d0 < config.tol:
        lam_iters.append(1)
        return field, report(True, field, lam, d0, 1, config.omega, "initial state is a fixed point")

    if config.method == "ptc":
        inner, extra = _ptc, config.dt0
    else:
        inner, extra = _picard, config.omega
    budget = _Budget(config.max_iter)
    defect = d0
    for lam_k in config.lambda_schedule(lam):
        used = budget.used
        try:
            x, defect, converged, extra = inner(field, x, lam_k, eps, config, budget, history, callback, extra)
        except InvalidStateError as exc:
            lam_iters.append(budget.used - used)
            fld = _split(field, x)
            msg = f"invalid state at lambda={lam_k:.3g}: {exc}"
            return fld, SolveReport(False, 1 + budget.used, float("nan"), float("nan"), lam_iters, history, extra,
                                    time.perf_counter() - start, msg, config.method)
        if config.method == "picard":
            extra = min(config.omega, 2.0 * extra)
        lam_iters.append(budget.used - used)
        if not converged:
            fld = _split(field, x)
            msg = f"no convergence at lambda={lam_k:.3g} after {budget.used} iterations"
            return fld, report(False, fld, lam_k, defect, 1 + budget.used, extra, msg)
    fld = _split(field, x)
    return fld, report(True, fld, lam, defect, 1 + budget.used, extra, "converged")


@dataclass
class SweepEntry:
    epsilon: float
    field: object
    report: SolveReport
    dissipation: float = float("nan")
    closure_error: float = float("nan")
    min_speed: float = float("nan")
    wall_flux: float = float("nan")
    l2_change: float = float("nan")
    error: str = ""


def epsilon_sweep(config, grid, epsilons, delta=0.1):
    """Warm-started solves for a descending list of viscosities with compactness monitors."""
    from .diagnostics import dissipation_integral, obstacle_mass_flux, subdomain_mask

    eps_list = [float(e) for e in epsilons]
    if any(e <= 0 for e in eps_list) or any(a <= b for a, b in zip(eps_list, eps_list[1:])):
        raise ConfigError("epsilon list must be positive and strictly descending")
    entries = []
    prev = None
    inner = subdomain_mask(grid, delta)
    for eps in eps_list:
        cfg = replace(config, epsilon=eps)
        try:
            if prev is None:
                fld, rep = fixed_point_solve(cfg, grid)
            else:
                # warm start: only the full problem is solved
                fld, rep = fixed_point_solve(replace(cfg, lambda_steps=1), grid, initial=prev)
        except Exception as exc:  # recorded, the sweep continues
            entries.append(SweepEntry(eps, None, None, error=f"{type(exc).__name__}: {exc}"))
            continue
        dis = dissipation_integral(fld, eps)
        entry = SweepEntry(eps, fld, rep, dis.I2, dis.closure_error, float(fld.q[inner].min()) if inner.any() else float("nan"),
                           obstacle_mass_flux(fld))
        if prev is not None:
            du = (fld.u - prev.u)[inner]
            dv = (fld.v - prev.v)[inner]
            entry.l2_change = float(np.sqrt(np.sum(du * du + dv * dv)) * grid.h)
        entries.append(entry)
        if rep.converged:
            prev = fld
    return entries


class TransonicFlowSolver(BaseEstimator):
    """Estimator wrapper: ``fit(grid)`` solves the viscous problem, ``predict(points)`` returns ``(u, v)``.

    Parameters mirror :class:`SolveConfig`.
    """

    def __init__(self, gamma=1.4, q_inf_ratio=0.5, theta_inf=0.0, epsilon=0.1, lambda_steps=10, omega=0.5,
                 tol=1e-8, max_iter=5000, bc_sign="signed", scheme="centered", anderson_memory=8,
                 flux_smoothing=1e-8, method="ptc", dt0=0.1):
        self.gamma = gamma
        self.q_inf_ratio = q_inf_ratio
        self.theta_inf = theta_inf
        self.epsilon = epsilon
        self.lambda_steps = lambda_steps
        self.omega = omega
        self.tol = tol
        self.max_iter = max_iter
        self.bc_sign = bc_sign
        self.scheme = scheme
        self.anderson_memory = anderson_memory
        self.flux_smoothing = flux_smoothing
        self.method = method
        self.dt0 = dt0

    def config(self):
        return SolveConfig(**self.get_params())

    def fit(self, grid, y=None, initial=None):
        self.field_, self.report_ = fixed_point_solve(self.config(), grid, initial=initial)
        self.converged_ = self.report_.converged
        self.n_iter_ = self.report_.iterations
        self._tree = cKDTree(np.column_stack([grid.x, grid.y]))
        return self

    def predict(self, points):
        """Velocity ``(u, v)`` of the nearest fluid cell for each row of ``points``."""
        check_is_fitted(self, "field_")
        pts = check_array(points, ensure_min_features=2)
        if pts.shape[1] != 2:
            raise ValueError("points must have two columns (x, y)")
        _, k = self._tree.query(pts)
        return np.column_stack([self.field_.u[k], self.field_.v[k]])


__all__ = [
    "FlowField",
    "SolveConfig",
    "SolveReport",
    "TransonicFlowSolver",
    "coefficients",
    "discrete_residual",
    "fixed_point_defect",
    "residual_jacobian",
    "residual_vector",
    "epsilon_sweep",
    "fixed_point_solve",
    "gamma_map",
    "right_sides",
    "wall_flux",
]
