"""Mixed Dirichlet/Neumann Poisson problems ``eps * Lap(w) = f`` on staircase grids.

The 5-point Laplacian uses ghost values across boundary faces:
``w_ghost = 2 g - w_P`` for a Dirichlet value ``g`` at the face and
``w_ghost = w_P - h g`` for a Neumann datum ``grad(w) . n = g`` with ``n`` into
the flow.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import cg, splu

from .exceptions import IterationError, SingularSystemError
from .mesh import FARFIELD, OBSTACLE


@dataclass
class MixedBC:
    """Per-face boundary data: ``dirichlet`` on far-field faces, ``neumann`` on obstacle faces.

    Both arrays have one entry per boundary face of the grid; entries on faces of
    the other kind are ignored.
    """

    dirichlet: np.ndarray
    neumann: np.ndarray

    @classmethod
    def homogeneous(cls, grid):
        return cls(np.zeros(grid.n_faces), np.zeros(grid.n_faces))

    @classmethod
    def from_values(cls, grid, dirichlet=0.0, neumann=0.0):
        d = np.broadcast_to(np.asarray(dirichlet, float), (grid.n_faces,)).copy()
        n = np.broadcast_to(np.asarray(neumann, float), (grid.n_faces,)).copy()
        return cls(d, n)


class PoissonOperator:
    """Assembled ``-Lap_h`` with Dirichlet ghosts folded in; factorized once and reused."""

    def __init__(self, grid):
        if not np.any(grid.face_tag == FARFIELD):
            raise SingularSystemError("far-field boundary is empty; the Neumann problem is singular")
        self.grid = grid
        h2 = grid.h**2
        n = grid.n_cells
        rows, cols, vals = [], [], []
        diag = np.zeros(n)
        for d in range(4):
            k = grid.neighbors[d]
            inner = k >= 0
            idx = np.nonzero(inner)[0]
            rows.append(idx)
            cols.append(k[inner])
            vals.append(np.full(len(idx), -1.0 / h2))
            diag[inner] += 1.0 / h2
        dface = grid.face_tag == FARFIELD
        np.add.at(diag, grid.face_cell[dface], 2.0 / h2)
        rows.append(np.arange(n))
        cols.append(np.arange(n))
        vals.append(diag)
        self.matrix = sp.csc_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n))
        self.diagonal = diag
        self._lu = None

    def boundary_rhs(self, bc):
        """Contribution of boundary data to the right side of ``-Lap_h w = ...``."""
        g = self.grid
        out = np.zeros(g.n_cells)
        dface = g.face_tag == FARFIELD
        nface = g.face_tag == OBSTACLE
        np.add.at(out, g.face_cell[dface], 2.0 * np.asarray(bc.dirichlet)[dface] / g.h**2)
        np.add.at(out, g.face_cell[nface], -np.asarray(bc.neumann)[nface] / g.h)
        return out

    def apply_laplacian(self, w, bc):
        """``Lap_h w`` including boundary ghosts."""
        return -(self.matrix @ w) + self.boundary_rhs(bc)

    def solve(self, rhs, method="direct", rtol=1e-10, maxiter=None):
        if method == "direct":
            if self._lu is None:
                self._lu = splu(self.matrix)
            return self._lu.solve(rhs)
        if method == "cg":
            m = sp.diags(1.0 / self.diagonal)
            maxiter = maxiter or 10 * self.grid.n_cells
            history = []
            w, info = cg(self.matrix, rhs, rtol=rtol, atol=0.0, M=m, maxiter=maxiter,
                         callback=lambda xk: history.append(0))
            if info != 0:
                res = np.linalg.norm(rhs - self.matrix @ w) / max(np.linalg.norm(rhs), 1e-300)
                raise IterationError(f"conjugate gradients stopped after {len(history)} iterations", residual=res)
            return w
        raise ValueError(f"unknown method {method!r}")


def poisson_operator(grid):
    """The :class:`PoissonOperator` of ``grid``, built on first use."""
    op = grid.__dict__.get("_poisson")
    if op is None:
        op = PoissonOperator(grid)
        grid.__dict__["_poisson"] = op
    return op


def solve_mixed_poisson(grid, f, bc, eps, method="direct", rtol=1e-10):
    """Solve ``eps * Lap_h w = f`` with mixed boundary data ``bc``."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    op = poisson_operator(grid)
    rhs = -np.asarray(f, dtype=float) / eps + op.boundary_rhs(bc)
    return op.solve(rhs, method=method, rtol=rtol)
