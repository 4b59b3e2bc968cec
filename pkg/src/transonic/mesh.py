"""Uniform cell-centred grids for a channel with a bottom bump or a box with an elliptical hole.

A plain ``box`` kind (no obstacle, far field all round) is also available for
verifying the elliptic kernel.

Boundaries are represented by cell faces.  Each boundary face belongs to a fluid
cell, carries a unit normal pointing into the flow and is tagged as obstacle
(``1``) or far field (``2``).  Far-field faces are also marked horizontal or
vertical.
"""

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .exceptions import ConstructionError

# direction index -> outward offset of the neighbour
DIRECTIONS = ((1, 0), (-1, 0), (0, 1), (0, -1))
EAST, WEST, NORTH, SOUTH = range(4)

OBSTACLE, FARFIELD = 1, 2


@dataclass(frozen=True)
class DomainSpec:
    kind: str = "channel"
    length: float = 3.0
    height: float = 1.0
    bump_center: float = 1.5
    bump_chord: float = 1.0
    bump_height: float = 0.02
    hole_center: tuple = (1.5, 0.5)
    hole_axes: tuple = (0.3, 0.15)

    def __post_init__(self):
        if self.kind not in ("channel", "hole", "box"):
            raise ConstructionError(f"unknown domain kind {self.kind!r}")
        if not (self.length > 0 and self.height > 0):
            raise ConstructionError("box extents must be positive")
        if self.kind == "channel":
            half = 0.5 * self.bump_chord
            if self.bump_height < 0 or self.bump_chord <= 0:
                raise ConstructionError("bump chord must be positive and height nonnegative")
            if self.bump_center - half < 0 or self.bump_center + half > self.length:
                raise ConstructionError("bump must lie on the bottom wall")
            if self.bump_height >= self.height:
                raise ConstructionError("bump blocks the channel")
        elif self.kind == "hole":
            (cx, cy), (a, b) = self.hole_center, self.hole_axes
            if a <= 0 or b <= 0:
                raise ConstructionError("hole semi-axes must be positive")
            if cx - a <= 0 or cx + a >= self.length or cy - b <= 0 or cy + b >= self.height:
                raise ConstructionError("hole must lie strictly inside the box")

    def solid(self, x, y):
        """True where ``(x, y)`` lies inside the obstacle."""
        x, y = np.asarray(x, float), np.asarray(y, float)
        if self.kind == "channel":
            return y < self.bump_profile(x)
        if self.kind == "box":
            return np.zeros(np.broadcast(x, y).shape, dtype=bool)
        (cx, cy), (a, b) = self.hole_center, self.hole_axes
        return ((x - cx) / a) ** 2 + ((y - cy) / b) ** 2 < 1.0

    def bump_profile(self, x):
        """Circular-arc bump height above the bottom wall (zero off the chord)."""
        x = np.asarray(x, float)
        t, half = self.bump_height, 0.5 * self.bump_chord
        if t == 0:
            return np.zeros_like(x)
        radius = (half**2 + t**2) / (2.0 * t)
        dx = x - self.bump_center
        inside = np.abs(dx) < half
        arc = t - radius + np.sqrt(np.maximum(radius**2 - dx**2, 0.0))
        return np.where(inside, arc, 0.0)

    def bump_slope(self, x):
        x = np.asarray(x, float)
        t, half = self.bump_height, 0.5 * self.bump_chord
        if t == 0:
            return np.zeros_like(x)
        radius = (half**2 + t**2) / (2.0 * t)
        dx = x - self.bump_center
        inside = np.abs(dx) < half
        return np.where(inside, -dx / np.sqrt(np.maximum(radius**2 - dx**2, 1e-300)), 0.0)

    def surface_normal(self, x, y):
        """Unit normal of the smooth obstacle surface near ``(x, y)``, pointing into the flow."""
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        if self.kind == "channel":
            s = self.bump_slope(x)
            n = np.stack([-s, np.ones_like(s)], axis=-1)
        elif self.kind == "hole":
            (cx, cy), (a, b) = self.hole_center, self.hole_axes
            n = np.stack([(x - cx) / a**2, (y - cy) / b**2], axis=-1)
        else:
            raise ConstructionError("a box has no obstacle")
        return n / np.linalg.norm(n, axis=-1, keepdims=True)

    def feature_size(self):
        """Largest admissible grid spacing for this obstacle."""
        if self.kind == "channel" and self.bump_height > 0:
            return 0.25 * self.bump_chord
        if self.kind == "hole":
            return 0.5 * min(self.hole_axes)
        return np.inf

    @property
    def has_obstacle(self):
        return self.kind == "hole" or (self.kind == "channel" and self.bump_height > 0)


class Grid:
    """Staircase discretization of a :class:`DomainSpec` with spacing ``h``."""

    def __init__(self, spec, h):
        self.spec = spec
        self.h = float(h)
        nx, ny = spec.length / h, spec.height / h
        if not (h > 0 and abs(nx - round(nx)) < 1e-9 * nx and abs(ny - round(ny)) < 1e-9 * ny):
            raise ConstructionError("h must divide the box extents")
        self.nx, self.ny = int(round(nx)), int(round(ny))
        if self.nx < 2 or self.ny < 2:
            raise ConstructionError("grid needs at least 2x2 cells")
        self.xc = (np.arange(self.nx) + 0.5) * h
        self.yc = (np.arange(self.ny) + 0.5) * h
        X, Y = np.meshgrid(self.xc, self.yc, indexing="ij")
        fluid = ~spec.solid(X, Y)
        if h > spec.feature_size():
            raise ConstructionError("obstacle is not resolved at this spacing")
        self.fluid = _prune(fluid)
        if not self.fluid.any():
            raise ConstructionError("no fluid cells")

        self.ci, self.cj = np.nonzero(self.fluid)
        self.n_cells = len(self.ci)
        self.index = np.full((self.nx, self.ny), -1, dtype=int)
        self.index[self.ci, self.cj] = np.arange(self.n_cells)
        self.x = self.xc[self.ci]
        self.y = self.yc[self.cj]
        self._build_faces()

    def _build_faces(self):
        nbr = np.full((4, self.n_cells), -1, dtype=int)
        cells, dirs, tags, horiz = [], [], [], []
        for d, (di, dj) in enumerate(DIRECTIONS):
            ni, nj = self.ci + di, self.cj + dj
            in_box = (ni >= 0) & (ni < self.nx) & (nj >= 0) & (nj < self.ny)
            k = np.full(self.n_cells, -1, dtype=int)
            k[in_box] = self.index[ni[in_box], nj[in_box]]
            nbr[d] = k
            on_face = k < 0
            cells.append(np.nonzero(on_face)[0])
            dirs.append(np.full(on_face.sum(), d))
            # obstacle faces: solid neighbour, or the bottom wall of the channel
            if self.spec.kind == "channel":
                obstacle = in_box[on_face] | (d == SOUTH)
            else:
                obstacle = in_box[on_face]
            tags.append(np.where(obstacle, OBSTACLE, FARFIELD))
            horiz.append(np.full(on_face.sum(), d in (NORTH, SOUTH)))
        self.neighbors = nbr
        self.face_cell = np.concatenate(cells)
        self.face_dir = np.concatenate(dirs)
        self.face_tag = np.concatenate(tags)
        self.face_horizontal = np.concatenate(horiz)
        offs = np.asarray(DIRECTIONS, dtype=float)[self.face_dir]
        self.face_normal = -offs  # into the flow
        self.face_mid = np.column_stack([self.x[self.face_cell], self.y[self.face_cell]]) + 0.5 * self.h * offs
        self.n_faces = len(self.face_cell)
        self.face_of = np.full((4, self.n_cells), -1, dtype=int)
        self.face_of[self.face_dir, self.face_cell] = np.arange(self.n_faces)
        # smooth-surface normals on obstacle faces; the staircase normal elsewhere
        self.surface_normal = self.face_normal.copy()
        obs = self.face_tag == OBSTACLE
        if obs.any():
            self.surface_normal[obs] = self.spec.surface_normal(*self.face_mid[obs].T)

    def __repr__(self):
        return f"Grid(kind={self.spec.kind!r}, h={self.h}, cells={self.n_cells}, faces={self.n_faces})"

    def faces(self, which):
        """Indices of boundary faces with tag ``which`` (1 obstacle, 2 far field)."""
        return np.nonzero(self.face_tag == _tag(which))[0]

    def fluid_neighbor_count(self):
        return (self.neighbors >= 0).sum(axis=0)

    def boundary_is_closed_curve(self, which=OBSTACLE):
        """True when every vertex touched by the selected faces has exactly two of them."""
        sel = self.faces(which)
        if len(sel) == 0:
            return False
        h = self.h
        mid = self.face_mid[sel]
        horiz = self.face_horizontal[sel]
        half = np.where(horiz[:, None], [0.5 * h, 0.0], [0.0, 0.5 * h])
        ends = np.concatenate([mid - half, mid + half])
        keys = np.round(ends / h * 2).astype(np.int64)
        _, counts = np.unique(keys, axis=0, return_counts=True)
        return bool(np.all(counts == 2))

    def distance_to(self, which=OBSTACLE):
        """Distance from each cell centre to the nearest selected face midpoint."""
        sel = self.faces(which)
        if len(sel) == 0:
            return np.full(self.n_cells, np.inf)
        tree = cKDTree(self.face_mid[sel])
        d, _ = tree.query(np.column_stack([self.x, self.y]))
        return d

    def to_array(self, values, fill=np.nan):
        """Scatter per-cell values to an ``(nx, ny)`` array."""
        out = np.full((self.nx, self.ny), fill, dtype=float)
        out[self.ci, self.cj] = values
        return out

    def mask_rows(self):
        """Rows ``(i, j, x, y, fluid)`` for a CSV mask dump."""
        I, J = np.meshgrid(np.arange(self.nx), np.arange(self.ny), indexing="ij")
        X, Y = np.meshgrid(self.xc, self.yc, indexing="ij")
        return np.column_stack([I.ravel(), J.ravel(), X.ravel(), Y.ravel(), self.fluid.ravel().astype(int)])


def _tag(which):
    if which in (1, "1", "obstacle"):
        return OBSTACLE
    if which in (2, "2", "farfield"):
        return FARFIELD
    raise ValueError(f"unknown boundary {which!r}")


def _prune(fluid):
    """Turn fluid cells with fewer than two fluid neighbours into solid, repeatedly."""
    fluid = fluid.copy()
    while True:
        p = np.pad(fluid, 1).astype(int)
        count = p[2:, 1:-1] + p[:-2, 1:-1] + p[1:-1, 2:] + p[1:-1, :-2]
        weak = fluid & (count < 2)
        if not weak.any():
            return fluid
        fluid &= ~weak


def build_grid(spec, h):
    return Grid(spec, h)


def boundary_integral(grid, f, which):
    """Midpoint-rule line integral of per-face values over the selected boundary."""
    sel = grid.faces(which)
    f = np.broadcast_to(np.asarray(f, dtype=float), sel.shape)
    return float(np.sum(f) * grid.h)


def face_values(grid, values, boundary=None):
    """Values at every boundary face: the owning cell's value unless ``boundary`` is given."""
    if boundary is None:
        return np.asarray(values)[grid.face_cell]
    return np.asarray(boundary, dtype=float)


def divergence(grid, fx, fy, bfx=None, bfy=None):
    """Flux-form divergence per cell of a cell-centred vector field.

    Interior face values are arithmetic means; boundary face values default to
    the owning cell's value.  The cell sums telescope, so
    ``sum(div) * h^2`` equals :func:`outward_flux` exactly.
    """
    fx, fy = np.asarray(fx, float), np.asarray(fy, float)
    bfx = face_values(grid, fx, bfx)
    bfy = face_values(grid, fy, bfy)
    div = np.zeros(grid.n_cells)
    for d, (di, dj) in enumerate(DIRECTIONS):
        f = fx if di else fy
        bf = bfx if di else bfy
        sign = di + dj
        k = grid.neighbors[d]
        inner = k >= 0
        face = np.empty(grid.n_cells)
        face[inner] = 0.5 * (f[inner] + f[k[inner]])
        b = ~inner
        face[b] = bf[grid.face_of[d, b]]
        div += sign * face
    return div / grid.h


def outward_flux(grid, bfx, bfy, which=None):
    """``sum F . n_out * h`` over boundary faces (all faces when ``which`` is None)."""
    flux = -(bfx * grid.face_normal[:, 0] + bfy * grid.face_normal[:, 1]) * grid.h
    if which is None:
        return float(flux.sum())
    return float(flux[grid.faces(which)].sum())
