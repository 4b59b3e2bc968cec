"""Cumulative Gauss-Legendre panel integration for tabulated 1-D antiderivatives."""

import numpy as np


class PanelIntegral:
    """Antiderivative ``F(x) = int_{nodes[0]}^x f(s) ds`` on a fixed panel table.

    Each panel ``[nodes[k], nodes[k+1]]`` is integrated once with an ``order``-point
    Gauss-Legendre rule; evaluation at an arbitrary ``x`` adds a Gauss-Legendre
    integral over the partial panel. ``f`` must accept ndarrays of any shape.
    Integrable endpoint singularities are handled by clustering the nodes.
    """

    def __init__(self, func, nodes, order=10):
        nodes = np.asarray(nodes, dtype=float)
        if nodes.ndim != 1 or nodes.size < 2 or np.any(np.diff(nodes) <= 0):
            raise ValueError("nodes must be a strictly increasing 1-D array")
        self.func = func
        self.nodes = nodes
        t, w = np.polynomial.legendre.leggauss(order)
        self._t = 0.5 * (t + 1.0)
        self._w = 0.5 * w
        a, b = nodes[:-1], nodes[1:]
        pts = a[:, None] + (b - a)[:, None] * self._t[None, :]
        panel = (b - a) * (func(pts) @ self._w)
        self.cumulative = np.concatenate([[0.0], np.cumsum(panel)])

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        k = np.clip(np.searchsorted(self.nodes, x, side="right") - 1, 0, self.nodes.size - 2)
        a = self.nodes[k]
        width = x - a
        pts = a[..., None] + width[..., None] * self._t
        return self.cumulative[k] + width * (self.func(pts) @ self._w)
