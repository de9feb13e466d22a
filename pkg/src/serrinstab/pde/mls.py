"""Weighted least-squares quadratic fits near the boundary.

Used for ghost values outside the domain and for normal derivatives.  Data
are interior nodal values together with boundary points carrying ``u = 0``.
The fit reproduces quadratics exactly.
"""

from __future__ import annotations

import numpy as np
from scipy.spatial import cKDTree

_K = 64


def _wendland(q):
    q = np.clip(q, 0.0, 1.0)
    return (1 - q) ** 4 * (4 * q + 1)


class QuadraticMLS:
    """Moving least-squares quadratic over scattered data.

    ``fit(queries)`` returns coefficients ``(c, gx, gy, hxx, hxy, hyy)`` of
    ``c + g . dx + (hxx dx^2 + 2 hxy dx dy + hyy dy^2)/2`` about each query,
    plus the number of data points that carried weight.
    """

    def __init__(self, points, values, radius: float):
        self.points = np.asarray(points, dtype=float)
        self.values = np.asarray(values, dtype=float)
        self.radius = float(radius)
        self.tree = cKDTree(self.points)

    def fit(self, queries):
        q = np.atleast_2d(np.asarray(queries, dtype=float))
        R = self.radius
        k = min(_K, len(self.points))
        dist, idx = self.tree.query(q, k=k, distance_upper_bound=R)
        valid = np.isfinite(dist)
        idx = np.where(valid, idx, 0)
        w = np.where(valid, _wendland(dist / R), 0.0)
        d = (self.points[idx] - q[:, None, :]) / R
        dx, dy = d[..., 0], d[..., 1]
        B = np.stack([np.ones_like(dx), dx, dy, 0.5 * dx * dx, dx * dy, 0.5 * dy * dy], axis=-1)
        BW = B * w[..., None]
        M = np.einsum("nki,nkj->nij", BW, B)
        rhs = np.einsum("nki,nk->ni", BW, self.values[idx])
        M += 1e-13 * np.trace(M, axis1=1, axis2=2)[:, None, None] * np.eye(6)
        coef = np.linalg.solve(M, rhs[..., None])[..., 0]
        coef[:, 1:3] /= R
        coef[:, 3:] /= R * R
        count = (w > 0).sum(axis=1)
        return coef, count

    def value(self, queries):
        coef, _ = self.fit(queries)
        return coef[:, 0]
