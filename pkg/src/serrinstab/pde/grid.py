"""Cut-cell grids and the Shortley-Weller Laplacian."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .. import geometry as geo
from ..errors import ValidationError
from ..geometry import DomainSpec

__all__ = ["Grid", "discretize", "NEIGHBOURS"]

# +x, -x, +y, -y
NEIGHBOURS = np.array([[1, 0], [-1, 0], [0, 1], [0, -1]])
_MARGIN = 4
_BISECT = 60


@dataclass(frozen=True, eq=False)
class Grid:
    """Uniform grid fitted to a domain.

    Nodes are ``origin + h (i, j)``.  A node is interior when it lies
    strictly inside the domain.  For every interior node ``cut[k, d]`` is
    the fraction of ``h`` to the neighbour in direction ``NEIGHBOURS[d]``
    or to the boundary crossing on that arm, whichever is closer; a value
    of 1 means the neighbour itself is interior.
    """

    domain: DomainSpec
    h: float
    origin: np.ndarray
    shape: tuple[int, int]
    inside: np.ndarray
    index: np.ndarray
    ij: np.ndarray
    cut: np.ndarray

    @property
    def n(self) -> int:
        return len(self.ij)

    @cached_property
    def points(self) -> np.ndarray:
        return self.origin + self.h * self.ij

    @cached_property
    def bbox(self) -> tuple[float, float, float, float]:
        x0, y0 = self.origin
        return (x0, y0, x0 + self.h * (self.shape[0] - 1), y0 + self.h * (self.shape[1] - 1))

    def node(self, i, j):
        return self.origin + self.h * np.stack([np.asarray(i), np.asarray(j)], axis=-1)

    @cached_property
    def node_sd(self) -> np.ndarray:
        """Signed distance of each interior node (positive)."""
        return geo.signed_distance(self.domain, self.points)

    @cached_property
    def crossings(self) -> np.ndarray:
        """Boundary points where grid arms leave the domain."""
        k, d = np.nonzero(self.cut < 1.0)
        return self.points[k] + self.h * self.cut[k, d, None] * NEIGHBOURS[d]

    @cached_property
    def laplacian(self) -> sp.csc_matrix:
        """``-Delta`` with homogeneous Dirichlet data on the cut points."""
        n, h = self.n, self.h
        rows, cols, vals = [], [], []
        diag = np.zeros(n)
        for axis in range(2):
            sp_plus = self.cut[:, 2 * axis] * h
            sp_minus = self.cut[:, 2 * axis + 1] * h
            diag += 2.0 / (sp_plus * sp_minus)
            for d, s_near, s_far in ((2 * axis, sp_plus, sp_minus), (2 * axis + 1, sp_minus, sp_plus)):
                nb = self._neighbour_index(d)
                ok = nb >= 0
                rows.append(np.nonzero(ok)[0])
                cols.append(nb[ok])
                vals.append(-2.0 / (s_near[ok] * (s_near[ok] + s_far[ok])))
        rows.append(np.arange(n))
        cols.append(np.arange(n))
        vals.append(diag)
        A = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                          shape=(n, n))
        return A.tocsc()

    def _neighbour_index(self, d: int) -> np.ndarray:
        i = self.ij[:, 0] + NEIGHBOURS[d, 0]
        j = self.ij[:, 1] + NEIGHBOURS[d, 1]
        return np.where(self.cut[:, d] >= 1.0, self.index[i, j], -1)

    @cached_property
    def lu(self):
        return splu(self.laplacian)

    def solve(self, rhs) -> np.ndarray:
        """Solve ``-Delta u = rhs`` with ``u = 0`` on the boundary."""
        return self.lu.solve(np.asarray(rhs, dtype=float))

    @cached_property
    def eigenpair(self) -> tuple[float, np.ndarray]:
        """Principal eigenpair of the discrete ``-Delta``, eigenvector max-normalised."""
        from .solver import inverse_iteration

        return inverse_iteration(self)

    @property
    def lambda1(self) -> float:
        return self.eigenpair[0]

    def to_full(self, values, fill: float = 0.0) -> np.ndarray:
        out = np.full(self.shape, fill, dtype=float)
        out[self.ij[:, 0], self.ij[:, 1]] = values
        return out


def discretize(domain: DomainSpec, h: float) -> Grid:
    """Fit a grid of spacing ``h`` to the domain.

    The grid is aligned so that the domain's centre is a node.  Requires
    ``h <= r_Omega / 8``.  Cut fractions come from bisection on the radial
    gap, whose zero set is the boundary.
    """
    h = float(h)
    if not h > 0 or not math.isfinite(h):
        raise ValidationError(f"grid spacing must be positive, got {h}")
    r = geo.interior_sphere_radius(domain)
    if h > r / 8 * (1 + 1e-12):
        raise ValidationError(f"grid spacing h={h:.6g} exceeds r_Omega/8 = {r / 8:.6g}")
    c = np.asarray(domain.center, dtype=float)
    lo, hi = geo.bounding_box(domain)
    ilo = np.floor((lo - c) / h).astype(int) - _MARGIN
    ihi = np.ceil((hi - c) / h).astype(int) + _MARGIN
    shape = (int(ihi[0] - ilo[0] + 1), int(ihi[1] - ilo[1] + 1))
    origin = c + h * ilo
    I, J = np.meshgrid(np.arange(shape[0]), np.arange(shape[1]), indexing="ij")
    ij_all = np.stack([I.ravel(), J.ravel()], axis=1)
    inside = (domain.radial_gap(origin + h * ij_all) > 0).reshape(shape)
    if not inside.any():
        raise ValidationError("grid has no interior nodes")

    index = np.full(shape, -1, dtype=np.int64)
    ij = np.argwhere(inside)
    index[ij[:, 0], ij[:, 1]] = np.arange(len(ij))

    cut = np.ones((len(ij), 4))
    pts = origin + h * ij
    for d in range(4):
        nb = ij + NEIGHBOURS[d]
        out = ~inside[nb[:, 0], nb[:, 1]]
        if not out.any():
            continue
        p, step = pts[out], h * NEIGHBOURS[d]
        a = np.zeros(out.sum())
        b = np.ones(out.sum())
        for _ in range(_BISECT):
            m = 0.5 * (a + b)
            ins = domain.radial_gap(p + m[:, None] * step) > 0
            a = np.where(ins, m, a)
            b = np.where(ins, b, m)
        cut[out, d] = 0.5 * (a + b)
    return Grid(domain=domain, h=h, origin=origin, shape=shape, inside=inside,
                index=index, ij=ij, cut=cut)
