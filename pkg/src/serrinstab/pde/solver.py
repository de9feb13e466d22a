"""Semilinear Dirichlet solver ``Delta u + f(u) = 0`` on cut-cell grids."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp
from scipy.ndimage import binary_dilation
from scipy.sparse.linalg import spsolve

from .. import geometry as geo
from ..errors import ConvergenceError, NumericalError, ValidationError
from .grid import Grid, discretize
from .mls import QuadraticMLS

__all__ = [
    "NonlinearitySpec",
    "Field",
    "solve_poisson",
    "solve_semilinear",
    "inverse_iteration",
    "eigen_demo",
]

MLS_RADIUS = 3.5
GHOST_LAYERS = 2


@dataclass(frozen=True)
class NonlinearitySpec:
    """The right-hand side ``f`` of ``Delta u + f(u) = 0``.

    ``kind`` is ``"torsion"`` (``f = 1``), ``"linear"`` (``f(u) = mu u``) or
    ``"sampled"`` (piecewise-linear through ``(knots, values)``, constant
    beyond the last knot).  ``f(0) >= 0`` is required.
    """

    kind: str
    lipschitz_L: float = 0.0
    f0: float = 1.0
    mu: float = 0.0
    knots: tuple[float, ...] = ()
    values: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in ("torsion", "linear", "sampled"):
            raise ValidationError(f"unknown nonlinearity kind {self.kind!r}")
        if self.kind == "sampled":
            k = np.asarray(self.knots, float)
            v = np.asarray(self.values, float)
            if k.ndim != 1 or k.shape != v.shape or len(k) < 2:
                raise ValidationError("sampled f needs matching knot and value lists (>= 2)")
            if k[0] != 0.0 or np.any(np.diff(k) <= 0):
                raise ValidationError("sampled f knots must start at 0 and increase")
            slope = float(np.max(np.abs(np.diff(v) / np.diff(k))))
            if slope > self.lipschitz_L * (1 + 1e-12):
                raise ValidationError(
                    f"sampled slopes reach {slope:.6g}, above lipschitz_L={self.lipschitz_L:.6g}")
            if self.f0 != v[0]:
                object.__setattr__(self, "f0", float(v[0]))
        if self.f0 < 0:
            raise ValidationError("f(0) must be nonnegative")
        if self.lipschitz_L < 0:
            raise ValidationError("Lipschitz constant must be nonnegative")

    @classmethod
    def torsion(cls) -> "NonlinearitySpec":
        return cls("torsion", 0.0, 1.0)

    @classmethod
    def linear(cls, mu: float) -> "NonlinearitySpec":
        return cls("linear", abs(float(mu)), 0.0, mu=float(mu))

    @classmethod
    def sampled(cls, knots, values, lipschitz_L: float | None = None) -> "NonlinearitySpec":
        k = tuple(float(x) for x in knots)
        v = tuple(float(x) for x in values)
        if lipschitz_L is None:
            lipschitz_L = float(np.max(np.abs(np.diff(v) / np.diff(k))))
        return cls("sampled", float(lipschitz_L), v[0], knots=k, values=v)

    @classmethod
    def parse(cls, text) -> "NonlinearitySpec":
        """``"torsion"``, ``"linear:MU"`` or a mapping with ``knots``/``values``."""
        if isinstance(text, dict):
            extra = set(text) - {"kind", "knots", "values", "lipschitz_L"}
            if extra or text.get("kind", "sampled") != "sampled":
                raise ValidationError(f"bad sampled nonlinearity fields: {sorted(extra)}")
            return cls.sampled(text["knots"], text["values"], text.get("lipschitz_L"))
        text = str(text).strip()
        if text == "torsion":
            return cls.torsion()
        if text.startswith("linear:"):
            try:
                return cls.linear(float(text.split(":", 1)[1]))
            except ValueError as exc:
                raise ValidationError(f"bad linear coefficient in {text!r}") from exc
        raise ValidationError(f"unknown nonlinearity {text!r}")

    @property
    def label(self) -> str:
        if self.kind == "linear":
            return f"linear:{self.mu:.17g}"
        return self.kind

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        if self.kind == "torsion":
            return np.ones_like(u)
        if self.kind == "linear":
            return self.mu * u
        return np.interp(u, self.knots, self.values)

    def derivative(self, u):
        u = np.asarray(u, dtype=float)
        if self.kind == "torsion":
            return np.zeros_like(u)
        if self.kind == "linear":
            return np.full_like(u, self.mu)
        k = np.asarray(self.knots)
        slopes = np.diff(self.values) / np.diff(k)
        i = np.clip(np.searchsorted(k, u, side="right") - 1, 0, len(slopes) - 1)
        return np.where((u < 0) | (u >= k[-1]), 0.0, slopes[i])


@dataclass(frozen=True, eq=False)
class Field:
    """Discrete solution on the interior nodes of a grid.

    Values outside the domain are zero.  Near the boundary a band of ghost
    values, extrapolated by local quadratic fits, makes bilinear
    interpolation second order up to the boundary.
    """

    grid: Grid
    values: np.ndarray
    nonlinearity: NonlinearitySpec | None = None
    residual: float = 0.0
    iterations: int = 0
    history: tuple[float, ...] = ()
    eigenvalue: float | None = None
    label: str = ""

    @property
    def h(self) -> float:
        return self.grid.h

    @property
    def domain(self):
        return self.grid.domain

    @cached_property
    def u_max(self) -> float:
        return float(self.values.max())

    @property
    def tol_num(self) -> float:
        return 1e-12 * max(abs(self.u_max), 1e-300)

    @cached_property
    def mls(self) -> QuadraticMLS:
        g = self.grid
        perim = np.linalg.norm(np.diff(geo._dense(g.domain, geo.DEFAULT_SAMPLES).position,
                                       axis=0, append=g.domain.point(0.0)[None]), axis=1).sum()
        m = max(64, int(math.ceil(2 * perim / g.h)))
        bpts = g.domain.point(2 * np.pi * np.arange(m) / m)
        near = binary_dilation(~g.inside, np.ones((2 * 4 + 1,) * 2))[g.ij[:, 0], g.ij[:, 1]]
        pts = np.concatenate([g.points[near], g.crossings, bpts])
        vals = np.concatenate([self.values[near], np.zeros(len(g.crossings) + m)])
        return QuadraticMLS(pts, vals, MLS_RADIUS * g.h)

    @cached_property
    def extended(self) -> np.ndarray:
        """Nodal array with ghost values in a band outside the domain."""
        g = self.grid
        full = g.to_full(self.values)
        band = binary_dilation(g.inside, np.ones((2 * GHOST_LAYERS + 1,) * 2)) & ~g.inside
        ij = np.argwhere(band)
        full[ij[:, 0], ij[:, 1]] = self.mls.value(g.origin + g.h * ij)
        return full

    def evaluate(self, x) -> np.ndarray:
        """Bilinear interpolation of the ghost-extended nodal values."""
        x = np.asarray(x, dtype=float)
        flat = np.atleast_2d(x)
        g = self.grid
        s = (flat - g.origin) / g.h
        i0 = np.floor(s).astype(np.int64)
        t = s - i0
        ok = (i0[:, 0] >= 0) & (i0[:, 1] >= 0) & (i0[:, 0] < g.shape[0] - 1) & (i0[:, 1] < g.shape[1] - 1)
        i = np.where(ok[:, None], i0, 0)
        E = self.extended
        v = ((1 - t[:, 0]) * (1 - t[:, 1]) * E[i[:, 0], i[:, 1]]
             + t[:, 0] * (1 - t[:, 1]) * E[i[:, 0] + 1, i[:, 1]]
             + (1 - t[:, 0]) * t[:, 1] * E[i[:, 0], i[:, 1] + 1]
             + t[:, 0] * t[:, 1] * E[i[:, 0] + 1, i[:, 1] + 1])
        v = np.where(ok, v, 0.0)
        return v if x.ndim > 1 else v[0]

    @cached_property
    def boundary(self):
        from .analysis import normal_derivative

        return normal_derivative(self)

    def scaled(self, s: float) -> "Field":
        return Field(self.grid, s * self.values, self.nonlinearity, self.residual, self.iterations,
                     self.history, self.eigenvalue, self.label)


def solve_poisson(grid: Grid, rhs) -> np.ndarray:
    """``-Delta u = rhs`` on the interior nodes, ``u = 0`` on the boundary.

    ``rhs`` is an array over interior nodes or a callable of positions.
    """
    if callable(rhs):
        rhs = rhs(grid.points)
    return grid.solve(np.broadcast_to(np.asarray(rhs, float), (grid.n,)).copy())


def _check_positive(u, tol_num):
    if u.min() < -10 * tol_num:
        raise NumericalError(f"positivity violated: min u = {u.min():.3e}")


def solve_semilinear(grid: Grid, f: NonlinearitySpec, tol: float = 1e-10, max_iter: int = 500,
                     u0=None, newton: bool = False, damping: float | None = None) -> Field:
    """Solve ``Delta u + f(u) = 0`` in the domain, ``u = 0`` on its boundary.

    Picard iteration ``-Delta u_{k+1} = f(u_k)``, damped by 0.5 when the
    Lipschitz constant of ``f`` is within 10% of the discrete principal
    eigenvalue; optionally finished by Newton steps.  The reported residual
    is the sup-norm of ``u - (-Delta)^{-1} f(u)``.  With ``f(0) = 0`` and
    no seed the iteration returns the zero solution.
    """
    if f.kind == "torsion":
        u = grid.solve(np.full(grid.n, f.f0))
        res = float(np.max(np.abs(u - grid.solve(f(u)))))
        _check_positive(u, 1e-12 * abs(u).max())
        return Field(grid, u, f, res, 1, (res,), label=f.label)

    if damping is None:
        damping = 1.0
        if f.lipschitz_L > 0:
            lam1 = grid.lambda1
            if f.lipschitz_L >= lam1 and not (f.f0 == 0 and u0 is None):
                raise ValidationError(
                    f"Lipschitz constant {f.lipschitz_L:.6g} is not below the discrete "
                    f"principal eigenvalue {lam1:.6g}")
            if f.lipschitz_L > 0.9 * lam1:
                damping = 0.5
    u = np.zeros(grid.n) if u0 is None else np.asarray(u0, float).copy()
    history = []
    A = grid.laplacian
    for it in range(1, max_iter + 1):
        if newton and it > 1:
            J = A - sp.diags(f.derivative(u))
            u = u + spsolve(J.tocsc(), f(u) - A @ u)
            g = grid.solve(f(u))
        else:
            g = grid.solve(f(u))
        r = float(np.max(np.abs(g - u)))
        history.append(r)
        if r <= tol * max(1.0, float(np.max(np.abs(g)))):
            u = g
            break
        if not newton or it == 1:
            u = (1 - damping) * u + damping * g
    else:
        raise ConvergenceError(f"no convergence in {max_iter} iterations (residual {history[-1]:.3e})",
                               history=history)
    _check_positive(u, 1e-12 * max(abs(u).max(), 1e-300))
    res = float(np.max(np.abs(u - grid.solve(f(u)))))
    return Field(grid, u, f, res, it, tuple(history), label=f.label)


def inverse_iteration(grid: Grid, tol: float = 1e-13, max_iter: int = 1000):
    """Principal eigenpair of the discrete ``-Delta`` by inverse power iteration."""
    v = np.ones(grid.n)
    lam = math.inf
    for _ in range(max_iter):
        w = grid.solve(v)
        new = float(v @ w / (w @ w))
        w /= w.max()
        if abs(new - lam) <= tol * new and np.max(np.abs(w - v)) <= 1e3 * tol:
            return new, w
        lam, v = new, w
    raise NumericalError("inverse iteration stagnated")


def eigen_demo(domain_or_grid, n: float = 1, h: float | None = None) -> Field:
    """``phi_1 / n`` with ``max phi_1 = 1``; solves the problem with ``f(u) = lambda_1 u``.

    Its normal derivative scales like ``1/n``, so the boundary seminorm can
    be made arbitrarily small on a fixed non-round domain.
    """
    if n < 1:
        raise ValidationError("n must be at least 1")
    grid = domain_or_grid if isinstance(domain_or_grid, Grid) else discretize(domain_or_grid, h)
    lam, phi = grid.eigenpair
    f = NonlinearitySpec.linear(lam)
    res = float(np.max(np.abs(phi - lam * grid.solve(phi)))) / n
    return Field(grid, phi / n, f, res, 0, (), eigenvalue=lam, label=f"eigen/{n:g}")
