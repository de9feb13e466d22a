"""Post-processing of solved fields: ``u_nu``, its seminorm, ``w`` and ``c``."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import geometry as geo
from ..errors import NumericalError, ValidationError
from .solver import Field, NonlinearitySpec

__all__ = [
    "BoundaryData",
    "ReflectedDifference",
    "normal_derivative",
    "seminorm_unu",
    "reflect_difference",
    "coefficient_c",
    "growth_constants",
    "BOUNDARY_SAMPLES",
]

BOUNDARY_SAMPLES = 512
_MIN_SUPPORT = 12


@dataclass(frozen=True, eq=False)
class BoundaryData:
    angle: np.ndarray
    position: np.ndarray
    normal: np.ndarray
    u_nu: np.ndarray
    flagged: np.ndarray

    def __len__(self) -> int:
        return len(self.angle)

    def scaled(self, s: float) -> "BoundaryData":
        return BoundaryData(self.angle, self.position, self.normal, s * self.u_nu, self.flagged)


def normal_derivative(field: Field, m: int = BOUNDARY_SAMPLES) -> BoundaryData:
    """Inward normal derivative at ``m`` equally spaced boundary angles.

    A local quadratic least-squares fit to nodal values and the zero
    boundary data is differentiated along the normal at each boundary
    point.  Where the fit has too little support the first-order quotient
    ``u(X + h nu) / h`` is used instead and the sample is flagged.
    """
    dom = field.domain
    s = geo.boundary_sample(dom, m)
    coef, count = field.mls.fit(s.position)
    unu = np.einsum("ij,ij->i", coef[:, 1:3], s.normal)
    flagged = count < _MIN_SUPPORT
    if flagged.any():
        h = field.h
        unu[flagged] = field.evaluate(s.position[flagged] + h * s.normal[flagged]) / h
    return BoundaryData(s.angle, s.position, s.normal, unu, flagged)


def _arclength(positions):
    seg = np.linalg.norm(np.diff(positions, axis=0, append=positions[:1]), axis=1)
    return np.concatenate([[0.0], np.cumsum(seg)[:-1]]), seg.sum()


def seminorm_unu(data, values=None, geodesic: bool = False, block: int = 1024) -> float:
    """``max |u_nu(x) - u_nu(y)| / |x - y|`` over all sample pairs.

    ``data`` is a :class:`BoundaryData` or an array of positions (then
    ``values`` holds ``u_nu``).  With ``geodesic=True`` the distance is the
    arclength along the sampled closed curve instead of the chord.
    """
    if isinstance(data, BoundaryData):
        pos, val = data.position, data.u_nu
    else:
        pos, val = np.asarray(data, float), np.asarray(values, float)
    if len(pos) < 2:
        raise ValidationError("seminorm needs at least two samples")
    if geodesic:
        s, total = _arclength(pos)
    best = 0.0
    for i0 in range(0, len(pos), block):
        p, v = pos[i0:i0 + block], val[i0:i0 + block]
        if geodesic:
            ds = np.abs(s[i0:i0 + block, None] - s[None, :])
            dist = np.minimum(ds, total - ds)
        else:
            dist = np.linalg.norm(p[:, None, :] - pos[None, :, :], axis=-1)
        dv = np.abs(v[:, None] - val[None, :])
        q = np.divide(dv, dist, out=np.zeros_like(dv), where=dist > 0)
        best = max(best, float(q.max()))
    return best


@dataclass(frozen=True, eq=False)
class ReflectedDifference:
    """``w = u(x^lambda) - u(x)`` on the interior nodes beyond the plane.

    ``node`` indexes the field's interior nodes; ``excluded`` marks nodes
    whose reflection leaves the domain by more than ``h`` (their ``w`` is NaN).
    """

    node: np.ndarray
    points: np.ndarray
    reflected: np.ndarray
    u: np.ndarray
    u_reflected: np.ndarray
    w: np.ndarray
    excluded: np.ndarray

    @property
    def n_excluded(self) -> int:
        return int(self.excluded.sum())


def reflect_difference(field: Field, cap) -> ReflectedDifference:
    g = field.grid
    node = np.nonzero(g.points @ cap.omega > cap.lam)[0]
    if node.size == 0:
        raise ValidationError("cap contains no grid nodes")
    x = g.points[node]
    xr = geo.reflect(x, cap.omega, cap.lam)
    inside = g.domain.radial_gap(xr) > 0
    u_ref = np.zeros(len(node))
    u_ref[inside] = field.evaluate(xr[inside])
    excluded = np.zeros(len(node), dtype=bool)
    if (~inside).any():
        far = geo.signed_distance(g.domain, xr[~inside]) < -g.h
        excluded[np.nonzero(~inside)[0][far]] = True
        u_ref[excluded] = np.nan
    u = field.values[node]
    return ReflectedDifference(node, x, xr, u, u_ref, u_ref - u, excluded)


def coefficient_c(field: Field, cap, f: NonlinearitySpec | None = None,
                  rd: ReflectedDifference | None = None) -> np.ndarray:
    """``(f(u(x^lambda)) - f(u(x))) / (u(x^lambda) - u(x))``, zero where the values agree."""
    f = field.nonlinearity if f is None else f
    if f is None:
        raise ValidationError("no nonlinearity attached to the field")
    rd = reflect_difference(field, cap) if rd is None else rd
    du = rd.w
    small = ~(np.abs(du) > field.tol_num)
    c = np.zeros_like(du)
    c[~small] = (f(rd.u_reflected[~small]) - f(rd.u[~small])) / du[~small]
    c[rd.excluded] = np.nan
    worst = np.nanmax(np.abs(c)) if np.isfinite(c).any() else 0.0
    if worst > f.lipschitz_L + 1e-9 * max(1.0, f.lipschitz_L):
        raise NumericalError(f"|c| reaches {worst:.6g} above the Lipschitz bound {f.lipschitz_L:.6g}")
    return c


def growth_constants(field: Field, delta0: float) -> tuple[float, float]:
    """Empirical ``(K_lower, K_upper)`` with ``K_lower d <= u <= K_upper d``.

    Ratios ``u / dist(x, boundary)`` over interior nodes farther than
    ``delta0`` from the boundary, together with the boundary values of
    ``u_nu`` (the limit of the ratio at the boundary).
    """
    if delta0 < 2 * field.h * (1 - 1e-12):
        raise ValidationError(f"delta0 must be at least 2h = {2 * field.h:.6g}")
    sd = field.grid.node_sd
    keep = sd > delta0
    if not keep.any():
        raise ValidationError("no nodes beyond delta0")
    ratio = field.values[keep] / sd[keep]
    unu = field.boundary.u_nu
    lo = float(min(ratio.min(), unu.min()))
    hi = float(max(ratio.max(), unu.max()))
    f = field.nonlinearity
    if lo <= 0 and f is not None and f.f0 > 0:
        raise NumericalError("nonpositive growth ratio with f(0) > 0")
    return lo, hi
