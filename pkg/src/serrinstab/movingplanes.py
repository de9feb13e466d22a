"""Moving planes: critical hyperplane, maximal cap and cone certificates.

For a direction ``omega`` the plane ``x . omega = mu`` is slid in from the
extent ``Lambda`` until the reflected cap stops fitting inside the domain.
The stopping value ``lambda`` is located by a geometric descent followed
by bisection.  At ``lambda`` the reflected cap is internally tangent to the
boundary (S1) or the plane meets the boundary orthogonally (S2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from . import geometry as geo
from .errors import CertificateFailure, NumericalError, ValidationError
from .geometry import DomainSpec, reflect, signed_distance

__all__ = [
    "CriticalCap",
    "ConeCertificate",
    "extent",
    "cap_margin",
    "reflected_cap_inside",
    "critical_lambda",
    "classify_case",
    "tangent_halfball",
    "critical_cap",
    "theta_lower_bound",
    "ctheta_check",
    "lipschitz_cap_bound",
]

TOL_ANGLE = 1e-3
LATERAL_SAMPLES = 4096


def _tolerances(domain, tol=None, tol_geo=None):
    d = geo.diameter(domain)
    return (1e-6 * d if tol is None else tol), (1e-9 * d if tol_geo is None else tol_geo)


@dataclass(frozen=True)
class CriticalCap:
    """Outcome of the moving-plane procedure in one direction.

    ``touch_point`` is ``P`` when S1 holds (reported as primary when both
    cases fire) and ``Q`` otherwise.  ``seed`` lies inside the cap, at the
    centre of the largest ball inscribed in the tangent half-ball; grid
    code uses it to pick the connected component of the cap.
    """

    omega: np.ndarray
    Lambda: float
    lam: float
    case: str
    touch_point: np.ndarray
    cases: tuple[str, ...]
    P: np.ndarray | None
    Q: np.ndarray | None
    halfball_center: np.ndarray
    halfball_radius: float
    seed: np.ndarray
    search_path: str = "bisection"

    @property
    def component_tag(self) -> str:
        return f"sigma@({self.seed[0]:.6f},{self.seed[1]:.6f})"

    def in_cap(self, x):
        return np.asarray(x, dtype=float) @ self.omega > self.lam

    def reflect(self, x):
        return reflect(x, self.omega, self.lam)

    def to_dict(self) -> dict:
        def vec(v):
            return None if v is None else [float(c) for c in v]

        return {
            "omega": vec(self.omega),
            "Lambda": self.Lambda,
            "lambda": self.lam,
            "case": self.case,
            "cases": list(self.cases),
            "touch_point": vec(self.touch_point),
            "P": vec(self.P),
            "Q": vec(self.Q),
            "halfball_center": vec(self.halfball_center),
            "halfball_radius": self.halfball_radius,
            "component_tag": self.component_tag,
            "search_path": self.search_path,
        }


@dataclass(frozen=True)
class ConeCertificate:
    theta: float
    t_param: float
    witness_points: list = field(repr=False)
    direction: np.ndarray | None = None
    n_checked: int = 0
    note: str = "certifies the sampled vertices only"

    def to_dict(self) -> dict:
        return {
            "theta": self.theta,
            "t": self.t_param,
            "direction": None if self.direction is None else [float(c) for c in self.direction],
            "n_checked": self.n_checked,
            "witnesses": [[list(map(float, x)), list(map(float, xi))] for x, xi in self.witness_points],
            "note": self.note,
        }


def extent(domain: DomainSpec, omega, m: int = geo.DEFAULT_SAMPLES) -> float:
    """``sup x . omega`` over the domain."""
    omega = geo._as_unit(omega)
    s = geo._dense(domain, m)
    proj = s.position @ omega
    i = int(np.argmax(proj))
    _, neg = geo._refine_angle(lambda p: -float(domain.point(p) @ omega), float(s.angle[i]),
                               2 * np.pi / m)
    return max(float(proj[i]), -neg)


def cap_margin(domain: DomainSpec, omega, mu: float, m: int = geo.DEFAULT_SAMPLES,
               refine: bool = True) -> float:
    """Smallest signed distance of a reflected cap boundary point.

    Non-negative (up to round-off) exactly when the reflected cap lies in
    the domain.  Returns ``inf`` for an empty cap.  With ``refine=False``
    only the ``m`` samples are used, which can overestimate the margin.
    """
    omega = geo._as_unit(omega)
    s = geo._dense(domain, m)
    mask = s.position @ omega > mu
    if not mask.any():
        return math.inf
    sd = signed_distance(domain, reflect(s.position[mask], omega, mu))
    i = int(np.argmin(sd))
    if not refine:
        return float(sd[i])
    phi0 = float(s.angle[mask][i])

    def f(phi):
        x = domain.point(phi)
        if x @ omega <= mu:
            return float(sd[i]) + 1.0
        return float(signed_distance(domain, reflect(x, omega, mu)))

    _, best = geo._refine_angle(f, phi0, 2 * np.pi / m)
    return min(best, float(sd[i]))


def reflected_cap_inside(domain: DomainSpec, omega, mu: float, tol_geo=None,
                         m: int = geo.DEFAULT_SAMPLES) -> bool:
    _, tol_geo = _tolerances(domain, tol_geo=tol_geo)
    return cap_margin(domain, omega, mu, m) >= -tol_geo


def critical_lambda(domain: DomainSpec, omega, tol=None, tol_geo=None,
                    m: int = geo.DEFAULT_SAMPLES, return_path: bool = False,
                    audit_points: int = 64):
    """Critical position of the moving plane in direction ``omega``.

    The upper end of the final bracket is returned, so the reflected cap is
    contained in the domain at the reported value.  After bisection the
    interval ``(lambda, Lambda)`` is re-checked on ``audit_points`` values
    using sampled margins;
    a failure there means containment was not monotone on the bracket and
    the search falls back to a linear scan from ``Lambda`` downwards.
    """
    omega = geo._as_unit(omega)
    tol, tol_geo = _tolerances(domain, tol, tol_geo)
    Lam = extent(domain, omega, m)
    lower = -extent(domain, -omega, m)

    def inside(mu, refine=True):
        # sampled margins overestimate, so a sampled failure is final
        if cap_margin(domain, omega, mu, m, refine=False) < -tol_geo:
            return False
        return not refine or cap_margin(domain, omega, mu, m) >= -tol_geo

    def bisect(lo, hi):
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if inside(mid):
                hi = mid
            else:
                lo = mid
        return hi

    # descend on sampled margins, then confirm the upper bracket end exactly
    step, tried = tol, [Lam]
    while True:
        mu = Lam - step
        if mu <= lower:
            raise NumericalError("containment never fails above lower bound")
        if not inside(mu, refine=False):
            lo = mu
            break
        tried.append(mu)
        step *= 2
    while len(tried) > 1 and not inside(tried[-1]):
        lo = tried.pop()
    lam = bisect(lo, tried[-1])
    path = "bisection"

    probe = np.linspace(lam, Lam - tol, audit_points)
    coarse = max(64, m // 4)
    if not all(cap_margin(domain, omega, mu, coarse, refine=False) >= -tol_geo for mu in probe[1:]):
        path = "linear-scan"
        n = int(min(200000, max(4096, math.ceil((Lam - lower) / tol))))
        grid = np.linspace(Lam - tol, lower, n)
        for k in range(1, n):
            if not inside(grid[k]):
                lam = bisect(grid[k], grid[k - 1])
                break
        else:
            raise NumericalError("containment never fails above lower bound")
    return (lam, path) if return_path else lam


@dataclass(frozen=True)
class CaseResult:
    case: str
    cases: tuple[str, ...]
    P: np.ndarray | None
    Q: np.ndarray | None
    P_angle: float | None = None
    Q_angle: float | None = None

    @property
    def touch_point(self):
        return self.P if self.case == "S1" else self.Q

    @property
    def touch_angle(self):
        return self.P_angle if self.case == "S1" else self.Q_angle


def _plane_crossings(domain, omega, lam, m):
    s = geo._dense(domain, m)
    h = s.position @ omega - lam
    idx = np.nonzero(np.sign(h) != np.sign(np.roll(h, -1)))[0]
    roots = []
    for i in idx:
        a, b = s.angle[i], s.angle[i] + 2 * np.pi / m
        fa = float(domain.point(a) @ omega - lam)
        fb = float(domain.point(b) @ omega - lam)
        if fa == 0.0:
            roots.append(a)
        elif fa * fb < 0:
            roots.append(optimize.brentq(lambda p: float(domain.point(p) @ omega - lam), a, b,
                                         xtol=1e-15))
    return np.array(roots)


def classify_case(domain: DomainSpec, omega, lam: float, tol=None, tol_angle=TOL_ANGLE,
                  tol_touch=None, m: int = geo.DEFAULT_SAMPLES) -> CaseResult:
    """Decide which of S1 (internal tangency) and S2 (orthogonality) holds at ``lam``.

    S2: a boundary point on the plane whose normal is within ``tol_angle``
    of being orthogonal to ``omega``.  S1: a cap boundary point, farther
    than ``tol`` from the plane, at which the margin ``sd(x^lambda)`` has a
    local minimum of size at most ``tol_touch`` (default ``4 tol``; the
    plane is only located to within ``tol``).  The plane end of the cap,
    where the margin vanishes trivially, is never a candidate.  When the
    reflected cap coincides with the rest of the domain (a symmetry
    direction) every cap point is a touching point and the one farthest
    from the plane is reported.
    """
    omega = geo._as_unit(omega)
    tol, _ = _tolerances(domain, tol)
    tol_touch = 4 * tol if tol_touch is None else tol_touch

    Q = Q_angle = None
    roots = _plane_crossings(domain, omega, lam, m)
    if roots.size:
        cosang = np.abs(domain.inward_normal(roots) @ omega)
        j = int(np.argmin(cosang))
        if cosang[j] <= math.sin(tol_angle):
            Q_angle = float(roots[j])
            Q = domain.point(Q_angle)

    P = P_angle = None
    s = geo._dense(domain, m)
    proj = s.position @ omega
    mask = proj > lam + tol
    if mask.sum() >= 3:
        margin = np.full(m, np.inf)
        margin[mask] = signed_distance(domain, reflect(s.position[mask], omega, lam))
        left, right = np.roll(margin, 1), np.roll(margin, -1)
        interior = mask & np.roll(mask, 1) & np.roll(mask, -1)
        cand = np.nonzero(interior & (margin <= left) & (margin <= right)
                          & (np.abs(margin) <= tol_touch))[0]
        if not cand.size:
            # whole-cap contact: the margin is then monotone in the plane offset
            far = mask & (proj > lam + max(tol, 0.02 * (proj.max() - lam)))
            if far.any() and np.all(np.abs(margin[far]) <= tol_touch):
                cand = np.nonzero(far)[0]
        if cand.size:
            k = cand[np.lexsort((np.abs(margin[cand]), -np.round(proj[cand], 12)))[0]]
            P_angle = float(s.angle[k])
            P = s.position[k].copy()

    cases = tuple(c for c, pt in (("S1", P), ("S2", Q)) if pt is not None)
    if not cases:
        raise NumericalError("critical value inconsistent: neither tangency nor orthogonality found")
    return CaseResult(case=cases[0], cases=cases, P=P, Q=Q, P_angle=P_angle, Q_angle=Q_angle)


def _halfball_points(p, rho, omega, lam, n_r=24, n_t=96):
    r = rho * (1 - 1e-12) * np.sqrt(np.linspace(0, 1, n_r))
    t = 2 * np.pi * np.arange(n_t) / n_t
    pts = p + (r[:, None, None] * np.stack([np.cos(t), np.sin(t)], -1)[None]).reshape(-1, 2)
    return pts[pts @ omega > lam]


def tangent_halfball(domain: DomainSpec, cap_or_case, omega=None, lam=None, tol=None):
    """Centre and radius of the interior touching ball at ``P`` or ``Q``.

    The radius is ``r_Omega``.  Checks that the centre is not behind the
    critical plane and that the part of the ball beyond the plane lies in
    the cap; either failure means a geometry bug.
    """
    if isinstance(cap_or_case, CriticalCap):
        cap = cap_or_case
        omega, lam = cap.omega, cap.lam
        touch = cap.touch_point
    else:
        touch = cap_or_case.touch_point
    tol, _ = _tolerances(domain, tol)
    rho = geo.interior_sphere_radius(domain)
    ang, _ = domain.polar(touch)
    p = touch + rho * domain.inward_normal(ang)
    if p @ omega < lam - tol:
        raise NumericalError("touching-ball centre lies behind the critical plane")
    pts = _halfball_points(p, rho, omega, lam)
    if len(pts):
        sd = signed_distance(domain, pts)
        if sd.min() < -1e-8 * geo.diameter(domain):
            raise NumericalError(
                f"half-ball escapes the cap at {pts[np.argmin(sd)].tolist()} (sd = {sd.min():.3g})"
            )
    return p, rho


def critical_cap(domain: DomainSpec, omega, tol=None, tol_angle=TOL_ANGLE,
                 m: int = geo.DEFAULT_SAMPLES) -> CriticalCap:
    """Run the full moving-plane procedure in direction ``omega``."""
    omega = geo._as_unit(omega)
    lam, path = critical_lambda(domain, omega, tol=tol, m=m, return_path=True)
    case = classify_case(domain, omega, lam, tol=tol, tol_angle=tol_angle, m=m)
    p, rho = tangent_halfball(domain, case, omega=omega, lam=lam, tol=tol)
    return CriticalCap(omega=omega, Lambda=extent(domain, omega, m), lam=lam, case=case.case,
                       touch_point=case.touch_point, cases=case.cases, P=case.P, Q=case.Q,
                       halfball_center=p, halfball_radius=rho,
                       seed=p + 0.5 * rho * omega, search_path=path)


def theta_lower_bound(d_Omega: float, r_Omega: float, t: float) -> float:
    """``arctan((1 - t) r_Omega / (2 d_Omega))``."""
    if not 0 < t < 0.5:
        raise ValidationError(f"t must lie in (0, 1/2), got {t}")
    return math.atan((1 - t) * r_Omega / (2 * d_Omega))


def lipschitz_cap_bound(d_Omega: float, r_Omega: float) -> float:
    if d_Omega <= 0 or r_Omega <= 0:
        raise ValidationError("diameter and interior radius must be positive")
    return 2 * d_Omega / r_Omega


def _vertex_samples(domain, cap, t, r, n_anchor, m):
    s = geo._dense(domain, m)
    idx = np.nonzero(s.position @ cap.omega > cap.lam)[0]
    if idx.size > n_anchor:
        idx = idx[np.linspace(0, idx.size - 1, n_anchor).round().astype(int)]
    depths = np.array([1e-3, 0.5, 0.999]) * t * r
    x = (s.position[idx][:, None, :] + depths[None, :, None] * s.normal[idx][:, None, :]).reshape(-1, 2)
    return x[x @ cap.omega > cap.lam]


def ctheta_check(domain: DomainSpec, cap: CriticalCap, t: float = 1 / 32,
                 n_anchor: int = 64, lateral: int = LATERAL_SAMPLES,
                 m: int = geo.DEFAULT_SAMPLES) -> ConeCertificate:
    """Certify the cone condition on the maximal cap for sampled vertices.

    A ball ``B`` of radius ``(1 - t) r_Omega / 2`` is placed in the tangent
    half-ball; for each sampled ``x`` in the cap within ``t r_Omega`` of the
    boundary the cone from ``x`` over the cross-section of ``B`` through its
    centre is sampled on its lateral surface and checked against the cap.
    The achieved half-aperture is ``arctan(rbar / |x - y|)``.
    """
    if not 0 < t < 0.5:
        raise ValidationError(f"t must lie in (0, 1/2), got {t}")
    g = geo.summary(domain)
    r = g.r_Omega
    rbar = (1 - t) * r / 2
    omega, lam = cap.omega, cap.lam
    y = cap.halfball_center + rbar * omega
    tol = 1e-9 * g.d_Omega
    tol_plane = 1e-6 * g.d_Omega
    if signed_distance(domain, y) <= t * r:
        raise NumericalError("inscribed ball centre is not inside G")

    x = _vertex_samples(domain, cap, t, r, n_anchor, m)
    x = x[signed_distance(domain, x) < t * r]
    if not len(x):
        raise NumericalError("no cone vertices sampled in the cap")

    axis = y - x
    L = np.linalg.norm(axis, axis=1)
    u = axis / L[:, None]
    perp = np.stack([-u[:, 1], u[:, 0]], axis=1)
    s = np.linspace(0.0, 1.0, lateral // 2 + 1)[1:]
    for k in range(len(x)):
        base = x[k] + s[:, None] * axis[k]
        side = s[:, None] * rbar * perp[k]
        pts = np.concatenate([base + side, base - side])
        ok = (domain.radial_gap(pts) >= -tol) & (pts @ omega > lam - tol_plane)
        if not ok.all():
            raise CertificateFailure(
                f"cone from {x[k].tolist()} escapes the maximal cap at {pts[~ok][0].tolist()}",
                violating_point=x[k], direction=omega,
            )

    lo = np.zeros(len(x))
    hi = np.ones(len(x))
    for _ in range(50):
        mid = 0.5 * (lo + hi)
        inside_g = signed_distance(domain, x + mid[:, None] * axis) > t * r
        hi = np.where(inside_g, mid, hi)
        lo = np.where(inside_g, lo, mid)
    xi = x + hi[:, None] * axis
    theta = np.arctan(rbar / L)
    return ConeCertificate(theta=float(theta.min()), t_param=t,
                           witness_points=list(zip(x, xi)), direction=omega, n_checked=len(x))
