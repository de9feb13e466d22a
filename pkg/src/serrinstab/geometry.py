"""Star-shaped planar domains with a radial Fourier boundary.

The boundary is the curve ``X(phi) = center + rho(phi) (cos phi, sin phi)``
with ``rho(phi) = c0 + sum_k a_k cos(k phi) + b_k sin(k phi)``.  Everything
downstream (moving planes, grids, cones) works through the primitives in
this module: boundary frames, signed distance, reflection, diameter and the
uniform interior sphere radius.

Continuous extrema are found by dense sampling followed by a local
refinement in the angle parameter.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from pathlib import Path
from typing import Iterator

import numpy as np
from scipy import optimize
from scipy.spatial import cKDTree

from .errors import NotStarShapedError, ValidationError

__all__ = [
    "DEFAULT_SAMPLES",
    "DomainSpec",
    "BoundaryPoint",
    "BoundarySample",
    "GeometrySummary",
    "boundary_sample",
    "diameter",
    "interior_sphere_radius",
    "signed_distance",
    "parallel_set_contains",
    "reflect",
    "inner_outer_radii",
    "summary",
]

DEFAULT_SAMPLES = 2048
_VALIDATION_SAMPLES = 8192
_KDTREE_SAMPLES = 4096


def _as_unit(omega, tol=1e-12) -> np.ndarray:
    omega = np.asarray(omega, dtype=float)
    norm = float(np.linalg.norm(omega))
    if abs(norm - 1.0) > tol:
        raise ValidationError(f"direction must be a unit vector, |omega| = {norm!r}")
    return omega


def unit(angle: float) -> np.ndarray:
    """Unit vector at ``angle`` radians from the x axis."""
    return np.array([math.cos(angle), math.sin(angle)])


@dataclass(frozen=True, eq=False)
class DomainSpec:
    """Star-shaped domain with a finite radial Fourier boundary.

    Parameters
    ----------
    center : pair of float
        Star center; every ray from it meets the boundary once.
    c0 : float
        Mean radius.
    cos, sin : sequences of float
        Coefficients ``a_k`` and ``b_k`` for ``k = 1..K``.  The shorter one
        is zero-padded.
    convex : bool
        Declared convexity.  Checked against sampled curvature.
    min_radius, min_curvature_radius : float, optional
        Declared smoothness guards; construction fails if the boundary
        violates them.
    """

    center: tuple[float, float]
    c0: float
    cos: tuple[float, ...] = ()
    sin: tuple[float, ...] = ()
    convex: bool = False
    name: str = ""
    min_radius: float | None = None
    min_curvature_radius: float | None = None
    _coef: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        center = tuple(float(v) for v in self.center)
        if len(center) != 2:
            raise ValidationError("center must have two coordinates")
        a = [float(v) for v in self.cos]
        b = [float(v) for v in self.sin]
        n = max(len(a), len(b))
        a += [0.0] * (n - len(a))
        b += [0.0] * (n - len(b))
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "c0", float(self.c0))
        object.__setattr__(self, "cos", tuple(a))
        object.__setattr__(self, "sin", tuple(b))
        coef = np.array(a, dtype=float) - 1j * np.array(b, dtype=float)
        coef.setflags(write=False)
        object.__setattr__(self, "_coef", coef)
        self._validate()

    def _validate(self):
        phi = np.linspace(0.0, 2 * np.pi, _VALIDATION_SAMPLES, endpoint=False)
        rho = self.radius(phi)
        if not np.all(np.isfinite(rho)) or rho.min() <= 0.0:
            raise NotStarShapedError(
                f"not star-shaped: rho reaches {rho.min():.6g} "
                f"at phi = {phi[np.argmin(rho)]:.6g}"
            )
        if self.min_radius is not None and rho.min() < self.min_radius:
            raise ValidationError(
                f"boundary radius {rho.min():.6g} below declared minimum {self.min_radius}"
            )
        kappa = self.curvature(phi)
        if self.min_curvature_radius is not None and kappa.max() > 0:
            if 1.0 / kappa.max() < self.min_curvature_radius:
                raise ValidationError(
                    f"curvature radius {1 / kappa.max():.6g} below declared "
                    f"minimum {self.min_curvature_radius}"
                )
        if self.convex and kappa.min() < -1e-10 * abs(kappa).max():
            raise ValidationError(
                f"domain flagged convex but curvature reaches {kappa.min():.6g}"
            )

    # -- construction helpers -------------------------------------------------

    @classmethod
    def disk(cls, radius=1.0, center=(0.0, 0.0), name="disk"):
        return cls(center=center, c0=radius, convex=True, name=name)

    @classmethod
    def from_function(cls, rho, center=(0.0, 0.0), n_harmonics=64, convex=False,
                      name="", rtol=1e-17):
        """Fourier-fit a smooth positive radial function ``rho(phi)``.

        Trailing harmonics with magnitude below ``rtol * c0`` are dropped.
        """
        m = 4 * n_harmonics + 4
        phi = 2 * np.pi * np.arange(m) / m
        coef = np.fft.rfft(np.asarray(rho(phi), dtype=float)) / m
        c0 = coef[0].real
        a = 2 * coef[1:n_harmonics + 1].real
        b = -2 * coef[1:n_harmonics + 1].imag
        mag = np.hypot(a, b)
        keep = np.nonzero(mag > rtol * abs(c0))[0]
        k = keep[-1] + 1 if keep.size else 0
        return cls(center=center, c0=c0, cos=a[:k], sin=b[:k], convex=convex, name=name)

    @classmethod
    def ellipse(cls, a, b, center=(0.0, 0.0), angle=0.0, name=None):
        """Ellipse with semi-axes ``a`` (along ``angle``) and ``b``."""

        def rho(phi):
            t = phi - angle
            return a * b / np.sqrt((b * np.cos(t)) ** 2 + (a * np.sin(t)) ** 2)

        q = abs(a - b) / (a + b)
        n = 8 if q == 0 else int(min(256, max(8, math.ceil(40 / -math.log10(q)))))
        if name is None:
            name = f"ellipse(a={a:g},b={b:g})"
        return cls.from_function(rho, center=center, n_harmonics=n, convex=True, name=name)

    def rotated(self, alpha: float, about=(0.0, 0.0)) -> "DomainSpec":
        """Image under rotation by ``alpha`` about the point ``about``."""
        k = np.arange(1, len(self.cos) + 1)
        ca, sa = np.cos(k * alpha), np.sin(k * alpha)
        a = np.asarray(self.cos)
        b = np.asarray(self.sin)
        about = np.asarray(about, dtype=float)
        rot = np.array([[math.cos(alpha), -math.sin(alpha)],
                        [math.sin(alpha), math.cos(alpha)]])
        center = about + rot @ (np.asarray(self.center) - about)
        return DomainSpec(center=center, c0=self.c0, cos=a * ca - b * sa,
                          sin=a * sa + b * ca, convex=self.convex, name=self.name)

    def translated(self, v) -> "DomainSpec":
        return DomainSpec(center=np.asarray(self.center) + np.asarray(v, dtype=float),
                          c0=self.c0, cos=self.cos, sin=self.sin, convex=self.convex,
                          name=self.name)

    def scaled(self, s: float) -> "DomainSpec":
        """Uniform scaling about the origin."""
        return DomainSpec(center=s * np.asarray(self.center), c0=s * self.c0,
                          cos=s * np.asarray(self.cos), sin=s * np.asarray(self.sin),
                          convex=self.convex, name=self.name)

    # -- serialization --------------------------------------------------------

    def to_dict(self) -> dict:
        d = {
            "center": list(self.center),
            "coeffs": {"c0": self.c0, "cos": list(self.cos), "sin": list(self.sin)},
            "convex": bool(self.convex),
        }
        if self.name:
            d["name"] = self.name
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "DomainSpec":
        allowed = {"center", "coeffs", "convex", "name"}
        extra = set(d) - allowed
        if extra:
            raise ValidationError(f"unknown domain keys: {sorted(extra)}")
        try:
            coeffs = d["coeffs"]
            return cls(center=d["center"], c0=coeffs["c0"], cos=coeffs.get("cos", ()),
                       sin=coeffs.get("sin", ()), convex=bool(d.get("convex", False)),
                       name=d.get("name", ""))
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed domain description: {exc!r}") from exc

    @classmethod
    def load(cls, path) -> "DomainSpec":
        with open(path) as fh:
            d = json.load(fh)
        if not d.get("name"):
            d["name"] = Path(path).stem
        return cls.from_dict(d)

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")

    # -- evaluation -----------------------------------------------------------

    @property
    def n_harmonics(self) -> int:
        return len(self.cos)

    @cached_property
    def center_array(self) -> np.ndarray:
        c = np.array(self.center)
        c.setflags(write=False)
        return c

    def radius(self, phi, deriv: int = 0):
        """``rho`` or its ``deriv``-th derivative at ``phi``."""
        phi = np.asarray(phi, dtype=float)
        base = self.c0 if deriv == 0 else 0.0
        K = self.n_harmonics
        if K == 0:
            return np.full(phi.shape, base)
        k = np.arange(1, K + 1)
        coef = self._coef * (1j * k) ** deriv
        if phi.size <= 64:
            # scalar-heavy callers (root finding, refinement): one small matrix product
            acc = np.exp(1j * np.multiply.outer(phi.ravel(), k)) @ coef
            return base + acc.real.reshape(phi.shape)
        z = np.exp(1j * phi)
        acc = np.full(phi.shape, coef[-1], dtype=complex)
        for c in coef[-2::-1]:
            acc = acc * z + c
        return base + (acc * z).real

    def point(self, phi) -> np.ndarray:
        phi = np.asarray(phi, dtype=float)
        rho = self.radius(phi)
        return self.center_array + np.stack([rho * np.cos(phi), rho * np.sin(phi)], axis=-1)

    def derivatives(self, phi):
        """Return ``X, X', X''`` at ``phi`` (arrays of shape ``(..., 2)``)."""
        phi = np.asarray(phi, dtype=float)
        r0, r1, r2 = (self.radius(phi, k) for k in range(3))
        er = np.stack([np.cos(phi), np.sin(phi)], axis=-1)
        et = np.stack([-np.sin(phi), np.cos(phi)], axis=-1)
        X = self.center_array + r0[..., None] * er
        X1 = r1[..., None] * er + r0[..., None] * et
        X2 = (r2 - r0)[..., None] * er + 2 * r1[..., None] * et
        return X, X1, X2

    def inward_normal(self, phi) -> np.ndarray:
        _, X1, _ = self.derivatives(phi)
        n = np.stack([-X1[..., 1], X1[..., 0]], axis=-1)
        return n / np.linalg.norm(n, axis=-1, keepdims=True)

    def curvature(self, phi):
        r0, r1, r2 = (self.radius(phi, k) for k in range(3))
        return (r0 ** 2 + 2 * r1 ** 2 - r0 * r2) / (r0 ** 2 + r1 ** 2) ** 1.5

    def polar(self, x):
        """Angle and radius of ``x`` about the star center."""
        d = np.asarray(x, dtype=float) - self.center_array
        return np.arctan2(d[..., 1], d[..., 0]), np.hypot(d[..., 0], d[..., 1])

    def radial_gap(self, x):
        """``rho(angle(x)) - |x - center|``: positive exactly inside."""
        ang, r = self.polar(x)
        return self.radius(ang) - r

    def contains(self, x, tol: float = 0.0):
        return self.radial_gap(x) > tol


@dataclass(frozen=True)
class BoundaryPoint:
    position: np.ndarray
    angle_param: float
    inward_normal: np.ndarray
    curvature: float


@dataclass(frozen=True)
class BoundarySample:
    """Struct-of-arrays boundary sample; indexing yields ``BoundaryPoint``."""

    angle: np.ndarray
    position: np.ndarray
    normal: np.ndarray
    curvature: np.ndarray

    def __len__(self):
        return len(self.angle)

    def __getitem__(self, i) -> BoundaryPoint:
        return BoundaryPoint(self.position[i], float(self.angle[i]),
                             self.normal[i], float(self.curvature[i]))

    def __iter__(self) -> Iterator[BoundaryPoint]:
        return (self[i] for i in range(len(self)))


@dataclass(frozen=True)
class GeometrySummary:
    d_Omega: float
    r_Omega: float
    is_convex: bool


def boundary_sample(domain: DomainSpec, m: int) -> BoundarySample:
    """``m`` boundary points at equally spaced angles, with exact frames."""
    if m < 4:
        raise ValidationError(f"need at least 4 boundary samples, got {m}")
    phi = 2 * np.pi * np.arange(m) / m
    rho = domain.radius(phi)
    if rho.min() <= 0:
        raise NotStarShapedError("not star-shaped: non-positive radius on the sample")
    return BoundarySample(angle=phi, position=domain.point(phi),
                          normal=domain.inward_normal(phi), curvature=domain.curvature(phi))


@lru_cache(maxsize=128)
def _dense(domain: DomainSpec, m: int) -> BoundarySample:
    return boundary_sample(domain, m)


@lru_cache(maxsize=128)
def _tree(domain: DomainSpec) -> tuple[cKDTree, np.ndarray]:
    s = _dense(domain, _KDTREE_SAMPLES)
    return cKDTree(s.position), s.angle


def _refine_angle(fun, phi0: float, width: float) -> tuple[float, float]:
    res = optimize.minimize_scalar(fun, bounds=(phi0 - width, phi0 + width),
                                   method="bounded", options={"xatol": 1e-10})
    f0 = fun(phi0)
    if res.fun < f0:
        return float(res.x), float(res.fun)
    return phi0, float(f0)


def diameter(domain: DomainSpec, m: int = DEFAULT_SAMPLES) -> float:
    """Largest distance between two boundary points."""
    return _diameter(domain, m)


@lru_cache(maxsize=128)
def _diameter(domain, m):
    s = _dense(domain, m)
    X = s.position
    best, pair = -1.0, (0, 0)
    for start in range(0, m, 512):
        blk = X[start:start + 512]
        d2 = ((blk[:, None, :] - X[None, :, :]) ** 2).sum(-1)
        idx = np.unravel_index(np.argmax(d2), d2.shape)
        if d2[idx] > best:
            best, pair = float(d2[idx]), (start + idx[0], idx[1])

    def negd2(p):
        (Xa, Ya), (Xb, Yb) = (domain.derivatives(p[0])[:2], domain.derivatives(p[1])[:2])
        diff = Xa - Xb
        return -float(diff @ diff), np.array([-2 * diff @ Ya, 2 * diff @ Yb])

    p0 = np.array([s.angle[pair[0]], s.angle[pair[1]]])
    res = optimize.minimize(negd2, p0, jac=True, method="BFGS", options={"gtol": 1e-14})
    return math.sqrt(max(best, -float(res.fun)))


def _touching_radii(x, nu, kappa, Y) -> np.ndarray:
    """Radius of the largest ball tangent at each ``x`` avoiding the points ``Y``."""
    diff = Y[None, :, :] - x[:, None, :]
    num = (diff ** 2).sum(-1)
    den = 2 * (diff * nu[:, None, :]).sum(-1)
    scale = np.sqrt(num.max())
    ok = (den > 1e-15 * scale) & (num > 1e-6 * scale ** 2)
    ratio = np.where(ok, num / np.where(ok, den, 1.0), np.inf)
    cap = np.where(kappa > 0, 1.0 / np.where(kappa > 0, kappa, 1.0), np.inf)
    return np.minimum(ratio.min(axis=1), cap)


def interior_sphere_radius(domain: DomainSpec, m: int = DEFAULT_SAMPLES) -> float:
    """Uniform interior touching-ball radius ``min_x r(x)``."""
    return _interior_sphere_radius(domain, m)


@lru_cache(maxsize=128)
def _interior_sphere_radius(domain, m):
    s = _dense(domain, m)
    r = np.concatenate([
        _touching_radii(s.position[i:i + 256], s.normal[i:i + 256],
                        s.curvature[i:i + 256], s.position)
        for i in range(0, m, 256)
    ])
    if not np.all(np.isfinite(r)) or r.min() <= 0:
        raise ValidationError("degenerate boundary: interior touching radius not positive")
    i = int(np.argmin(r))

    def r_at(phi):
        x = domain.point(np.array([phi]))
        nu = domain.inward_normal(np.array([phi]))
        kappa = domain.curvature(np.array([phi]))
        return float(_touching_radii(x, nu, kappa, s.position)[0])

    _, r_ref = _refine_angle(r_at, float(s.angle[i]), 2 * np.pi / m)
    return min(r_ref, float(r[i]))


def _nearest_angles(domain: DomainSpec, p: np.ndarray) -> np.ndarray:
    tree, angles = _tree(domain)
    _, idx = tree.query(p)
    phi = angles[idx].copy()
    step_cap = 2 * (2 * np.pi / len(angles))
    for _ in range(30):
        X, X1, X2 = domain.derivatives(phi)
        d = X - p
        g = (d * X1).sum(-1)
        gp = (X1 * X1).sum(-1) + (d * X2).sum(-1)
        step = np.where(gp > 0, -g / np.where(gp > 0, gp, 1.0), 0.0)
        step = np.clip(step, -step_cap, step_cap)
        phi = phi + step
        if np.max(np.abs(step), initial=0.0) < 1e-13:
            break
    return phi


def nearest_boundary_point(domain: DomainSpec, x):
    """Foot point on the boundary and its angle parameter."""
    p = np.atleast_2d(np.asarray(x, dtype=float))
    phi = _nearest_angles(domain, p)
    return domain.point(phi), phi


def signed_distance(domain: DomainSpec, x):
    """Distance to the boundary; positive inside, negative outside."""
    x = np.asarray(x, dtype=float)
    p = np.atleast_2d(x)
    out = np.empty(len(p))
    for i in range(0, len(p), 65536):
        blk = p[i:i + 65536]
        phi = _nearest_angles(domain, blk)
        dist = np.linalg.norm(domain.point(phi) - blk, axis=-1)
        sign = np.where(domain.radial_gap(blk) > 0, 1.0, -1.0)
        out[i:i + 65536] = sign * dist
    return float(out[0]) if x.ndim == 1 else out.reshape(x.shape[:-1])


def parallel_set_contains(domain: DomainSpec, delta: float, x):
    """Membership in ``{x in Omega : dist(x, boundary) > delta}``."""
    r = interior_sphere_radius(domain)
    if not 0 <= delta < r:
        raise ValidationError(
            f"parallel set not guaranteed smooth: delta = {delta} outside [0, r_Omega = {r:.6g})"
        )
    return signed_distance(domain, x) > delta


def reflect(x, omega, mu: float):
    """Mirror image ``x - 2 (x . omega - mu) omega`` in the plane ``x . omega = mu``."""
    omega = _as_unit(omega)
    x = np.asarray(x, dtype=float)
    return x - 2 * ((x @ omega) - mu)[..., None] * omega


def inner_outer_radii(domain: DomainSpec, center, m: int = DEFAULT_SAMPLES):
    """``(min, max)`` of ``|x - center|`` over the boundary."""
    c = np.asarray(center, dtype=float)
    if domain.radial_gap(c) <= 0:
        raise ValidationError(f"center {c.tolist()} is not inside the domain")
    s = _dense(domain, m)
    r = np.linalg.norm(s.position - c, axis=-1)
    width = 2 * np.pi / m

    def dist(phi):
        return float(np.linalg.norm(domain.point(phi) - c))

    _, r_in = _refine_angle(dist, float(s.angle[np.argmin(r)]), width)
    _, neg = _refine_angle(lambda p: -dist(p), float(s.angle[np.argmax(r)]), width)
    return min(r_in, float(r.min())), max(-neg, float(r.max()))


@lru_cache(maxsize=128)
def summary(domain: DomainSpec, m: int = DEFAULT_SAMPLES) -> GeometrySummary:
    kappa = _dense(domain, m).curvature
    return GeometrySummary(d_Omega=diameter(domain, m), r_Omega=interior_sphere_radius(domain, m),
                           is_convex=bool(kappa.min() >= -1e-10 * abs(kappa).max()))


def points_in_box(domain: DomainSpec, n: int, rng: np.random.Generator,
                  pad: float = 0.0) -> np.ndarray:
    """Uniform random points in the bounding box of the domain."""
    X = _dense(domain, DEFAULT_SAMPLES).position
    lo, hi = X.min(0) - pad, X.max(0) + pad
    return lo + (hi - lo) * rng.random((n, 2))


def bounding_box(domain: DomainSpec) -> tuple[np.ndarray, np.ndarray]:
    X = _dense(domain, DEFAULT_SAMPLES).position
    return X.min(0), X.max(0)


def rotation(alpha: float) -> np.ndarray:
    return np.array([[math.cos(alpha), -math.sin(alpha)],
                     [math.sin(alpha), math.cos(alpha)]])
