"""Harnack constants and ball chains inside right spherical cones.

All formula routines accept the space dimension ``N`` and work for any
``N >= 1``; chain geometry is carried out with points of arbitrary length.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import NumericalError, ValidationError

__all__ = [
    "ConeSpec",
    "HarnackChain",
    "harnack_constant_harmonic",
    "harnack_constant_general",
    "gamma_beta",
    "gamma_torsion",
    "K_constant",
    "build_chain",
    "chain_length_bound",
    "closed_form_chain",
    "distance_to_lateral",
    "verify_two_sided",
    "harnack_ratio_on_ball",
    "LinearHarmonic",
    "LogPotential",
    "PowerPotential",
    "PositiveCombination",
]


def _check_a(a):
    if not 0 < a < 1:
        raise ValidationError(f"a must lie in (0, 1), got {a}")


def _check_theta(theta):
    if not 0 < theta <= math.pi / 2:
        raise ValidationError(f"half-aperture must lie in (0, pi/2], got {theta}")


def harnack_constant_harmonic(a: float, N: int) -> float:
    """Poisson-formula constant ``((1 + a) / (1 - a))**N``."""
    _check_a(a)
    return ((1 + a) / (1 - a)) ** N


def harnack_constant_general(a, N, r, c_sup, base=None) -> float:
    """``base ** (sqrt(N) + sqrt(r * c_sup))``.

    The base constant depends only on ``N`` and ``a`` but has no closed form
    for a general zero-order coefficient; it must be supplied.  When omitted,
    the harmonic constant is used, which is only justified for ``c_sup = 0``.
    """
    if base is None:
        base = harnack_constant_harmonic(a, N)
    if base < 1:
        raise ValidationError("Harnack base constant must be >= 1")
    return base ** (math.sqrt(N) + math.sqrt(r * c_sup))


def beta(a, theta) -> float:
    s = a * math.sin(theta)
    return (1 + s) / (1 - s)


def gamma_beta(a, theta, H_a) -> tuple[float, float]:
    """Chain exponent ``gamma = log_beta H_a`` and growth ratio ``beta``."""
    _check_a(a)
    if theta <= 0:
        raise ValidationError("theta = 0 gives beta = 1; gamma is undefined")
    _check_theta(theta)
    b = beta(a, theta)
    return math.log(H_a) / math.log(b), b


def gamma_torsion(a, theta, N) -> float:
    """Exponent for ``c = 0``: ``N log((1+a)/(1-a)) / log(beta)``; never below ``N``."""
    _check_a(a)
    _check_theta(theta)
    g = N * math.log((1 + a) / (1 - a)) / math.log(beta(a, theta))
    if g < N * (1 - 1e-14):
        raise NumericalError(f"gamma = {g} fell below N = {N}")
    return g


def K_constant(a, theta, dist_xi_z, H_a) -> float:
    """``H_a * (|xi - z| (1 - a sin theta) / (1 - a))**gamma``."""
    if dist_xi_z <= 0:
        raise ValidationError("|xi - z| must be positive")
    gamma, _ = gamma_beta(a, theta, H_a)
    return H_a * (dist_xi_z * (1 - a * math.sin(theta)) / (1 - a)) ** gamma


def chain_length_bound(a, theta, r0, dist_xi_z, H_a) -> float:
    """Upper bound on the number of chain balls joining ``x`` to ``xi``.

    Written with logarithms in base ``H_a``, which cancel; base-``beta``
    logarithms are used so that ``H_a = 1`` is not singular.
    """
    if r0 <= 0 or dist_xi_z <= 0:
        raise ValidationError("r0 and |xi - z| must be positive")
    _check_a(a)
    s = a * math.sin(theta)
    arg = dist_xi_z / r0 * (1 - s) / (1 - a)
    return 1 + math.log(arg) / math.log(beta(a, theta))


@dataclass(frozen=True)
class ConeSpec:
    """Right spherical cone with vertex ``z``, unit axis ``axis``."""

    vertex: np.ndarray
    axis: np.ndarray
    theta: float
    height: float = math.inf

    def __post_init__(self):
        z = np.asarray(self.vertex, dtype=float)
        ell = np.asarray(self.axis, dtype=float)
        if z.shape != ell.shape or z.ndim != 1:
            raise ValidationError("vertex and axis must be vectors of equal length")
        n = np.linalg.norm(ell)
        if abs(n - 1) > 1e-12:
            raise ValidationError(f"cone axis must be a unit vector, |axis| = {n}")
        _check_theta(self.theta)
        if not self.height > 0:
            raise ValidationError("cone height must be positive")
        object.__setattr__(self, "vertex", z)
        object.__setattr__(self, "axis", ell)

    @property
    def dim(self) -> int:
        return len(self.vertex)

    def contains(self, q, tol=0.0):
        v = np.asarray(q, dtype=float) - self.vertex
        t = v @ self.axis
        radial = np.linalg.norm(v - t[..., None] * self.axis, axis=-1)
        return (radial * math.cos(self.theta) - t * math.sin(self.theta) <= tol) & (t <= self.height + tol)


def distance_to_lateral(q, cone: ConeSpec):
    """Euclidean distance from ``q`` to the lateral surface of the infinite cone.

    Uses the planar section through the axis and ``q``: with axial part
    ``t`` and radial part ``rho``, the generator is the ray at angle
    ``theta`` from the axis.
    """
    v = np.asarray(q, dtype=float) - cone.vertex
    t = v @ cone.axis
    rho = np.linalg.norm(v - t[..., None] * cone.axis, axis=-1)
    c, s = math.cos(cone.theta), math.sin(cone.theta)
    along = t * c + rho * s
    return np.where(along >= 0, np.abs(rho * c - t * s), np.hypot(t, rho))


@dataclass(frozen=True)
class HarnackChain:
    a: float
    H_a: float
    beta: float
    gamma: float
    K: float
    centers: np.ndarray
    radii: np.ndarray
    n: int
    cone: ConeSpec
    x: np.ndarray
    xi: np.ndarray
    layout: str = "touching"
    bound: float = field(default=math.nan)

    @property
    def balls(self):
        return list(zip(self.centers, self.radii))

    def touching_points(self) -> np.ndarray:
        """``p_i + a r_i axis`` for ``i = 0..n-1``."""
        return self.centers[:-1] + self.a * self.radii[:-1, None] * self.cone.axis

    def clause_residuals(self) -> dict:
        """Residuals of the four construction clauses, scaled by ``|xi - z|``.

        (i) centres on the axis; (ii) ``p_0 = x``, ``r_0 = |x - z|`` and
        ``xi`` in the last ball; (iii) balls ``i >= 1`` tangent to the
        lateral surface; (iv) consecutive shrunk balls touch at
        ``p_i + a r_i axis``.
        """
        z, ell = self.cone.vertex, self.cone.axis
        scale = float(np.linalg.norm(self.xi - z))
        v = self.centers - z
        off_axis = np.linalg.norm(v - (v @ ell)[:, None] * ell, axis=1)
        p, r, a = self.centers, self.radii, self.a
        tangency = np.abs(distance_to_lateral(p[1:], self.cone) - r[1:])
        touch = self.touching_points()
        gap_lo = np.linalg.norm(touch - p[:-1], axis=1) - a * r[:-1]
        gap_hi = np.linalg.norm(touch - p[1:], axis=1) - a * r[1:]
        return {
            "i": float(off_axis.max()) / scale,
            "ii_p0": float(np.linalg.norm(p[0] - self.x)) / scale,
            "ii_r0": abs(r[0] - np.linalg.norm(self.x - z)) / scale,
            "ii_xi_inside": float(np.linalg.norm(self.xi - p[-1]) - r[-1]) / scale,
            "iii": float(tangency.max(initial=0.0)) / scale,
            "iv": float(np.abs(np.concatenate([gap_lo, gap_hi])).max(initial=0.0)) / scale,
        }


def closed_form_chain(r0, a, theta, n):
    """Radii and axial offsets ``|p_i - z|`` from the published closed forms, ``i = 1..n``.

    ``r_i = r0 (1-a) sin(theta) / (1 - a sin(theta)) beta**i`` and
    ``|p_i - z| = r0 (1-a) / (1 - a sin(theta)) beta**i``.
    """
    s = math.sin(theta)
    b = beta(a, theta)
    powers = b ** np.arange(1, n + 1)
    offsets = r0 * (1 - a) / (1 - a * s) * powers
    return offsets * s, offsets


def build_chain(cone: ConeSpec, x, xi, a, H_a, layout="touching", max_balls=100000) -> HarnackChain:
    """Chain of balls along the cone axis from ``x`` to ``xi``.

    ``layout="touching"`` places ball 1 so that the shrunk balls 0 and 1 touch
    at ``x + a r_0 axis``; every later ball follows from the tangency and
    touching clauses, giving the ratio ``beta`` between consecutive radii.
    ``layout="closed_form"`` uses the published closed forms for ``i >= 1``
    verbatim.  The two coincide for ``theta = pi/2``; otherwise the closed
    form overlaps balls 0 and 1.

    The number of balls is the smallest ``n`` with ``|xi - p_n| < r_n``.
    """
    _check_a(a)
    z, ell = cone.vertex, cone.axis
    x = np.asarray(x, dtype=float)
    xi = np.asarray(xi, dtype=float)
    scale = max(np.linalg.norm(xi - z), 1e-300)
    for name, q in (("x", x), ("xi", xi)):
        v = q - z
        if np.linalg.norm(v - (v @ ell) * ell) > 1e-9 * scale or v @ ell <= 0:
            raise ValidationError(f"{name} is not on the cone axis")
    r0 = float(np.linalg.norm(x - z))
    dxi = float(np.linalg.norm(xi - z))
    if not r0 < dxi:
        raise ValidationError("need |x - z| < |xi - z|")

    s = math.sin(cone.theta)
    b = beta(a, cone.theta)
    if layout == "touching":
        first = r0 * (1 + a) / (1 - a * s)
    elif layout == "closed_form":
        first = r0 * (1 - a) / (1 - a * s) * b
    else:
        raise ValidationError(f"unknown chain layout {layout!r}")

    offsets = [r0]
    radii = [r0]
    if dxi - r0 >= r0:
        d = first
        while True:
            offsets.append(d)
            radii.append(d * s)
            if abs(dxi - d) < d * s:
                break
            d *= b
            if len(offsets) > max_balls:
                raise NumericalError("chain did not reach xi")
    offsets = np.array(offsets)
    radii = np.array(radii)
    if layout == "closed_form" and len(radii) > 1:
        cf_r, cf_d = closed_form_chain(r0, a, cone.theta, len(radii) - 1)
        radii[1:], offsets[1:] = cf_r, cf_d
    centers = z + offsets[:, None] * ell
    n = len(radii) - 1
    gamma, _ = gamma_beta(a, cone.theta, H_a)
    return HarnackChain(a=a, H_a=H_a, beta=b, gamma=gamma,
                        K=K_constant(a, cone.theta, dxi, H_a), centers=centers,
                        radii=radii, n=n, cone=cone, x=x, xi=xi, layout=layout,
                        bound=chain_length_bound(a, cone.theta, r0, dxi, H_a))


# -- positive harmonic test functions ------------------------------------------


class LinearHarmonic:
    """``g . x + c``."""

    def __init__(self, g, c=0.0):
        self.g = np.asarray(g, dtype=float)
        self.c = float(c)

    def __call__(self, x):
        return np.asarray(x, dtype=float) @ self.g + self.c


class LogPotential:
    """``log(R / |x - q|)``: harmonic in the plane away from ``q``."""

    def __init__(self, q, R):
        self.q = np.asarray(q, dtype=float)
        self.R = float(R)

    def __call__(self, x):
        return np.log(self.R / np.linalg.norm(np.asarray(x, dtype=float) - self.q, axis=-1))


class PowerPotential:
    """``scale * |x - q|**(2 - N)`` for ``N >= 3``."""

    def __init__(self, q, scale=1.0):
        self.q = np.asarray(q, dtype=float)
        self.scale = float(scale)
        if len(self.q) < 3:
            raise ValidationError("power potential needs N >= 3")

    def __call__(self, x):
        r = np.linalg.norm(np.asarray(x, dtype=float) - self.q, axis=-1)
        return self.scale * r ** (2 - len(self.q))


class PositiveCombination:
    def __init__(self, weights: Sequence[float], funcs: Sequence[Callable]):
        if any(w < 0 for w in weights):
            raise ValidationError("weights must be non-negative")
        self.weights = list(map(float, weights))
        self.funcs = list(funcs)

    def __call__(self, x):
        return sum(w * f(x) for w, f in zip(self.weights, self.funcs))


def _sphere_directions(N, m):
    if N == 1:
        return np.array([[1.0], [-1.0]])
    if N == 2:
        t = 2 * np.pi * np.arange(m) / m
        return np.stack([np.cos(t), np.sin(t)], axis=1)
    # deterministic Fibonacci-style spread on S^{N-1} for N >= 3
    rng = np.random.default_rng(12345)
    v = rng.standard_normal((m, N))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def _chain_samples(chain: HarnackChain, per_ball=32) -> np.ndarray:
    dirs = _sphere_directions(chain.cone.dim, per_ball)
    pts = [chain.x[None], chain.xi[None], chain.centers]
    for p, r in zip(chain.centers, chain.radii):
        pts.append(p + chain.a * r * dirs)
    return np.concatenate(pts)


def verify_two_sided(evaluator, cone: ConeSpec, x, xi, a, H_a) -> tuple[float, float]:
    """Slack of the two-sided cone Harnack bound for ``evaluator``.

    Returns ``(w(xi) / lower, upper / w(xi))`` with
    ``lower = |x - z|**gamma / K * w(x)`` and ``upper = K / |x - z|**gamma * w(x)``.
    Both are at least 1 whenever the bound holds.
    """
    chain = build_chain(cone, x, xi, a, H_a)
    vals = evaluator(_chain_samples(chain))
    if not np.all(vals > 0):
        raise NumericalError("not a positive solution on the cone: evaluator <= 0 at a chain sample")
    wx = float(evaluator(chain.x[None])[0])
    wxi = float(evaluator(chain.xi[None])[0])
    r0 = float(np.linalg.norm(chain.x - cone.vertex))
    factor = r0 ** chain.gamma / chain.K
    return wxi / (factor * wx), (wx / factor) / wxi


def harnack_ratio_on_ball(evaluator, ball_center, r, a, m=101) -> float:
    """``sup / inf`` of ``evaluator`` over the closed ball of radius ``a r``.

    Samples an ``m x m`` grid clipped to the ball plus ``4 m`` points on its
    boundary circle (planar balls).
    """
    c = np.asarray(ball_center, dtype=float)
    rho = a * r
    g = np.linspace(-rho, rho, m)
    X, Y = np.meshgrid(g, g)
    pts = np.stack([X.ravel(), Y.ravel()], axis=1)
    pts = pts[(pts ** 2).sum(1) <= rho ** 2]
    t = 2 * np.pi * np.arange(4 * m) / (4 * m)
    ring = rho * np.stack([np.cos(t), np.sin(t)], axis=1)
    vals = evaluator(c + np.concatenate([pts, ring]))
    if not np.all(vals > 0):
        raise NumericalError("evaluator is not positive on the ball")
    return float(vals.max() / vals.min())
