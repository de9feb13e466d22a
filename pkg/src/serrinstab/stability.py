"""Quantitative symmetry: reflected-difference bounds, symmetric sets and sweeps.

For each direction the critical cap gives a reflected difference ``w``.
Smallness of ``w`` together with linear growth of ``u`` away from the
boundary shows that a symmetric set ``X(delta)`` is squeezed between the
parallel set ``Omega(sigma)`` and the domain.  Intersecting critical planes
in two orthogonal directions gives an approximate centre, and the annulus
gap about it is compared with the seminorm of ``u_nu``.

All constants (``C``, ``M``, ``K_lower``, ``K_upper``) are measured from
the discrete solution; none of the theoretical constants is computed.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import cached_property, lru_cache

import numpy as np
from scipy import ndimage
from scipy.spatial import cKDTree

from . import geometry as geo
from . import harnack
from . import movingplanes as mp
from . import pde
from .errors import RegimeError, SerrinError, ValidationError
from .geometry import DomainSpec

__all__ = [
    "SigmaComponent",
    "SymmetricSet",
    "SupWCheck",
    "InclusionResult",
    "Parameters",
    "CenterResult",
    "StabilityRecord",
    "FitResult",
    "FamilySpec",
    "FamilyResult",
    "sigma_delta",
    "sup_w_bound_check",
    "build_X",
    "inclusion_check",
    "condition_Ksigma",
    "choose_parameters",
    "approximate_center",
    "reflection_defect",
    "tau_theory",
    "tau_torsion",
    "exponent_torsion",
    "bnst_crossover",
    "bnst_verdict",
    "fit_loglog",
    "run_member",
    "run_family",
]

T_DEFAULT = 1 / 32
A_DEFAULT = 0.5
ETA_DEFAULT = 0.1
GAP_NOISE = 1e-5
MIN_UNU_FRACTION = 0.3
SIGMA_FACTORS = (1.5, 2.0, 4.0, 8.0)
DELTA_DIVISORS = (32, 64, 128)
N_PROBES = 10000


# --- sets ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SigmaComponent:
    """Grid component of ``Omega(delta)`` beyond the critical plane.

    ``labels`` labels all grid nodes of ``Omega(delta) ∩ {x . omega > lambda}``
    by connected component; ``label`` is the one holding the cap's seed.
    """

    grid: pde.Grid
    omega: np.ndarray
    lam: float
    delta: float
    labels: np.ndarray
    label: int

    @cached_property
    def mask(self) -> np.ndarray:
        """Interior nodes in the component."""
        return self.labels[self.grid.ij[:, 0], self.grid.ij[:, 1]] == self.label

    @cached_property
    def _tree(self):
        ij = np.argwhere(self.labels > 0)
        return cKDTree(self.grid.origin + self.grid.h * ij), self.labels[ij[:, 0], ij[:, 1]]

    def member(self, x, sd=None) -> np.ndarray:
        """Exact geometric test plus the component of the nearest labelled node."""
        x = np.atleast_2d(np.asarray(x, float))
        if sd is None:
            sd = geo.signed_distance(self.grid.domain, x)
        ok = (sd > self.delta) & (x @ self.omega > self.lam)
        if ok.any():
            tree, lab = self._tree
            _, k = tree.query(x[ok])
            ok[np.nonzero(ok)[0]] = lab[k] == self.label
        return ok


def sigma_delta(domain: DomainSpec, cap: mp.CriticalCap, field_or_grid, delta: float,
                check_regime: bool = True) -> SigmaComponent:
    """Flood-fill the component of ``Omega(delta)`` beyond the plane seeded at the cap."""
    grid = field_or_grid.grid if isinstance(field_or_grid, pde.Field) else field_or_grid
    r = geo.interior_sphere_radius(domain)
    if not delta > 0 or (check_regime and delta > r / 32 * (1 + 1e-12)):
        raise ValidationError(f"delta={delta:.6g} outside (0, r_Omega/32 = {r / 32:.6g}]")
    in_set = (grid.node_sd > delta) & (grid.points @ cap.omega > cap.lam)
    if not in_set.any():
        raise ValidationError("empty component: no nodes in the parallel set beyond the plane")
    labels, _ = ndimage.label(grid.to_full(in_set.astype(float)) > 0)
    cand = np.nonzero(in_set)[0]
    k = cand[np.argmin(np.linalg.norm(grid.points[cand] - cap.seed, axis=1))]
    label = int(labels[grid.ij[k, 0], grid.ij[k, 1]])
    return SigmaComponent(grid, cap.omega, cap.lam, float(delta), labels, label)


@dataclass(frozen=True, eq=False)
class SymmetricSet:
    """``Sigma_delta`` united with its mirror image and the shared plane section."""

    sigma: SigmaComponent

    @property
    def omega(self):
        return self.sigma.omega

    @property
    def lam(self):
        return self.sigma.lam

    @property
    def delta(self):
        return self.sigma.delta

    def contains(self, x, sd=None, sd_reflected=None) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, float))
        xr = geo.reflect(x, self.omega, self.lam)
        inside = self.sigma.member(x, sd) | self.sigma.member(xr, sd_reflected)
        on_plane = np.abs(x @ self.omega - self.lam) <= 1e-12 * max(1.0, abs(self.lam))
        if on_plane.any():
            nudged = x[on_plane] + 1e-9 * self.omega
            inside[on_plane] |= self.sigma.member(nudged)
        return inside


def build_X(sigma_component: SigmaComponent, cap=None) -> SymmetricSet:
    if not sigma_component.mask.any():
        raise ValidationError("empty component")
    return SymmetricSet(sigma_component)


@dataclass(frozen=True)
class InclusionResult:
    ok: bool
    witness: np.ndarray | None
    failed: str | None
    n_checked: int


@lru_cache(maxsize=32)
def _probes(domain: DomainSpec, omega: tuple, lam: float, n: int, seed: int):
    rng = np.random.default_rng(seed)
    lo, hi = geo.bounding_box(domain)
    pts = rng.uniform(lo, hi, size=(n, 2))
    om = np.asarray(omega)
    sd = geo.signed_distance(domain, pts)
    sdr = geo.signed_distance(domain, geo.reflect(pts, om, lam))
    return pts, sd, sdr


def inclusion_check(domain: DomainSpec, X: SymmetricSet, sigma: float, n_samples: int = N_PROBES,
                    seed: int = 0, check_regime: bool = True) -> InclusionResult:
    """Sampled test of ``Omega(sigma) ⊂ X ⊂ Omega``.

    Samples are seeded uniform points in the bounding box plus the grid
    nodes of the component and their mirror images.  Returns the first
    violating point.
    """
    r = geo.interior_sphere_radius(domain)
    if check_regime and max(sigma, X.delta) > r / 16 * (1 + 1e-12):
        raise ValidationError(f"sigma and delta must not exceed r_Omega/16 = {r / 16:.6g}")
    pts, sd, sdr = _probes(domain, tuple(map(float, X.omega)), float(X.lam), n_samples, seed)
    inX = X.contains(pts, sd, sdr)
    bad = (sd > sigma) & ~inX
    if bad.any():
        return InclusionResult(False, pts[np.argmax(bad)], "Omega(sigma) in X", len(pts))
    bad = inX & ~(sd > 0)
    if bad.any():
        return InclusionResult(False, pts[np.argmax(bad)], "X in Omega", len(pts))
    g = X.sigma.grid
    nodes = g.points[X.sigma.mask]
    mirror = geo.reflect(nodes, X.omega, X.lam)
    out = domain.radial_gap(mirror) <= 0
    if out.any():
        return InclusionResult(False, mirror[np.argmax(out)], "X in Omega", len(pts) + len(nodes))
    return InclusionResult(True, None, None, len(pts) + len(nodes))


# --- bounds -------------------------------------------------------------------------


@dataclass(frozen=True)
class SupWCheck:
    sup_w: float
    rhs: float
    C_emp: float
    sup_w_G: float
    MC_emp: float
    M_emp: float
    indeterminate: bool
    anomaly: bool


def _gated_max(w, mask):
    v = w[mask]
    v = v[np.isfinite(v)]
    return float(v.max()) if v.size else 0.0


def sup_w_bound_check(domain: DomainSpec, cap: mp.CriticalCap, field: pde.Field, delta: float,
                      gamma: float, seminorm: float, rd: pde.ReflectedDifference | None = None,
                      t: float = T_DEFAULT) -> SupWCheck:
    """Measured ``sup w`` on ``Sigma_delta`` and ``G_lambda`` against ``delta^-gamma [u_nu]``.

    ``C_emp = sup_{Sigma_delta} w / (delta^-gamma [u_nu])`` and
    ``MC_emp = sup_{G_lambda} w / [u_nu]``.  ``M_emp`` compares ``sup w`` on
    ``G_lambda`` with ``sup w`` on the part of the cap component farther
    than ``r_Omega/64`` from its boundary.
    """
    rd = pde.reflect_difference(field, cap) if rd is None else rd
    g = field.grid
    r = geo.interior_sphere_radius(domain)
    full_w = np.full(g.n, np.nan)
    full_w[rd.node] = rd.w
    sup_w = _gated_max(full_w, sigma_delta(domain, cap, g, delta).mask)
    sup_G = _gated_max(full_w, sigma_delta(domain, cap, g, t * r).mask)
    inner = sigma_delta(domain, cap, g, r / 64).mask & (g.points @ cap.omega - cap.lam > r / 64)
    sup_inner = _gated_max(full_w, inner)
    rhs = delta ** (-gamma) * seminorm
    indeterminate = not seminorm > 0
    anomaly = indeterminate and sup_w > 10 * field.tol_num
    C_emp = sup_w / rhs if not indeterminate else math.nan
    MC = sup_G / seminorm if not indeterminate else math.nan
    M = sup_G / sup_inner if sup_inner > 10 * field.tol_num else math.nan
    return SupWCheck(sup_w, rhs, C_emp, sup_G, MC, M, indeterminate, anomaly)


def condition_Ksigma(K_lower, K_upper, C_emp, gamma, delta, sigma, seminorm) -> bool:
    """Strict inequality ``K_lower sigma > C delta^-gamma [u_nu] + K_upper delta``."""
    return bool(K_lower * sigma > C_emp * delta ** (-gamma) * seminorm + K_upper * delta)


@dataclass(frozen=True)
class Parameters:
    delta: float
    sigma: float
    eps: float


def choose_parameters(C_emp, K_lower, K_upper, gamma, seminorm, r_Omega) -> Parameters:
    """Balanced ``delta``, ``sigma = 4 K_upper/K_lower delta`` and the smallness threshold."""
    if min(C_emp, K_lower, K_upper, r_Omega) <= 0 or gamma < 0:
        raise ValidationError("constants must be positive")
    eps = (K_upper / C_emp) * (r_Omega * K_lower / (64 * K_upper)) ** (gamma + 1)
    if seminorm > eps:
        raise RegimeError(f"outside stability regime: seminorm {seminorm:.3e} > eps {eps:.3e}")
    delta = (C_emp / K_upper * seminorm) ** (1 / (gamma + 1))
    sigma = 4 * K_upper / K_lower * delta
    assert delta <= sigma and sigma <= r_Omega / 16 * (1 + 1e-12)
    return Parameters(delta, sigma, eps)


# --- centre -------------------------------------------------------------------------


def reflection_defect(domain: DomainSpec, omega, lam: float, scope: str = "cap",
                      m: int = geo.DEFAULT_SAMPLES) -> float:
    """``sup dist(x^lambda, boundary)`` over boundary samples.

    ``scope="cap"`` restricts to ``x . omega > lambda``; ``"all"`` uses the
    whole boundary, which makes defects add up under composition.
    """
    omega = geo._as_unit(omega)
    s = geo._dense(domain, m)
    x = s.position if scope == "all" else s.position[s.position @ omega > lam]
    if scope not in ("cap", "all"):
        raise ValidationError(f"unknown scope {scope!r}")
    if not len(x):
        return 0.0
    return float(np.max(np.abs(geo.signed_distance(domain, geo.reflect(x, omega, lam)))))


@dataclass(frozen=True)
class CenterResult:
    center: np.ndarray
    sigma_emp: float
    audit: float
    bound: float

    @property
    def ok(self) -> bool:
        return self.audit <= self.bound


def approximate_center(domain: DomainSpec, caps, m: int = geo.DEFAULT_SAMPLES) -> CenterResult:
    """Intersection of the critical lines for ``e1`` and ``e2``.

    The composition of the two reflections is the point reflection through
    the centre.  The audit measures how far that map sends boundary points
    from the boundary and compares it with ``2 N sigma_emp``, where
    ``sigma_emp`` is half the largest whole-boundary reflection defect.
    """
    caps = list(caps)
    om = np.array([c.omega for c in caps])
    if len(caps) != 2 or not np.allclose(om @ om.T, np.eye(2), atol=1e-12):
        raise ValidationError("need critical caps for two orthogonal directions")
    center = np.linalg.solve(om, np.array([c.lam for c in caps]))
    sigma = max(reflection_defect(domain, c.omega, c.lam, "all", m) for c in caps) / 2
    x = geo._dense(domain, m).position
    audit = float(np.max(np.abs(geo.signed_distance(domain, 2 * center - x))))
    return CenterResult(center, sigma, audit, 2 * len(caps) * sigma * (1 + 1e-9) + 1e-12)


# --- exponents ----------------------------------------------------------------------


def tau_theory(gamma: float) -> float:
    if not gamma > 0:
        raise ValidationError("gamma must be positive")
    return 1.0 / (1.0 + gamma)


def tau_torsion(N: int, d_Omega: float, r_Omega: float) -> float:
    if N < 1 or d_Omega <= 0 or r_Omega <= 0:
        raise ValidationError("positive inputs required")
    return 1.0 + N * math.sqrt(1.0 + (2 * d_Omega / r_Omega) ** 2)


def exponent_torsion(N, d_Omega, r_Omega, eta: float = ETA_DEFAULT) -> float:
    """Stability exponent ``1/(tau + eta)`` of the torsion problem."""
    if not eta > 0:
        raise ValidationError("eta must be positive")
    return 1.0 / (tau_torsion(N, d_Omega, r_Omega) + eta)


def bnst_crossover(N: int) -> float:
    """Ratio ``d/r`` below which the torsion exponent beats the earlier one."""
    if N < 2:
        raise ValidationError("N must be at least 2")
    return math.sqrt((2 * N * N + N - 2.5) / N)


def bnst_verdict(N, d_Omega, r_Omega) -> str:
    ratio, cross = d_Omega / r_Omega, bnst_crossover(N)
    word = "favorable" if ratio <= cross else "not favorable"
    rel = "<=" if ratio <= cross else ">"
    return f"d/r = {ratio:.6g} {rel} crossover {cross:.6g}: comparison {word}"


@dataclass(frozen=True)
class FitResult:
    slope: float
    intercept: float
    residual: float
    ci_low: float
    ci_high: float
    n: int


def fit_loglog(x, y, n_boot: int = 200, seed: int = 0) -> FitResult:
    """OLS of ``log y`` on ``log x`` with a seeded residual-bootstrap 95% interval."""
    lx, ly = np.log(np.asarray(x, float)), np.log(np.asarray(y, float))
    if len(lx) < 2:
        raise ValidationError("need at least two points to fit")
    slope, icpt = np.polyfit(lx, ly, 1)
    fit = icpt + slope * lx
    res = ly - fit
    rng = np.random.default_rng(seed)
    boots = np.array([np.polyfit(lx, fit + rng.choice(res, size=len(res)), 1)[0]
                      for _ in range(n_boot)])
    lo, hi = np.percentile(boots, [2.5, 97.5])
    return FitResult(float(slope), float(icpt), float(np.sqrt(np.mean(res ** 2))),
                     float(lo), float(hi), len(lx))


# --- pipeline -----------------------------------------------------------------------


@dataclass
class StabilityRecord:
    id: str
    h: float
    seminorm: float
    lambdas: dict
    defects: dict
    center: list
    r_i: float
    r_e: float
    gap: float
    gamma: float
    tau_theory: float
    K_lower: float
    K_upper: float
    C_emp: float
    MC_emp: float
    M_emp: float
    min_unu: float
    sigma_emp: float
    theta: float
    center_audit: float
    center_bound: float
    implication: list = field(default_factory=list)
    parameters: dict | None = None
    flags: list = field(default_factory=list)
    excluded: bool = False
    family_value: float = math.nan

    @property
    def implication_ok(self) -> bool:
        return all(inc for cond, inc in ((e["condition"], e["inclusion"]) for e in self.implication) if cond)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class FamilySpec:
    """A one-parameter family of test problems.

    ``ellipse``: semi-axes ``(a, b)`` for each ``a`` in ``values``, torsion.
    ``ball``: disks of radius ``values``, torsion.
    ``eigen``: ``phi_1 / n`` for ``n`` in ``values`` on the ellipse ``(a, b)``.
    """

    kind: str
    values: tuple
    b: float = 1.0
    a: float = 1.2
    center: tuple = (0.0, 0.0)

    def __post_init__(self):
        if self.kind not in ("ellipse", "ball", "eigen"):
            raise ValidationError(f"unknown family {self.kind!r}")
        if len(self.values) < 1:
            raise ValidationError("family has no members")

    def members(self):
        if self.kind == "ellipse":
            return [(f"ellipse-a{v:.6g}", DomainSpec.ellipse(v, self.b, center=self.center), None, v)
                    for v in self.values]
        if self.kind == "ball":
            return [(f"ball-r{v:.6g}", DomainSpec.disk(v, center=self.center), None, v)
                    for v in self.values]
        dom = DomainSpec.ellipse(self.a, self.b, center=self.center)
        return [(f"eigen-n{v:g}", dom, v, v) for v in self.values]


@lru_cache(maxsize=16)
def _caps(domain: DomainSpec) -> tuple:
    return tuple(mp.critical_cap(domain, e) for e in (np.array([1.0, 0.0]), np.array([0.0, 1.0])))


@lru_cache(maxsize=16)
def _theta_certified(domain: DomainSpec, t: float) -> float:
    return min(mp.ctheta_check(domain, c, t).theta for c in _caps(domain))


def _gamma_for(field: pde.Field, theta: float, a: float) -> float:
    f = field.nonlinearity
    if f is None or f.lipschitz_L == 0:
        return harnack.gamma_torsion(a, theta, 2)
    r = geo.interior_sphere_radius(field.domain)
    H = harnack.harnack_constant_general(a, 2, r, f.lipschitz_L)
    return harnack.gamma_beta(a, theta, H)[0]


def run_member(record_id: str, domain: DomainSpec, h: float, eigen_n=None, t: float = T_DEFAULT,
               a: float = A_DEFAULT, seed: int = 0, family_value: float = math.nan) -> StabilityRecord:
    """Full pipeline for one domain: solve, caps, centre, radii, bounds, inclusions."""
    g = geo.summary(domain)
    grid = pde.discretize(domain, h)
    if eigen_n is None:
        field_ = pde.solve_semilinear(grid, pde.NonlinearitySpec.torsion())
    else:
        field_ = pde.eigen_demo(grid, eigen_n)
    bd = field_.boundary
    semi = pde.seminorm_unu(bd)
    flags = []
    if bd.flagged.any():
        flags.append("unu_first_order")
    if not g.is_convex:
        flags.append("nonconvex")
    if field_.nonlinearity.f0 == 0:
        flags.append("f0_zero")

    caps = list(_caps(domain))
    theta = math.nan
    try:
        theta = _theta_certified(domain, t)
        gamma = _gamma_for(field_, mp.theta_lower_bound(g.d_Omega, g.r_Omega, t), a)
    except SerrinError as exc:
        flags.append(f"ctheta_failed:{type(exc).__name__}")
        gamma = math.nan
    cres = approximate_center(domain, caps)
    if not cres.ok:
        flags.append("center_audit_failed")
    r_i, r_e = geo.inner_outer_radii(domain, cres.center)
    K_lo, K_hi = pde.growth_constants(field_, 2 * h)

    deltas = [g.r_Omega / k for k in DELTA_DIVISORS if g.r_Omega / k >= h * (1 - 1e-12)]
    if not deltas:
        flags.append("grid_too_coarse_for_delta")
    implication, C_all, MC_all, M_all = [], [], [], []
    for cap in caps:
        rd = pde.reflect_difference(field_, cap)
        if rd.n_excluded:
            flags.append(f"w_excluded:{rd.n_excluded}")
        if math.isnan(gamma):
            continue
        checks = {d: sup_w_bound_check(domain, cap, field_, d, gamma, semi, rd, t) for d in deltas}
        C = max((c.C_emp for c in checks.values()), default=math.nan)
        C_all.append(C)
        MC_all.append(next(iter(checks.values())).MC_emp if checks else math.nan)
        M_all.append(next(iter(checks.values())).M_emp if checks else math.nan)
        if any(c.anomaly for c in checks.values()):
            flags.append("zero_seminorm_anomaly")
        Cuse = 0.0 if math.isnan(C) else C
        for d in deltas:
            X = build_X(sigma_delta(domain, cap, grid, d))
            for fac in SIGMA_FACTORS:
                s = fac * d
                if s > g.r_Omega / 16 * (1 + 1e-12):
                    continue
                cond = condition_Ksigma(K_lo, K_hi, Cuse, gamma, d, s, semi)
                inc = inclusion_check(domain, X, s, seed=seed)
                implication.append({"omega": cap.omega.tolist(), "delta": d, "sigma": s,
                                    "condition": cond, "inclusion": inc.ok,
                                    "witness": None if inc.witness is None else inc.witness.tolist()})
    C_emp = float(np.nanmax(C_all)) if C_all and np.isfinite(C_all).any() else math.nan
    params = None
    if np.isfinite(C_emp) and C_emp > 0 and np.isfinite(gamma):
        try:
            params = asdict(choose_parameters(C_emp, K_lo, K_hi, gamma, semi, g.r_Omega))
        except RegimeError:
            flags.append("outside_regime")
    rec = StabilityRecord(
        id=record_id, h=h, seminorm=semi,
        lambdas={"e1": caps[0].lam, "e2": caps[1].lam},
        defects={k: reflection_defect(domain, c.omega, c.lam, "cap") for k, c in zip(("e1", "e2"), caps)},
        center=cres.center.tolist(), r_i=r_i, r_e=r_e, gap=r_e - r_i,
        gamma=gamma, tau_theory=tau_theory(gamma) if np.isfinite(gamma) else math.nan,
        K_lower=K_lo, K_upper=K_hi, C_emp=C_emp,
        MC_emp=float(np.nanmax(MC_all)) if MC_all and np.isfinite(MC_all).any() else math.nan,
        M_emp=float(np.nanmax(M_all)) if M_all and np.isfinite(M_all).any() else math.nan,
        min_unu=float(bd.u_nu.min()), sigma_emp=cres.sigma_emp, theta=theta,
        center_audit=cres.audit, center_bound=cres.bound,
        implication=implication, parameters=params, flags=flags, family_value=family_value,
    )
    if not rec.implication_ok:
        rec.flags.append("implication_violated")
    return rec


def _member_task(args):
    rid, dom, h, n, t, a, seed, val = args
    try:
        return run_member(rid, dom, h, n, t, a, seed, val)
    except SerrinError as exc:
        nan = math.nan
        return StabilityRecord(rid, h, nan, {}, {}, [nan, nan], nan, nan, nan, nan, nan, nan, nan,
                               nan, nan, nan, nan, nan, nan, nan, nan,
                               flags=[f"pipeline_failed:{type(exc).__name__}:{exc}"], excluded=True,
                               family_value=val)


@dataclass
class FamilyResult:
    family: FamilySpec
    records: list
    fit: FitResult | None
    fit_note: str
    checks: dict


def worker_count(default: int = 1) -> int:
    raw = os.environ.get("SERRINSTAB_WORKERS")
    if raw is None:
        return default
    try:
        n = int(raw)
    except ValueError as exc:
        raise ValidationError(f"SERRINSTAB_WORKERS must be an integer, got {raw!r}") from exc
    if n < 1:
        raise ValidationError("SERRINSTAB_WORKERS must be at least 1")
    return n


def run_family(family: FamilySpec, h: float, workers: int | None = None, t: float = T_DEFAULT,
               a: float = A_DEFAULT, seed: int = 0, n_boot: int = 200) -> FamilyResult:
    """Run every member, flag degenerate ones and fit ``log gap`` against ``log [u_nu]``.

    Members may be computed in parallel; records come back in member order.
    """
    if not 0 < t < 0.5:
        raise ValidationError("t must lie in (0, 1/2)")
    workers = worker_count() if workers is None else workers
    tasks = [(rid, dom, h, n, t, a, seed, val) for rid, dom, n, val in family.members()]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as pool:
            records = list(pool.map(_member_task, tasks))
    else:
        records = [_member_task(task) for task in tasks]

    checks = {}
    ok = [r for r in records if not r.excluded]
    if ok:
        best = max(r.min_unu for r in ok)
        for r in ok:
            if r.min_unu < MIN_UNU_FRACTION * best:
                r.flags.append("min_unu_low")
        if any("f0_zero" in r.flags for r in ok) and any("min_unu_low" in r.flags for r in ok):
            for r in ok:
                r.excluded = True
                r.flags.append("excluded:min_unu_to_zero")
    if family.kind == "eigen" and len(ok) > 1:
        sem = np.array([r.seminorm for r in ok])
        vals = np.array([r.family_value for r in ok])
        checks["seminorm_ratio_error"] = float(np.max(np.abs(sem[:-1] / sem[1:] - vals[1:] / vals[:-1])))
        checks["gap_spread"] = float(np.ptp([r.gap for r in ok]))
    if family.kind == "ellipse" and len(ok) > 1:
        order = np.argsort([r.family_value for r in ok])
        series = {"seminorm": [ok[i].seminorm for i in order], "gap": [ok[i].gap for i in order],
                  "defect_e1": [ok[i].defects.get("e1", 0.0) for i in order],
                  "defect_e2": [ok[i].defects.get("e2", 0.0) for i in order]}
        checks["monotone_worst_drop"] = float(min(np.min(np.diff(v)) for v in series.values()))

    fit, note = None, ""
    usable = [r for r in records if not r.excluded]
    noise = [GAP_NOISE * geo.diameter(dom) for _, dom, _, _ in family.members()]
    if records and all(r.excluded for r in records):
        note = "excluded: min u_nu tends to zero with f(0) = 0" if any(
            "excluded:min_unu_to_zero" in r.flags for r in records) else "excluded: all members failed"
    elif usable and all(r.gap < nz for r, nz in zip(records, noise) if not r.excluded):
        note = "degenerate: all gaps below noise floor"
        for r in usable:
            r.flags.append("gap_below_noise")
    else:
        pts = [(r.seminorm, r.gap) for r in usable if r.seminorm > 0 and r.gap > 0]
        if len(pts) < 5:
            note = f"skipped: {len(pts)} usable points, need 5"
        else:
            x, y = zip(*pts)
            fit = fit_loglog(x, y, n_boot=n_boot, seed=seed)
            note = "ok"
    return FamilyResult(family, records, fit, note, checks)
