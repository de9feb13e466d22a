import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from serrinstab import geometry as geo
from serrinstab import movingplanes as mp
from serrinstab import pde
from serrinstab import stability as sb
from serrinstab.errors import RegimeError, ValidationError
from serrinstab.geometry import DomainSpec

E1 = np.array([1.0, 0.0])
E2 = np.array([0.0, 1.0])


@pytest.fixture(scope="module")
def ellipse32():
    dom = DomainSpec.ellipse(1.05, 1.0)
    return dom, pde.discretize(dom, 1 / 32), mp.critical_cap(dom, E1)


def test_tau_formulas():
    assert sb.tau_theory(1.0) == 0.5
    r = 1 / 1.05
    assert sb.tau_torsion(2, 2.1, r) == pytest.approx(1 + 2 * math.sqrt(1 + (4.2 / r) ** 2))
    assert sb.tau_torsion(2, 2.1, r) == pytest.approx(10.044, abs=1e-3)
    assert sb.exponent_torsion(2, 2.0, 1.0, eta=0.1) == pytest.approx(1 / (1 + 2 * math.sqrt(17) + 0.1))
    with pytest.raises(ValidationError):
        sb.tau_theory(0.0)
    with pytest.raises(ValidationError):
        sb.exponent_torsion(2, 2.0, 1.0, eta=0.0)


def test_crossover_verdict():
    assert sb.bnst_crossover(2) == pytest.approx(math.sqrt(3.75))
    assert "not favorable" not in sb.bnst_verdict(2, 1.9, 1.0)
    assert "not favorable" in sb.bnst_verdict(2, 2.1, 1 / 1.05)
    with pytest.raises(ValidationError):
        sb.bnst_crossover(1)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.05, 3.0), st.floats(-2.0, 2.0))
def test_fit_exact_power_law(p, c):
    x = np.geomspace(1e-4, 1e-1, 6)
    fit = sb.fit_loglog(x, math.exp(c) * x ** p, n_boot=50)
    assert fit.slope == pytest.approx(p, abs=1e-9)
    assert fit.intercept == pytest.approx(c, abs=1e-8)
    assert fit.ci_low <= fit.slope + 1e-9 and fit.slope - 1e-9 <= fit.ci_high
    assert fit.n == 6


def test_fit_is_seeded():
    rng = np.random.default_rng(3)
    x = np.geomspace(1e-3, 1, 8)
    y = x ** 0.7 * np.exp(0.05 * rng.standard_normal(8))
    a, b = sb.fit_loglog(x, y, seed=4), sb.fit_loglog(x, y, seed=4)
    assert (a.ci_low, a.ci_high) == (b.ci_low, b.ci_high)
    with pytest.raises(ValidationError):
        sb.fit_loglog([1.0], [1.0])


def test_sigma_delta_component(ellipse32):
    dom, grid, cap = ellipse32
    r = geo.interior_sphere_radius(dom)
    comp = sb.sigma_delta(dom, cap, grid, r / 32)
    pts = grid.points[comp.mask]
    assert len(pts) > 0
    assert np.all(pts @ E1 > cap.lam)
    assert np.all(grid.node_sd[comp.mask] > r / 32)
    with pytest.raises(ValidationError):
        sb.sigma_delta(dom, cap, grid, r / 4)
    with pytest.raises(ValidationError):
        sb.sigma_delta(dom, cap, grid, 0.0)


def test_inclusion_on_symmetric_ellipse(ellipse32):
    dom, grid, cap = ellipse32
    r = geo.interior_sphere_radius(dom)
    X = sb.build_X(sb.sigma_delta(dom, cap, grid, r / 32))
    res = sb.inclusion_check(dom, X, r / 16, n_samples=2000)
    assert res.ok and res.witness is None
    # sigma below delta cannot hold: points between the two levels lie outside X
    bad = sb.inclusion_check(dom, X, r / 128, n_samples=2000)
    assert not bad.ok and bad.failed == "Omega(sigma) in X"
    assert geo.signed_distance(dom, bad.witness) > r / 128


def test_condition_and_parameters():
    assert sb.condition_Ksigma(1.0, 1.0, 1.0, 1.0, 0.01, 0.05, 1e-6)
    assert not sb.condition_Ksigma(1.0, 1.0, 1.0, 1.0, 0.01, 0.005, 1e-6)
    p = sb.choose_parameters(1.0, 0.5, 1.0, 2.0, 1e-12, 1.0)
    assert p.delta == pytest.approx(1e-4)
    assert p.sigma == pytest.approx(8e-4)
    assert p.delta <= p.sigma <= 1 / 16
    with pytest.raises(RegimeError):
        sb.choose_parameters(1.0, 0.5, 1.0, 2.0, 1.0, 1.0)
    with pytest.raises(ValidationError):
        sb.choose_parameters(0.0, 0.5, 1.0, 2.0, 1e-12, 1.0)


def test_approximate_center_translated_ellipse():
    dom = DomainSpec.ellipse(1.1, 1.0, center=(0.3, -0.2))
    res = sb.approximate_center(dom, [mp.critical_cap(dom, E1), mp.critical_cap(dom, E2)])
    np.testing.assert_allclose(res.center, [0.3, -0.2], atol=1e-5)
    assert res.ok
    with pytest.raises(ValidationError):
        sb.approximate_center(dom, [mp.critical_cap(dom, E1)])


def test_reflection_defect():
    dom = DomainSpec.ellipse(1.1, 1.0)
    assert sb.reflection_defect(dom, E1, 0.0) < 1e-9
    assert sb.reflection_defect(dom, E1, 0.05, scope="all") > 0.05
    with pytest.raises(ValidationError):
        sb.reflection_defect(dom, E1, 0.0, scope="half")


def test_family_validation():
    with pytest.raises(ValidationError):
        sb.FamilySpec("square", (1.0,))
    with pytest.raises(ValidationError):
        sb.FamilySpec("ball", ())
    ids = [m[0] for m in sb.FamilySpec("eigen", (1, 2)).members()]
    assert ids == ["eigen-n1", "eigen-n2"]
    with pytest.raises(ValidationError):
        sb.run_family(sb.FamilySpec("ball", (1.0,)), 1 / 32, t=0.6)


def test_ball_family_is_degenerate():
    res = sb.run_family(sb.FamilySpec("ball", (0.9, 1.0)), 1 / 32, workers=1)
    assert res.fit is None and res.fit_note.startswith("degenerate")
    for r in res.records:
        assert r.gap < sb.GAP_NOISE * 2 * r.family_value
        assert "gap_below_noise" in r.flags


def test_eigen_family_excluded():
    res = sb.run_family(sb.FamilySpec("eigen", (1, 4)), 1 / 32, workers=1)
    assert all(r.excluded for r in res.records)
    assert res.fit is None and "excluded" in res.fit_note
    assert res.checks["seminorm_ratio_error"] < 1e-9


def test_worker_count(monkeypatch):
    monkeypatch.delenv("SERRINSTAB_WORKERS", raising=False)
    assert sb.worker_count(3) == 3
    monkeypatch.setenv("SERRINSTAB_WORKERS", "2")
    assert sb.worker_count() == 2
    for bad in ("0", "two"):
        monkeypatch.setenv("SERRINSTAB_WORKERS", bad)
        with pytest.raises(ValidationError):
            sb.worker_count()


def test_parallel_matches_serial():
    fam = sb.FamilySpec("ellipse", (1.05, 1.1))
    serial = sb.run_family(fam, 1 / 32, workers=1)
    parallel = sb.run_family(fam, 1 / 32, workers=2)
    # compare serialized records so that NaN fields match
    dump = lambda res: json.dumps([r.to_dict() for r in res.records], sort_keys=True)
    assert dump(serial) == dump(parallel)
