import math

import numpy as np
import pytest

from serrinstab import geometry as geo
from serrinstab import movingplanes as mp
from serrinstab.errors import CertificateFailure, ValidationError
from serrinstab.geometry import DomainSpec

E1 = np.array([1.0, 0.0])
E2 = np.array([0.0, 1.0])


@pytest.fixture(scope="module")
def egg():
    return DomainSpec.from_function(lambda p: 1 + 0.1 * np.cos(p), n_harmonics=4, convex=True, name="egg")


@pytest.fixture(scope="module")
def peanut():
    return DomainSpec(center=(0, 0), c0=1.0, cos=(0.0, 0.3), name="peanut")


def test_extent():
    assert mp.extent(DomainSpec.disk(), geo.unit(0.7)) == pytest.approx(1, abs=1e-12)
    assert mp.extent(DomainSpec.ellipse(1.05, 1.0), E1) == pytest.approx(1.05, abs=1e-12)
    assert mp.extent(DomainSpec.disk(center=(0.3, 0)), E1) == pytest.approx(1.3, abs=1e-12)


def test_reflected_cap_inside():
    disk = DomainSpec.disk()
    assert mp.reflected_cap_inside(disk, E1, 0.5)
    assert not mp.reflected_cap_inside(disk, E1, -0.1)
    assert mp.reflected_cap_inside(DomainSpec.ellipse(1.05, 1.0), E1, 0.01)


def test_critical_lambda_disks():
    assert abs(mp.critical_lambda(DomainSpec.disk(), E1)) <= 2e-6
    assert mp.critical_lambda(DomainSpec.disk(center=(0.3, 0)), E1) == pytest.approx(0.3, abs=2e-6)


def test_rotation_equivariance():
    alpha = math.radians(30)
    base = DomainSpec.ellipse(1.05, 1.0)
    rot = DomainSpec.ellipse(1.05, 1.0, angle=alpha)
    tol = 1e-6 * geo.diameter(rot)
    lam_rot = mp.critical_lambda(rot, E1)
    lam_base = mp.critical_lambda(base, geo.unit(-alpha))
    assert abs(lam_rot - lam_base) <= 2 * tol
    assert abs(mp.critical_lambda(rot, geo.unit(alpha))) <= 1e-3


def test_non_unit_direction_rejected():
    with pytest.raises(ValidationError):
        mp.critical_lambda(DomainSpec.disk(), [2.0, 0.0])


def test_disk_is_degenerate():
    cap = mp.critical_cap(DomainSpec.disk(), E1)
    assert set(cap.cases) == {"S1", "S2"}
    np.testing.assert_allclose(cap.halfball_center, [0, 0], atol=1e-5)
    assert cap.halfball_radius == pytest.approx(1.0, abs=1e-6)


def test_ellipse_halfball():
    cap = mp.critical_cap(DomainSpec.ellipse(1.05, 1.0), E1)
    assert abs(cap.halfball_center[1]) < 1e-6
    assert cap.halfball_radius == pytest.approx(1 / 1.05, abs=1e-4)


def test_stadium_like_is_s2():
    dom = DomainSpec.ellipse(1.0, 1.4)
    cap = mp.critical_cap(dom, E1)
    assert "S2" in cap.cases
    assert abs(cap.Q[0] - cap.lam) < 1e-9
    assert abs(dom.inward_normal(dom.polar(cap.Q)[0]) @ E1) <= math.sin(mp.TOL_ANGLE)


def test_egg_is_s1(egg):
    cap = mp.critical_cap(egg, E1)
    assert cap.case == "S1"
    assert cap.P @ E1 > cap.lam
    assert abs(geo.signed_distance(egg, geo.reflect(cap.P, E1, cap.lam))) < 1e-5
    # the half-ball through P is in the cap
    rng = np.random.default_rng(0)
    v = rng.standard_normal((2000, 2))
    v *= (rng.random(2000) ** 0.5 / np.linalg.norm(v, axis=1))[:, None]
    pts = cap.halfball_center + cap.halfball_radius * v
    pts = pts[pts @ E1 > cap.lam]
    assert geo.signed_distance(egg, pts).min() > -1e-9


def test_cap_invariants(egg):
    for ang in np.linspace(0, 2 * np.pi, 5, endpoint=False):
        cap = mp.critical_cap(egg, geo.unit(ang))
        assert cap.lam < cap.Lambda
        if cap.case == "S1":
            assert abs(geo.signed_distance(egg, cap.touch_point)) < 1e-9
        else:
            assert abs(cap.touch_point @ cap.omega - cap.lam) < 1e-9
        d = cap.to_dict()
        assert d["case"] == cap.case and d["component_tag"] == cap.component_tag


def test_theta_lower_bound():
    assert mp.theta_lower_bound(2.0, 1.0, 1 / 32) == pytest.approx(math.atan(31 / 128), rel=1e-14)
    assert mp.theta_lower_bound(2.0, 1.0, 1e-12) == pytest.approx(math.atan(0.25), rel=1e-10)
    with pytest.raises(ValidationError):
        mp.theta_lower_bound(2.0, 1.0, 0.5)


def test_lipschitz_cap_bound():
    assert mp.lipschitz_cap_bound(2.0, 1.0) == 4.0
    assert mp.lipschitz_cap_bound(2.1, 1 / 1.05) == pytest.approx(4.41)
    assert mp.lipschitz_cap_bound(4.2, 2 / 1.05) == pytest.approx(4.41)


@pytest.mark.parametrize("dom", [DomainSpec.disk(), DomainSpec.ellipse(1.05, 1.0)], ids=["disk", "ellipse"])
def test_ctheta_certifies_convex(dom):
    g = geo.summary(dom)
    bound = mp.theta_lower_bound(g.d_Omega, g.r_Omega, 1 / 32)
    for omega in (E1, E2):
        cert = mp.ctheta_check(dom, mp.critical_cap(dom, omega), 1 / 32)
        assert cert.theta >= bound - 0.01


def test_ctheta_fails_on_peanut(peanut):
    with pytest.raises(CertificateFailure) as info:
        mp.ctheta_check(peanut, mp.critical_cap(peanut, E2), 1 / 32)
    assert info.value.violating_point is not None
