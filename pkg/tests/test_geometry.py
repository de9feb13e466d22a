import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from serrinstab import geometry as geo
from serrinstab.errors import NotStarShapedError, ValidationError
from serrinstab.geometry import DomainSpec

finite = st.floats(-3, 3, allow_nan=False)
angles = st.floats(0, 2 * math.pi, allow_nan=False)


def test_disk_four_samples():
    s = geo.boundary_sample(DomainSpec.disk(), 4)
    np.testing.assert_allclose(s.position, [[1, 0], [0, 1], [-1, 0], [0, -1]], atol=1e-15)
    np.testing.assert_allclose(s.normal, -s.position, atol=1e-15)


def test_ellipse_curvature_peaks_on_major_axis():
    a, b = 1.05, 1.0
    s = geo.boundary_sample(DomainSpec.ellipse(a, b), 360)
    k = int(np.argmax(s.curvature))
    assert abs(abs(s.position[k, 0]) - a) < 1e-12
    t = np.arctan2(s.position[:, 1] / b, s.position[:, 0] / a)
    exact = a * b / ((a * np.sin(t)) ** 2 + (b * np.cos(t)) ** 2) ** 1.5
    np.testing.assert_allclose(s.curvature, exact, rtol=1e-10)


def test_not_star_shaped():
    with pytest.raises(NotStarShapedError):
        DomainSpec(center=(0, 0), c0=0.4, cos=(0.5,))
    with pytest.raises(ValidationError):
        DomainSpec(center=(0, 0), c0=-1.0)


@pytest.mark.parametrize("dom, d", [
    (DomainSpec.disk(), 2.0),
    (DomainSpec.ellipse(1.05, 1.0), 2.1),
    (DomainSpec.disk(0.7, center=(3.0, -1.0)), 1.4),
])
def test_diameter(dom, d):
    assert abs(geo.diameter(dom) - d) < 1e-9


@pytest.mark.parametrize("dom, r", [
    (DomainSpec.disk(), 1.0),
    (DomainSpec.ellipse(1.05, 1.0), 1 / 1.05),
    (DomainSpec.ellipse(1.2, 1.0), 1 / 1.2),
    (DomainSpec.disk(2.0), 2.0),
])
def test_interior_sphere_radius(dom, r):
    assert abs(geo.interior_sphere_radius(dom) - r) < 1e-4


def test_signed_distance_examples():
    disk, ell = DomainSpec.disk(), DomainSpec.ellipse(1.05, 1.0)
    assert geo.signed_distance(disk, [0.0, 0.0]) == pytest.approx(1.0, abs=1e-12)
    assert geo.signed_distance(disk, [2.0, 0.0]) == pytest.approx(-1.0, abs=1e-12)
    assert abs(geo.signed_distance(ell, [1.05, 0.0])) < 1e-9


def test_signed_distance_ellipse_against_brute_force():
    ell = DomainSpec.ellipse(1.2, 1.0)
    rng = np.random.default_rng(1)
    p = rng.uniform(-1.6, 1.6, (100, 2))
    t = np.linspace(0, 2 * np.pi, 100001)
    B = np.stack([1.2 * np.cos(t), np.sin(t)], 1)
    brute = np.sqrt(((p[:, None, :] - B[None]) ** 2).sum(-1)).min(1)
    sd = geo.signed_distance(ell, p)
    # the dense sample can only overestimate, by at most ~(spacing/2)^2 / dist
    assert np.all(np.abs(sd) <= brute + 1e-12)
    assert np.all(brute - np.abs(sd) <= 1e-7)
    inside = (p[:, 0] / 1.2) ** 2 + p[:, 1] ** 2 < 1
    assert np.all((sd > 0) == inside)


def test_parallel_set():
    disk = DomainSpec.disk()
    assert geo.parallel_set_contains(disk, 0.5, [0, 0])
    assert not geo.parallel_set_contains(disk, 0.5, [0.6, 0])
    geo.parallel_set_contains(DomainSpec.ellipse(1.05, 1.0), 0.9, [0, 0])
    with pytest.raises(ValidationError, match="parallel set"):
        geo.parallel_set_contains(disk, 1.0, [0, 0])


def test_reflect_examples():
    np.testing.assert_allclose(geo.reflect([1, 0], [1, 0], 0.0), [-1, 0])
    np.testing.assert_allclose(geo.reflect([1, 2], [1, 0], 0.3), [-0.4, 2])
    with pytest.raises(ValidationError):
        geo.reflect([1, 0], [2, 0], 0.0)


@given(finite, finite, finite, finite, angles, finite)
def test_reflect_involution_isometry(x0, x1, y0, y1, ang, mu):
    w = geo.unit(ang)
    x, y = np.array([x0, x1]), np.array([y0, y1])
    rx, ry = geo.reflect(x, w, mu), geo.reflect(y, w, mu)
    np.testing.assert_allclose(geo.reflect(rx, w, mu), x, atol=1e-12)
    assert abs(np.linalg.norm(rx - ry) - np.linalg.norm(x - y)) < 1e-12
    on_plane = x + (mu - x @ w) * w
    np.testing.assert_allclose(geo.reflect(on_plane, w, mu), on_plane, atol=1e-12)


@pytest.mark.parametrize("dom, center, radii", [
    (DomainSpec.disk(), (0, 0), (1, 1)),
    (DomainSpec.ellipse(1.05, 1.0), (0, 0), (1, 1.05)),
    (DomainSpec.disk(), (0.1, 0), (0.9, 1.1)),
])
def test_inner_outer_radii(dom, center, radii):
    np.testing.assert_allclose(geo.inner_outer_radii(dom, center), radii, atol=1e-9)


def test_inner_outer_center_outside():
    with pytest.raises(ValidationError):
        geo.inner_outer_radii(DomainSpec.disk(), (2, 0))


@settings(max_examples=6, deadline=None)
@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(0.3, 3))
def test_diameter_translation_and_scaling(tx, ty, s):
    base = DomainSpec(center=(0, 0), c0=1.0, cos=(0.1, 0.05), sin=(0.0, 0.03))
    d = geo.diameter(base)
    assert abs(geo.diameter(base.translated((tx, ty))) - d) < 1e-9
    assert abs(geo.diameter(base.scaled(s)) - s * d) < 1e-9 * s


def test_json_round_trip(tmp_path):
    dom = DomainSpec.from_function(lambda p: 1 + 0.1 * np.cos(p) + 0.05 * np.sin(3 * p), n_harmonics=6)
    path = tmp_path / "dom.json"
    dom.save(path)
    back = DomainSpec.load(path)
    x = np.random.default_rng(0).uniform(-1, 1, (50, 2))
    np.testing.assert_array_equal(back.radial_gap(x), dom.radial_gap(x))


def test_summary_convexity():
    assert geo.summary(DomainSpec.ellipse(1.2, 1.0)).is_convex
    peanut = DomainSpec(center=(0, 0), c0=1.0, cos=(0.0, 0.3))
    assert not geo.summary(peanut).is_convex
