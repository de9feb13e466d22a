import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from serrinstab import harnack as hk
from serrinstab.errors import NumericalError, ValidationError

PI = math.pi


def test_harmonic_constant():
    assert hk.harnack_constant_harmonic(0.5, 2) == 9
    assert hk.harnack_constant_harmonic(0.5, 3) == pytest.approx(27, rel=1e-15)
    assert hk.harnack_constant_harmonic(1e-12, 2) == pytest.approx(1, abs=1e-10)
    with pytest.raises(ValidationError):
        hk.harnack_constant_harmonic(1.0, 2)


def test_general_constant():
    assert hk.harnack_constant_general(0.5, 2, 1.0, 0.0, base=5.0) == pytest.approx(5 ** math.sqrt(2))
    assert hk.harnack_constant_general(0.5, 2, 1.0, 1.0, base=9.0) == pytest.approx(9 ** (math.sqrt(2) + 1))
    assert hk.harnack_constant_general(0.3, 3, 2.0, 4.0, base=1.0) == 1.0


def test_gamma_beta_examples():
    g, b = hk.gamma_beta(0.5, PI / 2, 9)
    assert (g, b) == (pytest.approx(2, rel=1e-15), pytest.approx(3, rel=1e-15))
    g, b = hk.gamma_beta(0.5, PI / 6, 9)
    assert b == pytest.approx(5 / 3) and g == pytest.approx(4.3013, abs=1e-4)
    assert hk.gamma_beta(0.5, PI / 6, 1.0)[0] == 0
    with pytest.raises(ValidationError):
        hk.gamma_beta(0.5, 0.0, 9)


def test_gamma_torsion():
    assert hk.gamma_torsion(0.7, PI / 2, 2) == pytest.approx(2, rel=1e-14)
    assert hk.gamma_torsion(0.5, PI / 6, 2) == pytest.approx(4.3013, abs=1e-4)
    assert hk.gamma_torsion(0.5, PI / 2, 3) == pytest.approx(3, rel=1e-14)


@given(st.floats(0.01, 0.99), st.floats(0.01, PI / 2), st.integers(1, 5))
def test_gamma_torsion_at_least_N(a, theta, N):
    assert hk.gamma_torsion(a, theta, N) >= N * (1 - 1e-14)


def test_gamma_decreasing_in_theta():
    thetas = np.linspace(0.05, PI / 2, 60)
    g = [hk.gamma_beta(0.5, t, 9)[0] for t in thetas]
    assert np.all(np.diff(g) < 0)


def test_K_constant():
    assert hk.K_constant(0.5, PI / 2, 1.0, 9) == pytest.approx(9)
    assert hk.K_constant(0.5, PI / 2, 2.0, 9) == pytest.approx(36)
    assert hk.K_constant(0.5, PI / 6, 1.0, 9) == pytest.approx(51.48, abs=0.01)


def test_chain_length_bound():
    assert hk.chain_length_bound(0.5, PI / 2, 0.01, 1.0, 9) == pytest.approx(1 + math.log(100, 3))
    a, th, d = 0.4, PI / 3, 2.0
    # the log argument is 1 when r0 = |xi - z| (1 - a sin theta) / (1 - a)
    r0 = d * (1 - a * math.sin(th)) / (1 - a)
    assert hk.chain_length_bound(a, th, r0, d, 9) == pytest.approx(1.0, abs=1e-14)
    b = hk.beta(a, th)
    assert (hk.chain_length_bound(a, th, 0.05, d, 9) - hk.chain_length_bound(a, th, 0.1, d, 9)
            == pytest.approx(math.log(2) / math.log(b)))


def _axis_cone(theta, N=2):
    axis = np.zeros(N)
    axis[-1] = 1.0
    return hk.ConeSpec(np.zeros(N), axis, theta), axis


def test_chain_right_angle_example():
    cone, e2 = _axis_cone(PI / 2)
    chain = hk.build_chain(cone, 0.1 * e2, e2, 0.5, 9)
    assert chain.n == 2
    np.testing.assert_allclose(chain.radii, [0.1, 0.3, 0.9], rtol=1e-14)
    np.testing.assert_allclose(chain.centers[:, 1], [0.1, 0.3, 0.9], rtol=1e-14)
    cf = hk.build_chain(cone, 0.1 * e2, e2, 0.5, 9, layout="closed_form")
    np.testing.assert_allclose(cf.radii, chain.radii, rtol=1e-14)


def test_chain_minimal_single_ball():
    cone, e2 = _axis_cone(PI / 2)
    chain = hk.build_chain(cone, 0.1 * e2, 0.35 * e2, 0.5, 9)
    assert chain.n == 1


def test_chain_tangency_quarter_pi():
    cone, e2 = _axis_cone(PI / 4)
    chain = hk.build_chain(cone, 0.01 * e2, e2, 0.5, 9)
    assert chain.clause_residuals()["iii"] <= 1e-12


def test_chain_preconditions():
    cone, e2 = _axis_cone(PI / 4)
    with pytest.raises(ValidationError):
        hk.build_chain(cone, np.array([0.1, 0.1]), e2, 0.5, 9)
    with pytest.raises(ValidationError):
        hk.build_chain(cone, e2, 0.5 * e2, 0.5, 9)
    with pytest.raises(ValidationError):
        hk.ConeSpec(np.zeros(2), np.array([0.0, 2.0]), PI / 4)


@settings(max_examples=60, deadline=None)
@given(st.floats(0.05, PI / 2), st.floats(0.05, 0.95), st.floats(1e-3, 0.9), st.floats(0.1, 10),
       st.integers(2, 3))
def test_chain_clauses(theta, a, frac, dist, N):
    cone, axis = _axis_cone(theta, N)
    chain = hk.build_chain(cone, frac * dist * axis, dist * axis, a, hk.harnack_constant_harmonic(a, N))
    res = chain.clause_residuals()
    assert max(res["i"], res["ii_p0"], res["ii_r0"], res["iii"], res["iv"]) <= 1e-12
    assert res["ii_xi_inside"] < 0
    assert chain.n <= math.ceil(chain.bound)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.1, PI / 2), st.floats(0.1, 0.9), st.floats(0.01, 100))
def test_chain_scaling_covariance(theta, a, s):
    cone, e2 = _axis_cone(theta)
    c1 = hk.build_chain(cone, 0.02 * e2, e2, a, 9)
    c2 = hk.build_chain(cone, 0.02 * s * e2, s * e2, a, 9)
    assert c1.n == c2.n and c1.beta == c2.beta and c1.gamma == c2.gamma
    np.testing.assert_allclose(c2.radii, s * c1.radii, rtol=1e-12)


def test_verify_two_sided_examples():
    cone, e2 = _axis_cone(PI / 2)
    lo, up = hk.verify_two_sided(hk.LinearHarmonic([0, 1], 0.0), cone, 0.01 * e2, e2, 0.5, 9)
    assert lo >= 1 and up >= 1
    lo, up = hk.verify_two_sided(lambda x: np.ones(len(x)), cone, 0.01 * e2, e2, 0.5, 9)
    assert lo >= 1 and up >= 1
    for th in (PI / 6, PI / 4, PI / 3, PI / 2):
        cone, e2 = _axis_cone(th)
        w = hk.LogPotential([0.0, -0.5], 50.0)
        assert min(hk.verify_two_sided(w, cone, 0.01 * e2, e2, 0.5, 9)) >= 1


def test_verify_rejects_sign_change():
    cone, e2 = _axis_cone(PI / 2)
    with pytest.raises(NumericalError, match="not a positive solution"):
        hk.verify_two_sided(hk.LinearHarmonic([1, 0], 0.0), cone, 0.01 * e2, e2, 0.5, 9)


def test_ball_ratio():
    assert hk.harnack_ratio_on_ball(lambda x: np.ones(len(x)), [0, 0], 1, 0.5) == 1
    r = hk.harnack_ratio_on_ball(hk.LinearHarmonic([0, 1], 2.0), [0, 0], 1, 0.5)
    assert r == pytest.approx(5 / 3, rel=1e-12)


def test_power_potential_three_dimensions():
    cone, e3 = _axis_cone(PI / 3, N=3)
    w = hk.PowerPotential([0.0, 0.0, -0.3])
    assert min(hk.verify_two_sided(w, cone, 0.02 * e3, e3, 0.5, 27)) >= 1
    with pytest.raises(ValidationError):
        hk.PowerPotential([0.0, 1.0])
