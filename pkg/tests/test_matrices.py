import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from epsheath.core import PlasmaParams, bohm_margin
from epsheath.errors import TemperatureNonpositive
from epsheath.matrices import (assemble_A, assemble_B_h, assemble_Btilde, assemble_F, assemble_F1,
                               characteristic_speeds, far_field_margins, g_terms, min_eig)


def test_A_examples(canon):
    # gamma = 5/3 is not a binary fraction, so R/((gamma-1) theta) is 1.5 to one ulp
    np.testing.assert_allclose(assemble_A(0, [-2.0], 1.0, canon), np.diag([1.0, 1.0, 1.5]), rtol=1e-15, atol=0)
    np.testing.assert_allclose(assemble_A(1, [-2.0], 1.0, canon), [[-2, 1, 0], [1, -2, 1], [0, 1, -3]],
                               rtol=1e-15, atol=0)
    with pytest.raises(TemperatureNonpositive):
        assemble_A(0, [-2.0], 0.0, canon)


def test_characteristic_speeds(canon):
    c = math.sqrt(5 / 3)
    lam = characteristic_speeds(1, [-2.0], 1.0, canon)
    np.testing.assert_allclose(np.sort(lam), [-2 - c, -2, -2 + c], atol=1e-14)
    # oracle: eigen-decomposition of the nonsymmetric product
    direct = np.linalg.eigvals(np.linalg.solve(assemble_A(0, [-2.0], 1.0, canon), assemble_A(1, [-2.0], 1.0, canon)))
    np.testing.assert_allclose(np.sort(direct.real), np.sort(lam), atol=1e-12)


@settings(max_examples=50, deadline=None)
@given(u1=st.floats(-3, 3), u2=st.floats(-3, 3), th=st.floats(0.1, 4), g=st.floats(1.05, 3))
def test_symmetry_and_positivity(u1, u2, th, g):
    p = PlasmaParams(gamma=g)
    for j in range(3):
        A = assemble_A(j, [u1, u2], th, p)
        assert np.array_equal(A, A.T)
    assert min_eig(assemble_A(0, [u1, u2], th, p)) > 0
    n = np.array([-1.0, 0.4]) / math.hypot(1, 0.4)
    F = assemble_F([u1, u2], th, n, p)
    assert np.array_equal(F, F.T)


def test_first_row_is_continuity(canon):
    # (A0)^-1 A^j first row = (u_j, e_j, 0): psi_t + u.grad psi + div eta
    u = [-1.7, 0.3]
    for j in (1, 2):
        K = np.linalg.solve(assemble_A(0, u, 1.3, canon), assemble_A(j, u, 1.3, canon))
        expected = np.zeros(4)
        expected[0] = u[j - 1]
        expected[j] = 1.0
        np.testing.assert_allclose(K[0], expected, atol=1e-15)


def test_B_h(canon):
    B, h = assemble_B_h([-2.0], 1.0, -2.0, 0.1, 0.2, 0.3, 0.0, canon)
    Bt = assemble_Btilde(0.1, 0.2, 0.3, 0.0, canon, 1)
    np.testing.assert_array_equal(B, assemble_A(0, [-2.0], 1.0, canon) @ Bt)
    assert np.all(h == 0)
    B0, h0 = assemble_B_h([-2.0, 0.0], 1.0, -2.0, 0.0, 0.0, 0.0, 0.7, canon)
    assert np.all(B0 == 0) and np.all(h0 == 0)
    Bt2 = assemble_Btilde(0.1, 0.2, 0.3, 0.0, canon, 2)
    assert np.all(Bt2[:, 2] == 0) and Bt2[2, -1] == 0


def test_h_product_of_tables(canon_b):
    from epsheath.halfline import solve_stationary_halfline

    prof = solve_stationary_halfline(canon_b, 20.0, 2000)
    s = -2 * 0.5 * (1 / math.sqrt(2)) / 2 * math.exp(-0.5)  # M'(c + w/sqrt 2) for a=0.5, w=2
    _, h = assemble_B_h([prof.u[0], 0.0], prof.theta[0], prof.u[0], prof.drho[0] / prof.rho[0], prof.du[0],
                        prof.dtheta[0], s, canon_b)
    assert h[1] == pytest.approx(-canon_b.m * prof.u[0] * prof.du[0] * s, rel=1e-15)
    assert h[1] != 0


def test_g_terms():
    g0, g1, _ = g_terms(0.0, 0.0, 0.3, -0.1)
    assert g0 == 0 and g1 == 0
    assert g_terms(0.1, 0.0, 0.0, 0.0)[0] == pytest.approx(math.exp(0.1) - 1.1, rel=1e-12)
    assert g_terms(0.1, 0.0, 0.0, 0.0)[0] == pytest.approx(0.0051709, abs=1e-7)
    rng = np.random.default_rng(0)
    v = rng.uniform(-0.5, 0.5, 1000)
    psi = rng.uniform(-1, 1, 1000)
    g0 = g_terms(psi, 0.0, v, 0.0)[0]
    bound = (np.exp(np.abs(v)) - 1) * np.abs(psi) + np.exp(np.abs(v)) * np.exp(np.abs(psi)) * psi**2 / 2
    assert np.all(np.abs(g0) <= bound + 1e-15)


def test_F_example(canon):
    F = assemble_F([-2.0], 1.0, [-1.0], canon)
    np.testing.assert_allclose(np.diag(F), [2, 2, 3], rtol=1e-15, atol=0)
    assert F[0, 1] == -1 and F[0, 2] == -1
    assert min_eig(F) > 0


def test_minus_F1_canonical_positive(canon):
    assert min_eig(-assemble_F1([-2.0], 1.0, canon)) > 0


def test_minus_F1_sign_tracks_supersonic_not_bohm():
    # -F1 is positive definite iff m u^2 > gamma R theta; at u = -1.3 the state is
    # supersonic yet Bohm fails, so the margin stays (barely) positive
    p = PlasmaParams(u_plus=-1.3)
    assert bohm_margin(p) < 0
    assert min_eig(-assemble_F1([-1.3], 1.0, p)) == pytest.approx(0.0096476, abs=1e-6)
    assert min_eig(-assemble_F1([-1.2], 1.0, p)) < 0


@settings(max_examples=200, deadline=None)
@given(g=st.floats(1.05, 3.0), th=st.floats(0.2, 3.0), u=st.floats(0.1, 4.0))
def test_positivity_link(g, th, u):
    p = PlasmaParams(gamma=g, theta_plus=th, u_plus=-u)
    if bohm_margin(p) > 0 and u > math.sqrt(g * th):
        assert min_eig(-assemble_F1([-u], th, p)) > 0


def test_far_field_margins(canon):
    m = far_field_margins(canon, 2)
    assert m.ok
    assert m.normal_speed == pytest.approx(2 - math.sqrt(5 / 3), rel=1e-12)
