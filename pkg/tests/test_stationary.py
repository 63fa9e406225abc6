import math

import numpy as np
import pytest

from epsheath.core import BoundaryProfile, FieldState, Grid, PlasmaParams, weighted_norm
from epsheath.errors import BohmViolated, NotConverged, SupersonicLost, WindowDegenerate, WindowTooShort
from epsheath.evolve import EvolveConfig
from epsheath.halfline import build_background
from epsheath.stationary import (bump_state, compute_stationary, fit_lambda, summary_dict,
                                 translation_cauchy_check)


@pytest.fixture(scope="module")
def g1():
    return Grid(1, 30.0, 200)


def _bump(grid, seed=0):
    rng = np.random.default_rng(seed)
    return rng.standard_normal(grid.shape) * np.exp(-((grid.y1 - 5.0) ** 2))


def test_translation_synthetic(g1):
    base = 0.1 * np.exp(-g1.y1)[None, :] * np.ones((3, 1))
    bump = np.stack([_bump(g1, s) for s in range(3)])
    traj = [(t, base + 1e-2 * math.exp(-0.3 * t) * bump) for t in np.arange(0, 40.0001, 0.5)]
    rep = translation_cauchy_check(traj, 2.0, 0.25, g1)
    assert rep.lam == pytest.approx(0.3, abs=1e-3)
    assert rep.r2 > 0.999999


def test_translation_stationary_input(g1):
    P = np.ones((3,) + g1.shape)
    rep = translation_cauchy_check([(float(t), P) for t in range(10)], 1.0, 0.25, g1)
    assert rep.trivial and rep.lam == math.inf


def test_translation_window_too_short(g1):
    P = np.zeros((3,) + g1.shape)
    with pytest.raises(WindowTooShort):
        translation_cauchy_check([(float(t), P) for t in range(4)], 1.0, 0.25, g1)


def test_fit_lambda_synthetic(g1):
    bump = np.stack([_bump(g1, s) for s in range(3)])
    traj = [(t, math.exp(-0.5 * t) * bump / np.max(np.abs(bump))) for t in np.linspace(0, 30, 61)]
    assert fit_lambda(traj, np.zeros_like(bump)) == pytest.approx(0.5, abs=1e-6)


def test_fit_lambda_degenerate(g1):
    P = np.zeros((3,) + g1.shape)
    with pytest.raises(WindowDegenerate):
        fit_lambda([(float(t), P) for t in range(8)], P)


def test_trivial_stationary(g1):
    sol = compute_stationary(PlasmaParams(), BoundaryProfile.flat(), g1)
    assert np.all(sol.Psi == 0) and np.all(sol.sigma == 0)
    assert sol.residual["max"] == 0
    assert set(summary_dict(sol)) >= {"residual", "provenance", "alpha_fit"}


def test_preconditions(g1):
    with pytest.raises(BohmViolated):
        compute_stationary(PlasmaParams(u_plus=-1.3, phi_b=-0.05), BoundaryProfile.flat(), g1)
    with pytest.raises(SupersonicLost):
        compute_stationary(PlasmaParams(phi_b=-0.05), BoundaryProfile.gaussian(5.0, 0.0, 0.5),
                           Grid(2, 20.0, 32, 4.0, 8))


def test_not_converged(canon_b, g1):
    bg = build_background(canon_b, g1)
    init = bump_state(g1, bg.beta_default, 1e-2)
    with pytest.raises(NotConverged):
        compute_stationary(canon_b, BoundaryProfile.flat(), g1, tol=1e-12, max_time=2.0, init=init, background=bg)


def test_flat_sheath_2d_is_background(canon_b):
    g = Grid(2, 30.0, 120, 8.0, 8)
    sol = compute_stationary(canon_b, BoundaryProfile.flat(), g)
    assert np.max(np.abs(sol.Psi)) < 1e-6
    ref = build_background(canon_b, Grid(1, 30.0, 120))
    f = sol.physical_fields()
    assert np.max(np.abs(f["phi"] - ref.phi[:, None])) < 1e-6
    assert np.max(np.abs(f["rho"] - np.exp(ref.v)[:, None])) < 1e-6


def test_bump_run_decays_to_background(canon_b, g1):
    """Small data relax to the stationary sheath with a positive rate."""
    bg = build_background(canon_b, g1)
    init = bump_state(g1, bg.beta_default, 1e-2)
    sol = compute_stationary(canon_b, BoundaryProfile.flat(), g1, tol=1e-7, t_star=2.0, init=init, background=bg)
    assert np.max(np.abs(sol.Psi)) < 1e-6
    tr = sol.trajectory
    lam = fit_lambda(tr, sol)
    rep = translation_cauchy_check(tr, 2.0, bg.beta_default, g1)
    assert lam > 0 and rep.lam > 0
    assert abs(rep.lam - lam) / lam < 0.2
    assert weighted_norm(sol.Psi, 0, bg.beta_default, g1) < 1e-3 * weighted_norm(init.Psi, 0, bg.beta_default, g1)


def test_even_bump_gives_even_solution(canon_b):
    b = BoundaryProfile.gaussian(0.3, 0.0, 2.0)
    g = Grid(2, 20.0, 64, 8.0, 16, b)
    sol = compute_stationary(canon_b, b, g, tol=1e-6, config=EvolveConfig(stride=10**6, diagnostics=False),
                             max_time=200.0)
    assert np.max(np.abs(sol.Psi)) > 1e-4
    # grid points x2 = -L2 + j h are symmetric about j = n2/2 under periodic wrap
    mirror = lambda f: np.roll(f[..., ::-1], 1, axis=-1)  # noqa: E731
    assert np.max(np.abs(sol.Psi[0] - mirror(sol.Psi[0]))) < 1e-7
    assert np.max(np.abs(sol.Psi[2] + mirror(sol.Psi[2]))) < 1e-7
    assert sol.residual["max"] < 1e-5


def test_init_zero_field_state(g1):
    st = FieldState.zeros(g1)
    assert st.Psi.shape == (3,) + g1.shape
