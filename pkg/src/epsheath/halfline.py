"""Monotone half-line sheath profiles.

Mass flux, entropy and momentum integrate once: with ``rho u = u+`` and
``theta = theta+ rho^(gamma-1)`` the momentum equation becomes
``phi = H(rho)`` where

    H(rho) = m u+^2/2 (rho^-2 - 1) + gamma R theta+/(gamma-1) (rho^(gamma-1) - 1).

Poisson's equation then has the first integral ``phi'^2 = 2 W(phi)`` with the
Sagdeev potential ``W(phi) = int_0^phi (rho(s) - exp(-s)) ds``.  Everything
is written in terms of the density excess ``delta = rho - 1`` so that tiny
potentials keep full relative precision.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .core import PlasmaParams, bohm_margin
from .errors import BohmViolated, BranchExhausted, NonMonotone, WindowDegenerate

TAIL_SWITCH = 1e-6
MAX_SUBSTEP = 0.01


def _H(delta: float, p: PlasmaParams) -> float:
    lg = math.log1p(delta)
    mu2 = p.m * p.u_plus**2
    return 0.5 * mu2 * math.expm1(-2.0 * lg) + p.gamma * p.R * p.theta_plus / (p.gamma - 1.0) * math.expm1(
        (p.gamma - 1.0) * lg
    )


def _dH(delta: float, p: PlasmaParams) -> float:
    rho = 1.0 + delta
    return -p.m * p.u_plus**2 / rho**3 + p.gamma * p.R * p.theta_plus * rho ** (p.gamma - 2.0)


def sonic_density(p: PlasmaParams) -> float:
    return (p.m * p.u_plus**2 / (p.gamma * p.R * p.theta_plus)) ** (1.0 / (p.gamma + 1.0))


def density_excess(phi: float, params: PlasmaParams) -> float:
    """``rho - 1`` on the branch of ``H(rho) = phi`` through ``rho = 1``."""
    p = params
    phi = float(phi)
    if phi == 0.0:
        return 0.0
    kappa = p.m * p.u_plus**2 - p.gamma * p.R * p.theta_plus
    if kappa == 0.0:
        raise BranchExhausted("sonic far field: no branch through rho = 1")
    d_s = sonic_density(p) - 1.0
    # H is monotone between the sonic point and 0 (kappa > 0) or infinity (kappa < 0)
    decreasing = kappa > 0
    if phi < 0:
        if phi < _H(d_s, p):
            raise BranchExhausted(
                f"phi = {phi:g} is beyond the sonic point value {_H(d_s, p):g}"
            )
        lo, hi = sorted((0.0, d_s))
    else:
        far = -0.5 if decreasing else 1.0
        while _H(far, p) < phi:
            far = -1.0 + 0.5 * (far + 1.0) if decreasing else 2.0 * far + 1.0
            if far <= -1.0 + 1e-300 or far > 1e300:
                raise BranchExhausted(f"no root for phi = {phi:g}")
        lo, hi = sorted((0.0, far))

    g_lo = _H(lo, p) - phi
    x = phi / (-kappa)
    if not lo < x < hi:
        x = 0.5 * (lo + hi)
    for _ in range(200):
        g = _H(x, p) - phi
        if g == 0.0:
            return x
        if (g > 0) == (g_lo > 0):
            lo, g_lo = x, g
        else:
            hi = x
        step = g / _dH(x, p)
        x_new = x - step
        if not lo < x_new < hi:
            x_new = 0.5 * (lo + hi)
        if abs(x_new - x) <= 4e-16 * abs(x) or hi - lo <= 4e-16 * max(abs(lo), abs(hi)):
            return x_new
        x = x_new
    return x


def bernoulli_density(phi: float, params: PlasmaParams) -> float:
    """Density ``rho(phi)`` from the first integral ``H(rho) = phi``."""
    return 1.0 + density_excess(phi, params)


def _sagdeev_closed(phi: float, p: PlasmaParams) -> float:
    d = density_excess(phi, p)
    lg = math.log1p(d)
    mu2 = p.m * p.u_plus**2
    # substituting phi = H(delta) keeps W accurate to O(delta^2)
    return -mu2 * d / (1.0 + d) + p.R * p.theta_plus * math.expm1(p.gamma * lg) + math.expm1(-_H(d, p))


def sagdeev_potential(phi: float, params: PlasmaParams, method: str = "closed") -> float:
    """``W(phi) = int_0^phi (rho(s) - exp(-s)) ds``.

    ``method="closed"`` uses the antiderivative ``m u+^2/rho + R theta+ rho^gamma``
    of ``rho dH``; ``method="quad"`` integrates adaptively instead.
    """
    phi = float(phi)
    if phi == 0.0:
        return 0.0
    if method == "closed":
        return _sagdeev_closed(phi, params)
    if method == "quad":
        val, _ = integrate.quad(
            lambda s: density_excess(s, params) - math.expm1(-s), 0.0, phi, epsabs=1e-15, epsrel=1e-12, limit=200
        )
        return val
    raise ValueError(f"unknown method {method!r}")


def sagdeev_curvature(params: PlasmaParams) -> float:
    """Closed form ``W''(0) = 1 - 1/(m u+^2 - gamma R theta+)``."""
    p = params
    return 1.0 - 1.0 / (p.m * p.u_plus**2 - p.gamma * p.R * p.theta_plus)


def sagdeev_curvature_fd(params: PlasmaParams, h: float | None = None) -> float:
    """Centred second difference of ``W`` at 0.

    The default step stays inside the admissible branch, which shrinks to
    nothing as the far field approaches the sonic speed.
    """
    if h is None:
        h = 1e-4
        if params.m * params.u_plus**2 > params.gamma * params.R * params.theta_plus:
            h = min(h, 0.1 * abs(_H(sonic_density(params) - 1.0, params)))
    return (sagdeev_potential(h, params) + sagdeev_potential(-h, params)) / (h * h)


@dataclass
class StationaryProfile1D:
    x1: np.ndarray
    rho: np.ndarray
    u: np.ndarray
    theta: np.ndarray
    phi: np.ndarray
    dphi: np.ndarray
    params: PlasmaParams
    alpha_fit: float = float("nan")
    drho: np.ndarray = field(default=None, repr=False)
    du: np.ndarray = field(default=None, repr=False)
    dtheta: np.ndarray = field(default=None, repr=False)
    d2phi: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        p = self.params
        if self.drho is None:
            self.drho = np.array([dp / _dH(r - 1.0, p) for r, dp in zip(self.rho, self.dphi)])
        if self.du is None:
            self.du = -p.u_plus * self.drho / self.rho**2
        if self.dtheta is None:
            self.dtheta = (p.gamma - 1.0) * self.theta * self.drho / self.rho
        if self.d2phi is None:
            self.d2phi = self.rho - np.exp(-self.phi)

    @property
    def L1(self) -> float:
        return float(self.x1[-1])


def _orbit_slope(phi: float, sign: float, p: PlasmaParams) -> float:
    w = sagdeev_potential(phi, p)
    return -sign * math.sqrt(2.0 * max(w, 0.0))


def solve_stationary_halfline(
    params: PlasmaParams, L1: float = 20.0, n1: int = 2000, substeps: int | None = None
) -> StationaryProfile1D:
    """Integrate ``phi' = -sgn(phi) sqrt(2 W(phi))`` from ``phi(0) = phi_b`` with RK4."""
    p = params
    if bohm_margin(p) <= 0:
        raise BohmViolated(f"Bohm margin {bohm_margin(p):g} <= 0")
    x = np.linspace(0.0, L1, n1 + 1)
    h = L1 / n1
    kappa = math.sqrt(sagdeev_curvature(p))
    if p.phi_b == 0.0:
        ones = np.ones_like(x)
        return StationaryProfile1D(x, ones.copy(), p.u_plus * ones, p.theta_plus * ones, 0 * x, 0 * x, p,
                                   alpha_fit=kappa)
    bernoulli_density(p.phi_b, p)  # raises BranchExhausted early
    if substeps is None:
        substeps = max(1, math.ceil(h / MAX_SUBSTEP - 1e-12))
    dt = h / substeps
    sign = math.copysign(1.0, p.phi_b)
    threshold = TAIL_SWITCH * abs(p.phi_b)

    phi = np.empty_like(x)
    dphi = np.empty_like(x)
    phi[0] = p.phi_b
    dphi[0] = _orbit_slope(p.phi_b, sign, p)
    cur = p.phi_b
    tail_from = None
    for i in range(1, n1 + 1):
        if abs(cur) < threshold:
            tail_from = i - 1
            break
        for _ in range(substeps):
            k1 = _orbit_slope(cur, sign, p)
            k2 = _orbit_slope(cur + 0.5 * dt * k1, sign, p)
            k3 = _orbit_slope(cur + 0.5 * dt * k2, sign, p)
            k4 = _orbit_slope(cur + dt * k3, sign, p)
            cur = cur + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        phi[i] = cur
        dphi[i] = _orbit_slope(cur, sign, p)
    if tail_from is not None:
        # linearised orbit near the homoclinic point
        phi[tail_from:] = phi[tail_from] * np.exp(-kappa * (x[tail_from:] - x[tail_from]))
        dphi[tail_from:] = -kappa * phi[tail_from:]

    if np.any(np.sign(phi) != sign) or np.any(np.diff(np.abs(phi)) > 0):
        raise NonMonotone("integrated potential is not monotone; refine the step")
    delta = np.array([density_excess(v, p) for v in phi])
    rho = 1.0 + delta
    theta = p.theta_plus * np.exp((p.gamma - 1.0) * np.log1p(delta))
    prof = StationaryProfile1D(x, rho, p.u_plus / rho, theta, phi, dphi, p)
    window = None if L1 <= 20.0 else (5.0, 10.0)
    prof.alpha_fit = fit_decay_alpha(prof, window=window)
    return prof


def fit_decay_alpha(profile, window=None, which: str = "phi") -> float:
    """Least-squares slope of ``-log|phi|`` (or ``|phi'|``) on ``[L1/4, L1/2]``."""
    x = np.asarray(profile.x1)
    y = np.abs(np.asarray(profile.phi if which == "phi" else profile.dphi))
    L1 = x[-1]
    a, b = window if window is not None else (L1 / 4.0, L1 / 2.0)
    sel = (x >= a) & (x <= b)
    if sel.sum() < 2 or np.any(y[sel] <= 1e-10):
        raise WindowDegenerate("profile underflows on the fit window")
    slope = np.polyfit(x[sel], -np.log(y[sel]), 1)[0]
    return float(slope)


_D1 = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
_D2 = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0


def _stencil(f, w, h, power):
    n = len(f)
    return sum(w[k] * f[k : n - 4 + k] for k in range(5)) / h**power


def stationary_residual(profile: StationaryProfile1D) -> dict:
    """Sup-norm residuals of the four stationary equations (fourth-order centred)."""
    p = profile.params
    h = profile.x1[1] - profile.x1[0]
    rho, u, th, phi = profile.rho, profile.u, profile.theta, profile.phi
    inner = slice(2, len(rho) - 2)
    d = lambda f: _stencil(f, _D1, h, 1)  # noqa: E731
    r_mass = d(rho * u)
    r_mom = p.m * u[inner] * d(u) + p.R * th[inner] * d(np.log(rho)) + p.R * d(th) - d(phi)
    r_energy = u[inner] * d(th) + (p.gamma - 1.0) * th[inner] * d(u)
    r_poisson = _stencil(phi, _D2, h, 2) - (rho[inner] - np.exp(-phi[inner]))
    out = {
        "mass": float(np.max(np.abs(r_mass))),
        "momentum": float(np.max(np.abs(r_mom))),
        "energy": float(np.max(np.abs(r_energy))),
        "poisson": float(np.max(np.abs(r_poisson))),
    }
    out["max"] = max(out.values())
    return out


def build_background(params: PlasmaParams, grid, profile: StationaryProfile1D | None = None):
    """Half-line profile on the grid's normal nodes, composed with ``x1 - M(x2)``."""
    from .core import BackgroundProfile

    if profile is None:
        profile = solve_stationary_halfline(params, L1=grid.L1, n1=grid.n1)
    return BackgroundProfile.from_profile(profile, grid, params)
