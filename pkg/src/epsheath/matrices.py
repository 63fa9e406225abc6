"""Coefficient matrices of the symmetrised perturbation system.

Unknown ordering is ``(psi, eta_1, ..., eta_dim, zeta)``; the flux matrices
``F`` and ``F1`` act on ``(div eta, grad psi, grad zeta)``.  Rows and columns
belonging to absent transverse directions are dropped.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import PlasmaParams
from .errors import TemperatureNonpositive


def _check_theta(theta):
    if np.any(np.asarray(theta) <= 0):
        raise TemperatureNonpositive("temperature must be positive")


def assemble_A(j: int, u, theta: float, params: PlasmaParams) -> np.ndarray:
    """``A^j[V]`` for ``V = (v, u, theta)``; ``u`` has one entry per dimension."""
    _check_theta(theta)
    p = params
    u = np.atleast_1d(np.asarray(u, dtype=float))
    dim = len(u)
    n = dim + 2
    e = p.R / ((p.gamma - 1.0) * theta)
    A = np.zeros((n, n))
    if j == 0:
        A[0, 0] = p.R * theta
        for i in range(dim):
            A[1 + i, 1 + i] = p.m
        A[-1, -1] = e
        return A
    if not 1 <= j <= dim:
        raise ValueError(f"direction {j} out of range for dim {dim}")
    uj = u[j - 1]
    A[0, 0] = p.R * theta * uj
    for i in range(dim):
        A[1 + i, 1 + i] = p.m * uj
    A[-1, -1] = e * uj
    A[0, j] = A[j, 0] = p.R * theta
    A[j, -1] = A[-1, j] = p.R
    return A


def assemble_Btilde(dv, du, dtheta, slope, params: PlasmaParams, dim: int) -> np.ndarray:
    """``B~`` from background derivatives and the wall slope ``M'``."""
    p = params
    n = dim + 2
    Bt = np.zeros((n, n))
    Bt[0, 1] = -dv
    Bt[1, 1] = -du
    Bt[1, -1] = -p.R / p.m * dv
    Bt[-1, 1] = -dtheta
    Bt[-1, -1] = -(p.gamma - 1.0) * du
    if dim == 2:
        Bt[0, 2] = dv * slope
        Bt[1, 2] = du * slope
        Bt[2, -1] = p.R / p.m * dv * slope
        Bt[-1, 2] = dtheta * slope
    return Bt


def assemble_B_h(u, theta, ubar, dv, du, dtheta, slope, params: PlasmaParams):
    """Return ``(B, h)`` with ``B = A^0[V] B~`` and ``h`` on the velocity slots.

    ``u``/``theta`` give the full state entering ``A^0``; ``ubar`` is the
    background velocity in ``h = (0, -m ubar ubar' M')``.
    """
    dim = len(np.atleast_1d(u))
    Bt = assemble_Btilde(dv, du, dtheta, slope, params, dim)
    B = assemble_A(0, u, theta, params) @ Bt
    h = np.zeros(dim)
    if dim == 2:
        h[1] = -params.m * ubar * du * slope
    return B, h


def g_terms(psi, sigma, v_bg, phi_bg, dphi_bg=0.0, d2phi_bg=0.0, slope=0.0, curvature=0.0):
    """Nonlinear remainders of the screened Poisson equation for ``sigma``."""
    ev = np.exp(v_bg)
    ep = np.exp(-phi_bg)
    g0 = (ev - 1.0) * psi + ev * (np.expm1(psi) - psi)
    g1 = (ep - 1.0) * sigma - ep * (np.expm1(-sigma) + sigma)
    g2 = -d2phi_bg * slope**2 + dphi_bg * curvature
    return g0, g1, g2


def assemble_F(u, theta: float, normal, params: PlasmaParams) -> np.ndarray:
    """Boundary flux matrix on ``(div eta, grad psi, grad zeta)``."""
    _check_theta(theta)
    p = params
    u = np.atleast_1d(np.asarray(u, dtype=float))
    n = np.atleast_1d(np.asarray(normal, dtype=float))
    dim = len(u)
    un = float(n @ u)
    F = np.zeros((1 + 2 * dim, 1 + 2 * dim))
    F[0, 0] = p.m * un
    for i in range(dim):
        a, b = 1 + i, 1 + dim + i
        F[0, a] = F[a, 0] = n[i] * p.R * theta
        F[0, b] = F[b, 0] = n[i] * p.R
        F[a, a] = p.R * theta * un
        F[b, b] = p.R * un / ((p.gamma - 1.0) * theta)
    return F


def assemble_F1(u, theta: float, params: PlasmaParams) -> np.ndarray:
    """Weight-derivative flux matrix (the ``x1`` component of ``F``)."""
    u = np.atleast_1d(np.asarray(u, dtype=float))
    e1 = np.zeros(len(u))
    e1[0] = 1.0
    return assemble_F(u, theta, e1, params)


def min_eig(S: np.ndarray) -> float:
    """Smallest eigenvalue of a symmetric matrix; round-off below 1e-12 |S| maps to 0."""
    lam = float(np.linalg.eigvalsh(S)[0])
    if abs(lam) <= 1e-12 * max(np.linalg.norm(S, 2), 1.0):
        return 0.0
    return lam


def characteristic_speeds(j: int, u, theta: float, params: PlasmaParams) -> np.ndarray:
    """Eigenvalues of ``(A^0)^-1 A^j`` via the symmetric similarity transform."""
    A0 = assemble_A(0, u, theta, params)
    s = 1.0 / np.sqrt(np.diag(A0))
    Aj = assemble_A(j, u, theta, params)
    return np.linalg.eigvalsh(s[:, None] * Aj * s[None, :])


def far_field_state(params: PlasmaParams, dim: int = 1):
    u = np.zeros(dim)
    u[0] = params.u_plus
    return u, params.theta_plus


@dataclass
class MatrixMargins:
    A0: float
    F: float
    minus_F1: float
    normal_speed: float

    @property
    def ok(self) -> bool:
        return self.A0 > 0 and self.F > 0 and self.minus_F1 > 0 and self.normal_speed > 0


def far_field_margins(params: PlasmaParams, dim: int = 1) -> MatrixMargins:
    u, theta = far_field_state(params, dim)
    normal = np.zeros(dim)
    normal[0] = -1.0
    A0 = assemble_A(0, u, theta, params)
    s = 1.0 / np.sqrt(np.diag(A0))
    An = sum(normal[j] * assemble_A(j + 1, u, theta, params) for j in range(dim))
    return MatrixMargins(
        A0=min_eig(A0),
        F=min_eig(assemble_F(u, theta, normal, params)),
        minus_F1=min_eig(-assemble_F1(u, theta, params)),
        normal_speed=float(np.linalg.eigvalsh(s[:, None] * An * s[None, :])[0]),
    )
