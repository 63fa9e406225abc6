"""Manufactured solutions for the potential equation, built symbolically in physical coordinates."""
import numpy as np
import sympy as sp

from epsheath.core import BoundaryProfile, Grid
from epsheath.elliptic import solve_potential_nonlinear

PHI_B = -0.05
L = 8.0


def _symbolic(dim, bumps):
    x1, x2 = sp.symbols("x1 x2", real=True)
    M = sum(a * sp.exp(-(((x2 - c) / w) ** 2)) for a, c, w in bumps) if bumps else sp.Integer(0)
    y1 = x1 - M
    base = PHI_B * sp.exp(-y1) * (1 - y1 / L)
    if dim == 1:
        phi = base
        lap = sp.diff(phi, x1, 2)
    else:
        phi = base * (1 + sp.Rational(3, 10) * y1 * sp.cos(sp.pi * x2 / L))
        lap = sp.diff(phi, x1, 2) + sp.diff(phi, x2, 2)
    rho = lap + sp.exp(-phi)
    return sp.lambdify((x1, x2), phi, "numpy"), sp.lambdify((x1, x2), rho, "numpy")


def mms_errors(dim, bumps=(), meshes=(64, 128, 256)):
    """Max-norm error of the nonlinear potential solve on each mesh."""
    phi_f, rho_f = _symbolic(dim, bumps)
    boundary = BoundaryProfile("gaussian-sum", bumps) if bumps else BoundaryProfile.flat()
    errs = []
    for n in meshes:
        g = Grid(dim, L, n) if dim == 1 else Grid(2, L, n, L, n, boundary)
        if dim == 1:
            X1, X2 = g.y1, np.zeros_like(g.y1)
        else:
            Y1, Y2 = g.mesh()
            X1, X2 = Y1 + boundary.M(Y2), Y2
        exact = np.broadcast_to(phi_f(X1, X2), g.shape)
        rho = np.broadcast_to(rho_f(X1, X2), g.shape)
        phi = solve_potential_nonlinear(rho, PHI_B, g, tol=1e-12)
        errs.append(float(np.max(np.abs(phi - exact))))
    return errs


def orders(errs):
    return [float(np.log2(a / b)) for a, b in zip(errs, errs[1:])]
