"""Semilinear Poisson solvers on the graph-mapped grid.

In computational coordinates the Laplacian reads

    (1 + M'^2) d11 - 2 M' d12 + d22 - M'' d1

and is discretised with second-order centred differences.  Dirichlet data
sit on the wall row and the far-field row; the transverse direction is
periodic.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .core import BackgroundProfile, Grid
from .errors import BoundsViolated, NewtonDiverged
from .matrices import g_terms

log = logging.getLogger(__name__)

# structurally symmetric stencil: minimum degree on A^T + A keeps the fill lowest
_ORDERING = "MMD_AT_PLUS_A"


class PoissonOperator:
    """Sparse transformed Laplacian with identity rows on Dirichlet nodes."""

    def __init__(self, grid: Grid):
        self.grid = grid
        self.shape = grid.shape
        self.size = int(np.prod(self.shape))
        self.matrix = self._assemble()
        interior = np.zeros(self.shape, dtype=bool)
        interior[1:-1] = True
        self.interior = interior.ravel()
        self._lu = {}

    def _assemble(self):
        g = self.grid
        n1, n2 = g.n1, g.n2
        h1, h2 = g.h1, g.h2
        rows, cols, vals = [], [], []

        def idx(i, j):
            return i * n2 + (j % n2)

        I = np.arange(1, n1)
        if g.dim == 1:
            a = 1.0 / h1**2
            rows += [I, I, I]
            cols += [I - 1, I, I + 1]
            vals += [np.full(I.size, a), np.full(I.size, -2 * a), np.full(I.size, a)]
        else:
            s = g.boundary.dM(g.y2)
            c = g.boundary.d2M(g.y2)
            II, JJ = np.meshgrid(I, np.arange(n2), indexing="ij")
            II, JJ = II.ravel(), JJ.ravel()
            sj, cj = s[JJ], c[JJ]
            a11 = (1.0 + sj * sj) / h1**2
            a22 = np.full(II.size, 1.0 / h2**2)
            first = -cj / (2.0 * h1)
            mixed = -sj / (2.0 * h1 * h2)
            here = idx(II, JJ)
            for di, dj, v in (
                (0, 0, -2 * a11 - 2 * a22),
                (1, 0, a11 + first),
                (-1, 0, a11 - first),
                (0, 1, a22),
                (0, -1, a22),
                (1, 1, mixed),
                (1, -1, -mixed),
                (-1, 1, -mixed),
                (-1, -1, mixed),
            ):
                rows.append(here)
                cols.append(idx(II + di, JJ + dj))
                vals.append(v)
        B = np.concatenate([np.arange(n2), n1 * n2 + np.arange(n2)]) if g.dim == 2 else np.array([0, n1])
        rows.append(B)
        cols.append(B)
        vals.append(np.ones(B.size))
        size = (n1 + 1) * n2
        return sp.csc_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(size, size)
        )

    def apply(self, u):
        """Discrete Laplacian (interior rows; Dirichlet rows return ``u``)."""
        return (self.matrix @ u.ravel()).reshape(self.shape)

    def jacobian(self, diag):
        """``L - diag(d)`` on interior rows, identity on Dirichlet rows."""
        d = np.where(self.interior, np.broadcast_to(diag, self.shape).ravel(), 0.0)
        return (self.matrix - sp.diags(d)).tocsc()

    def factor(self, key, diag):
        if key not in self._lu:
            self._lu[key] = splu(self.jacobian(diag), permc_spec=_ORDERING)
        return self._lu[key]


@dataclass
class SolveInfo:
    newton_steps: int = 0
    linear_iterations: int = 0
    residual: float = 0.0
    history: list = field(default_factory=list)


def solve_semilinear(op: PoissonOperator, source, dsource, wall, top, guess=None, tol=1e-10,
                     precond_diag=None, precond_key=None, eta=1e-2, max_newton=30):
    """Solve ``L u = source(u)`` in the interior with Dirichlet ``wall``/``top`` rows.

    Damped Newton: every linear solve runs Richardson iteration preconditioned
    by a frozen LU until its relative residual drops below ``eta`` times the
    nonlinear residual; a step is rejected unless the residual halves within 8
    halvings.
    """
    shape = op.shape
    u = np.zeros(shape) if guess is None else np.array(guess, dtype=float, copy=True)
    u[0] = wall
    u[-1] = top
    interior = op.interior.reshape(shape)

    def residual(w):
        r = op.apply(w) - source(w)
        r[~interior] = 0.0
        return r

    info = SolveInfo()
    r = residual(u)
    rn = float(np.max(np.abs(r)))
    info.history.append(rn)
    if precond_diag is None:
        precond_diag = dsource(u)
        precond_key = None
    if precond_key is not None:
        lu = op.factor(precond_key, precond_diag)
    else:
        lu = splu(op.jacobian(precond_diag), permc_spec=_ORDERING)
    while rn > tol:
        if info.newton_steps >= max_newton:
            raise NewtonDiverged(f"no convergence after {max_newton} Newton steps (residual {rn:.3e})")
        J = op.jacobian(dsource(u))
        rhs = -r.ravel()
        delta = np.zeros(op.size)
        lin = rhs.copy()
        # linear residual relative to ||F|| below eta ||F||: quadratic outer convergence
        target = max(eta * rn * min(rn, 1.0), 0.1 * tol)
        for it in range(60):
            if np.max(np.abs(lin)) <= target:
                break
            delta += lu.solve(lin)
            delta[~op.interior] = 0.0
            lin = rhs - J @ delta
            info.linear_iterations += 1
            if it == 20:
                lu = splu(J, permc_spec=_ORDERING)
        delta = delta.reshape(shape)
        lam = 1.0
        for _ in range(8):
            trial = u + lam * delta
            r_try = residual(trial)
            rt = float(np.max(np.abs(r_try)))
            if rt <= 0.5 * rn or rt <= tol:
                break
            lam *= 0.5
        else:
            raise NewtonDiverged(f"residual {rn:.3e} failed to halve in 8 damped steps")
        u, r, rn = trial, r_try, rt
        info.newton_steps += 1
        info.history.append(rn)
    info.residual = rn
    return u, info


@dataclass
class EllipticProblem:
    """Data for the screened equation ``lap s - s = psi + g0 + g1(s) + g2``.

    With ``linear=True`` (or no background) the g-terms are dropped and the
    equation is ``lap s - s = psi``.
    """

    grid: Grid
    psi: np.ndarray
    background: BackgroundProfile | None = None
    linear: bool = False
    operator: PoissonOperator | None = None

    def __post_init__(self):
        if self.operator is None:
            self.operator = PoissonOperator(self.grid)


def transformed_laplacian(grid: Grid, f):
    return PoissonOperator(grid).apply(f)


def solve_sigma(problem: EllipticProblem, tol: float = 1e-10, guess=None, return_info: bool = False):
    if tol < 1e-12:
        raise ValueError("tolerance below 1e-12 is not supported")
    grid, bg, psi = problem.grid, problem.background, np.asarray(problem.psi, dtype=float)
    op = problem.operator
    if problem.linear or bg is None:
        src = lambda s: s + psi  # noqa: E731
        dsrc = lambda s: np.ones(grid.shape)  # noqa: E731
        sigma, info = solve_semilinear(op, src, dsrc, 0.0, 0.0, guess, tol,
                                       precond_diag=np.ones(grid.shape), precond_key="linear")
    else:
        ep = np.exp(-bg.phi)
        slope, curv = grid.slope(), grid.curvature()
        _, _, g2 = g_terms(0.0, 0.0, bg.v, bg.phi, bg.dphi, bg.d2phi, slope, curv)
        g2 = np.broadcast_to(g2, grid.shape)
        g0 = g_terms(psi, 0.0, bg.v, bg.phi)[0]
        base = psi + g0 + g2

        def src(s):
            g1 = (ep - 1.0) * s - ep * (np.expm1(-s) + s)
            return s + base + g1

        def dsrc(s):
            # d/ds (s + g1) = exp(-phi~ - s)
            return np.broadcast_to(ep * np.exp(-s), grid.shape)

        sigma, info = solve_semilinear(op, src, dsrc, 0.0, 0.0, guess, tol,
                                       precond_diag=np.broadcast_to(ep, grid.shape), precond_key="sigma")
    return (sigma, info) if return_info else sigma


def solve_potential_nonlinear(rho, phi_b, grid: Grid, tol: float = 1e-10, guess=None,
                              operator: PoissonOperator | None = None, return_info: bool = False):
    """Solve ``lap phi = rho - exp(-phi)`` with ``phi = phi_b`` on the wall, 0 far away."""
    rho = np.broadcast_to(np.asarray(rho, dtype=float), grid.shape)
    if np.any(rho <= 0):
        raise ValueError("density must be positive")
    op = operator or PoissonOperator(grid)
    src = lambda f: rho - np.exp(-f)  # noqa: E731
    dsrc = lambda f: np.exp(-f)  # noqa: E731
    if guess is None:
        guess = np.zeros(grid.shape)
        guess[0] = phi_b
    phi, info = solve_semilinear(op, src, dsrc, phi_b, 0.0, guess, tol)
    return (phi, info) if return_info else phi


@dataclass
class BoundsReport:
    M1: float
    M2: float
    upper_margin: float
    lower_margin: float

    @property
    def margin(self) -> float:
        return min(self.upper_margin, self.lower_margin)


def poisson_bounds_check(sigma, background: BackgroundProfile) -> BoundsReport:
    """Pointwise ``-M2 <= sigma + phi~ <= M1`` with the a priori constants."""
    phi = background.full(background.phi)
    v = background.v
    sup_phi = float(np.max(np.abs(phi)))
    M1 = max(sup_phi, -float(np.min(v)) + 1.0)
    M2 = max(sup_phi, float(np.max(v)) + 1.0)
    total = np.asarray(sigma) + phi
    bad = np.argwhere((total > M1) | (total < -M2))
    if bad.size:
        loc = tuple(int(i) for i in bad[0])
        raise BoundsViolated(f"sigma + phi~ = {total[loc]:.4g} outside [{-M2:.4g}, {M1:.4g}] at {loc}", loc)
    return BoundsReport(M1, M2, M1 - float(np.max(total)), float(np.min(total)) + M2)
