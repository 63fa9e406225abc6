"""Stationary solutions as long-time limits, translation-Cauchy decay and rate fits."""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .core import (BackgroundProfile, BoundaryProfile, FieldState, Grid, PlasmaParams, bohm_margin,
                   supersonic_outflow_margin, weighted_norm)
from .errors import BohmViolated, NotConverged, SupersonicLost, WindowDegenerate, WindowTooShort
from .evolve import CoeffBundle, EvolveConfig, Trajectory, evolve, rhs
from .halfline import build_background
from .matrices import g_terms

EPS = np.finfo(float).eps


@dataclass
class StationarySolution:
    grid: Grid
    background: BackgroundProfile
    Psi: np.ndarray
    sigma: np.ndarray
    residual: dict
    provenance: dict
    trajectory: Trajectory | None = field(default=None, repr=False)

    def physical_fields(self) -> dict:
        """Full (background + perturbation) fields on the grid."""
        bg, g = self.background, self.grid
        out = {
            "rho": np.exp(bg.v + self.Psi[0]),
            "u": bg.u + self.Psi[1],
            "theta": bg.theta + self.Psi[-1],
            "phi": bg.phi + self.sigma,
        }
        out["dphi"] = g.dy1(np.broadcast_to(out["phi"], g.shape))
        if g.dim == 2:
            out["u2"] = self.Psi[2]
        return {k: np.broadcast_to(v, g.shape) for k, v in out.items()}

    def csv_rows(self):
        f = self.physical_fields()
        g = self.grid
        if g.dim == 1:
            header = ["x1", "rho", "u", "theta", "phi", "dphi"]
            cols = [g.y1] + [f[k] for k in header[1:]]
        else:
            header = ["x1", "x2", "rho", "u", "u2", "theta", "phi", "dphi"]
            Y1, Y2 = g.mesh()
            cols = [g.physical_x1(), Y2] + [f[k] for k in header[2:]]
        return header, np.column_stack([np.ravel(c) for c in cols])


def config_hash(*parts) -> str:
    blob = json.dumps([repr(p) for p in parts], sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def stationary_residual_report(Psi, sigma, coeffs: CoeffBundle) -> dict:
    """Residuals of the time-independent system: ``rhs(Psi)`` and the sigma equation."""
    g = coeffs.grid
    r = rhs(Psi, sigma, coeffs)
    op, bg = coeffs.operator, coeffs.background
    g0, g1, g2 = g_terms(Psi[0], sigma, bg.v, bg.phi, bg.dphi, bg.d2phi, g.slope(), g.curvature())
    res = op.apply(sigma) - sigma - Psi[0] - g0 - g1 - g2
    res[0] = res[-1] = 0.0
    return {
        "hyperbolic_max": float(np.max(np.abs(r))),
        "hyperbolic_norm0": weighted_norm(r, 0, coeffs.beta, g),
        "poisson_max": float(np.max(np.abs(res))),
        "max": float(max(np.max(np.abs(r)), np.max(np.abs(res)))),
    }


def compute_stationary(params: PlasmaParams, boundary: BoundaryProfile, grid: Grid, tol: float = 1e-8,
                       config: EvolveConfig | None = None, max_time: float = 500.0,
                       t_star: float | None = None, init: FieldState | None = None,
                       background: BackgroundProfile | None = None, sinks=()) -> StationarySolution:
    """Evolve from ``Psi = 0`` (or ``init``) until ``||d_t Psi||_{0,beta} < tol``."""
    if bohm_margin(params) <= 0:
        raise BohmViolated(f"Bohm margin {bohm_margin(params):g} <= 0")
    if supersonic_outflow_margin(params, boundary) <= 0:
        raise SupersonicLost("supersonic outflow fails for this wall")
    if grid.boundary != boundary:
        grid = Grid(grid.dim, grid.L1, grid.n1, grid.L2, grid.n2, boundary)
    bg = background if background is not None else build_background(params, grid)
    cfg = replace(config or EvolveConfig(), t_end=max_time, tol_steady=tol,
                  snapshot_every=t_star if t_star else (config.snapshot_every if config else None))
    coeffs = CoeffBundle.build(bg, cfg)
    start = init if init is not None else FieldState.zeros(grid)
    traj = evolve(start, cfg, bg, sinks=sinks, coeffs=coeffs)
    if not traj.steady:
        raise NotConverged(f"||d_t Psi||_0,beta = {traj.rhs_norm:.3e} > tol = {tol:.1e} at t = {traj.final.t:g}")
    final = traj.final
    report = stationary_residual_report(final.Psi, final.sigma, coeffs)
    prov = {"config_hash": config_hash(params, boundary, grid, tol, cfg), "steps": traj.steps,
            "t": final.t, "tol": tol}
    return StationarySolution(grid, bg, final.Psi.copy(), final.sigma.copy(), report, prov, traj)


@dataclass
class DecayReport:
    lam: float
    C: float
    r2: float
    d: list
    times: list

    @property
    def trivial(self) -> bool:
        return all(v == 0 for v in self.d)


def _snapshots(trajectory):
    if isinstance(trajectory, Trajectory):
        return list(trajectory.times), list(trajectory.snapshots)
    times, snaps = zip(*trajectory)
    return list(times), list(snaps)


def _fit_exp(t, d):
    A = np.column_stack([np.ones_like(t), -t])
    coef, *_ = np.linalg.lstsq(A, np.log(d), rcond=None)
    pred = A @ coef
    y = np.log(d)
    ss = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum((y - pred) ** 2)) / ss if ss > 0 else 1.0
    return float(coef[1]), float(math.exp(coef[0])), r2


def translation_cauchy_check(trajectory, T_star: float, beta: float, grid: Grid) -> DecayReport:
    """``d_k = ||Psi((k+1) T*) - Psi(k T*)||_{1,beta}`` fitted to ``C exp(-lam k T*)``."""
    times, snaps = _snapshots(trajectory)
    t0 = times[0]
    by_k = {}
    for t, P in zip(times, snaps):
        k = (t - t0) / T_star
        if abs(k - round(k)) <= 1e-8 * max(1.0, k):
            by_k.setdefault(int(round(k)), P)
    K = 0
    while K + 1 in by_k:
        K += 1
    if K < 4:
        raise WindowTooShort(f"trajectory covers {K} translation periods; need at least 4")
    d = [weighted_norm(by_k[k + 1] - by_k[k], 1, beta, grid) for k in range(K)]
    tk = np.array([t0 + k * T_star for k in range(K)])
    if all(v == 0 for v in d):
        return DecayReport(math.inf, 0.0, 1.0, d, list(tk))
    keep = np.asarray(d) > 0
    if keep.sum() < 2:
        raise WindowTooShort("fewer than two nonzero translation differences")
    lam, C, r2 = _fit_exp(tk[keep], np.asarray(d)[keep])
    return DecayReport(lam, C, r2, d, list(tk))


def fit_lambda(trajectory, stationary) -> float:
    """Slope of ``-log sup|Psi(t) - Psi_s|`` over the middle half of the time window."""
    times, snaps = _snapshots(trajectory)
    Ps = stationary.Psi if hasattr(stationary, "Psi") else np.asarray(stationary)
    t = np.asarray(times)
    dist = np.array([np.max(np.abs(P - Ps)) for P in snaps])
    a = t[0] + 0.25 * (t[-1] - t[0])
    b = t[0] + 0.75 * (t[-1] - t[0])
    sel = (t >= a - 1e-12) & (t <= b + 1e-12)
    if sel.sum() < 2 or np.any(dist[sel] <= 10 * EPS):
        raise WindowDegenerate("distance to the stationary state is at round-off on the fit window")
    return _fit_exp(t[sel], dist[sel])[0]


def bump_state(grid: Grid, beta: float, norm3: float = 1e-2, center: float = 8.0, width: float = 2.0,
               weights=(1.0, 0.5, 0.3), transverse_width: float = 4.0) -> FieldState:
    """Smooth compactly concentrated initial perturbation scaled to ``||Psi0||_{3,beta}``.

    ``weights`` apply to (psi, eta1, zeta); in dim 2 the bump is even in x2
    and ``eta2 = 0``.
    """
    st = FieldState.zeros(grid)
    y1 = grid.y1
    prof = np.exp(-(((y1 - center) / width) ** 2))
    if grid.dim == 2:
        prof = prof[:, None] * np.exp(-((grid.y2 / transverse_width) ** 2))[None, :]
    st.Psi[0] = weights[0] * prof
    st.Psi[1] = weights[1] * prof
    st.Psi[-1] = weights[2] * prof
    st.Psi[:, -1] = 0.0
    st.Psi *= norm3 / weighted_norm(st.Psi, 3, beta, grid)
    return st


def summary_dict(sol: StationarySolution, decay: DecayReport | None = None, lam: float | None = None) -> dict:
    out = {"residual": sol.residual, "provenance": sol.provenance,
           "sup_psi": float(np.max(np.abs(sol.Psi))), "sup_sigma": float(np.max(np.abs(sol.sigma))),
           "alpha_fit": sol.background.alpha_fit, "beta": sol.background.beta_default}
    if decay is not None:
        out["translation"] = {k: v for k, v in asdict(decay).items()}
    if lam is not None:
        out["lambda_fit"] = lam
    return out

