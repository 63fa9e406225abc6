"""Explicit time marching of the perturbation system coupled to the sigma solve.

Convective terms are upwinded per characteristic family.  For a direction
``xi`` the matrix ``K = (A0)^-1 A_xi`` equals ``w I + N`` with ``w = u . xi``
and ``N`` having eigenvalues ``0`` and ``+-a``, ``a = c |xi|``; the spectral
projectors are polynomials in ``N`` so no eigen-decomposition is needed.
"""
from __future__ import annotations

import logging
import math
import struct
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import diagnostics
from .core import BackgroundProfile, FieldState, Grid, local_supersonic_margin, weighted_norm
from .elliptic import EllipticProblem, PoissonOperator, poisson_bounds_check, solve_sigma
from .errors import ConfigError, SupersonicLost, TemperatureNonpositive

log = logging.getLogger(__name__)


@dataclass
class EvolveConfig:
    cfl: float = 0.4
    t_end: float = 10.0
    stride: int = 50
    tol_steady: float = 0.0
    assert_positivity: bool = True
    assert_supersonic: bool = True
    check_bounds: bool = True
    beta: float | None = None
    sigma_tol: float = 1e-10
    sponge_cells: int = 5
    sponge_strength: float = 1.0
    couple_sigma: bool = True
    include_sources: bool = True
    frozen_coefficients: bool = False
    snapshot_every: float | None = None
    max_steps: int | None = None
    checkpoint_every: int = 0
    checkpoint_path: str | None = None
    diagnostics: bool = True

    def __post_init__(self):
        if not 0 < self.cfl <= 0.9:
            raise ConfigError(f"cfl must lie in (0, 0.9], got {self.cfl}")
        if not self.t_end > 0:
            raise ConfigError(f"t_end must be positive, got {self.t_end}")
        if self.stride < 1:
            raise ConfigError("stride must be at least 1")
        if self.cfl > 0.5:
            warnings.warn("cfl above 0.5 exceeds the linear stability limit of the second-order "
                          "upwind scheme with two-stage Runge-Kutta", stacklevel=2)


@dataclass
class CoeffBundle:
    """Background tables, metric terms and the Poisson operator used by ``rhs``."""

    background: BackgroundProfile
    config: EvolveConfig
    operator: PoissonOperator
    sponge: np.ndarray

    @classmethod
    def build(cls, background: BackgroundProfile, config: EvolveConfig | None = None) -> "CoeffBundle":
        config = config or EvolveConfig()
        grid = background.grid
        ramp = np.zeros(grid.n1 + 1)
        k = min(config.sponge_cells, grid.n1 - 1)
        if k > 0 and config.sponge_strength > 0:
            ramp[grid.n1 - k : grid.n1] = config.sponge_strength * (np.arange(1, k + 1) / k) ** 2
        if grid.dim == 2:
            ramp = ramp[:, None]
        return cls(background, config, PoissonOperator(grid), ramp)

    @property
    def grid(self) -> Grid:
        return self.background.grid

    @property
    def params(self):
        return self.background.params

    @property
    def beta(self) -> float:
        return self.config.beta if self.config.beta is not None else self.background.beta_default

    def local_state(self, Psi):
        """Velocity components and temperature entering the convective matrices."""
        p, bg = self.params, self.background
        dim = Psi.shape[0] - 2
        if self.config.frozen_coefficients:
            u = [p.u_plus] + [0.0] * (dim - 1)
            return u, p.theta_plus
        u = [bg.u + Psi[1]] + [Psi[1 + i] for i in range(1, dim)]
        return u, bg.theta + Psi[-1]


# -- one-sided differences along y1 (axis 1 of a stacked field) ---------------
def _d1_minus(F, h):
    out = np.empty_like(F)
    out[:, 2:] = (3 * F[:, 2:] - 4 * F[:, 1:-1] + F[:, :-2]) / (2 * h)
    out[:, 1] = (F[:, 1] - F[:, 0]) / h
    out[:, 0] = (-3 * F[:, 0] + 4 * F[:, 1] - F[:, 2]) / (2 * h)
    return out


def _d1_plus(F, h):
    out = np.empty_like(F)
    out[:, :-2] = (-3 * F[:, :-2] + 4 * F[:, 1:-1] - F[:, 2:]) / (2 * h)
    out[:, -2] = (F[:, -1] - F[:, -2]) / h
    out[:, -1] = (F[:, -1] - F[:, -2]) / h
    return out


def _d2_minus(F, h):
    return (3 * F - 4 * np.roll(F, 1, axis=-1) + np.roll(F, 2, axis=-1)) / (2 * h)


def _d2_plus(F, h):
    return (-3 * F + 4 * np.roll(F, -1, axis=-1) - np.roll(F, -2, axis=-1)) / (2 * h)


def _apply_N(X, theta, xi, p):
    dim = X.shape[0] - 2
    div = sum(xi[i] * X[1 + i] for i in range(dim))
    s = p.R * (theta * X[0] + X[-1]) / p.m
    return np.stack([div] + [xi[i] * s for i in range(dim)] + [(p.gamma - 1.0) * theta * div])


def _split_apply(X, w, a, theta, xi, p, positive: bool):
    """``K^+ X`` (or ``K^- X``) for ``K = w I + N`` via its spectral projectors."""
    f = (lambda z: np.maximum(z, 0.0)) if positive else (lambda z: np.minimum(z, 0.0))
    f0, fp, fm = f(w), f(w + a), f(w - a)
    NX = _apply_N(X, theta, xi, p)
    N2X = _apply_N(NX, theta, xi, p)
    return f0 * X + ((0.5 * (fp + fm) - f0) / (a * a)) * N2X + (0.5 * (fp - fm) / a) * NX


def convective_term(Psi, coeffs: CoeffBundle):
    """Upwinded ``(A0)^-1 sum_j A^j d_j Psi`` in computational coordinates."""
    grid, p = coeffs.grid, coeffs.params
    u, theta = coeffs.local_state(Psi)
    c = np.sqrt(p.gamma * p.R * theta / p.m)
    Dm, Dp = _d1_minus(Psi, grid.h1), _d1_plus(Psi, grid.h1)
    if grid.dim == 1:
        xi = (1.0,)
        w, a = u[0], c
        return _split_apply(Dm, w, a, theta, xi, p, True) + _split_apply(Dp, w, a, theta, xi, p, False)
    s = grid.slope()
    xi = (1.0, -s)
    w = u[0] - s * u[1]
    a = c * np.sqrt(1.0 + s * s)
    out = _split_apply(Dm, w, a, theta, xi, p, True) + _split_apply(Dp, w, a, theta, xi, p, False)
    xi2 = (0.0, 1.0)
    Dm2, Dp2 = _d2_minus(Psi, grid.h2), _d2_plus(Psi, grid.h2)
    out += _split_apply(Dm2, u[1], c, theta, xi2, p, True)
    out += _split_apply(Dp2, u[1], c, theta, xi2, p, False)
    return out


def source_term(Psi, sigma, coeffs: CoeffBundle):
    """``(A0)^-1 [(0, grad sigma, 0) + A0 B~ Psi + (0, h, 0)]``."""
    grid, p, bg = coeffs.grid, coeffs.params, coeffs.background
    out = np.zeros_like(Psi)
    dim = grid.dim
    if coeffs.config.couple_sigma:
        for j in range(dim):
            out[1 + j] += grid.dx(sigma, j) / p.m
    if not coeffs.config.include_sources:
        return out
    eta1, zeta = Psi[1], Psi[-1]
    out[0] += -bg.dv * eta1
    out[1] += -bg.du * eta1 - p.R / p.m * bg.dv * zeta
    out[-1] += -bg.dtheta * eta1 - (p.gamma - 1.0) * bg.du * zeta
    if dim == 2:
        s = grid.slope()
        eta2 = Psi[2]
        out[0] += bg.dv * s * eta2
        out[1] += bg.du * s * eta2
        out[2] += p.R / p.m * bg.dv * s * zeta - bg.u * bg.du * s
        out[-1] += bg.dtheta * s * eta2
    return out


def _check_temperature(Psi, coeffs):
    theta = coeffs.background.theta + Psi[-1]
    if np.any(theta <= 0):
        loc = np.unravel_index(int(np.argmin(theta)), np.shape(theta))
        raise TemperatureNonpositive(f"theta~ + zeta <= 0 at {tuple(int(i) for i in loc)}")


def rhs(state: FieldState, sigma, coeffs: CoeffBundle):
    """Time derivative of ``Psi``; the far-field row is held at zero."""
    Psi = state.Psi if isinstance(state, FieldState) else state
    _check_temperature(Psi, coeffs)
    out = source_term(Psi, sigma, coeffs) - convective_term(Psi, coeffs)
    out -= coeffs.sponge * Psi
    out[:, -1] = 0.0
    return out


def cfl_dt(state: FieldState, background: BackgroundProfile, grid: Grid, cfl: float,
           frozen: bool = False) -> float:
    """Largest stable step.  In dim 2 the per-direction rates are summed."""
    p = background.params
    Psi = state.Psi
    if frozen:
        u1, u2, theta = p.u_plus, 0.0, p.theta_plus
    else:
        theta = background.theta + Psi[-1]
        u1 = background.u + Psi[1]
        u2 = Psi[2] if grid.dim == 2 else 0.0
    if np.any(np.asarray(theta) <= 0):
        raise TemperatureNonpositive("theta~ + zeta <= 0; no admissible time step")
    c = np.sqrt(p.gamma * p.R * np.asarray(theta) / p.m)
    if grid.dim == 1:
        rate = (np.abs(u1) + c) / grid.h1
    else:
        s = grid.slope()
        rate = (np.abs(u1 - s * u2) + c * np.sqrt(1 + s * s)) / grid.h1 + (np.abs(u2) + c) / grid.h2
    return float(cfl / np.max(rate))


def sigma_for(psi, coeffs: CoeffBundle, guess=None):
    if not coeffs.config.couple_sigma:
        return np.zeros(coeffs.grid.shape)
    prob = EllipticProblem(coeffs.grid, psi, coeffs.background, operator=coeffs.operator)
    return solve_sigma(prob, tol=coeffs.config.sigma_tol, guess=guess)


def _assert_state(Psi, coeffs):
    _check_temperature(Psi, coeffs)
    if coeffs.config.assert_supersonic and not coeffs.config.frozen_coefficients:
        st = FieldState(0.0, Psi, np.zeros(coeffs.grid.shape))
        margin = local_supersonic_margin(st, coeffs.background)
        if margin <= 0:
            raise SupersonicLost(f"wall supersonic margin {margin:.4g} <= 0")


def step(state: FieldState, dt: float, coeffs: CoeffBundle, k1=None) -> FieldState:
    """Two-stage SSP Runge-Kutta step; sigma is re-solved at every stage.

    ``state.sigma`` must solve the Poisson equation for ``state.psi``; the
    returned state carries the sigma of its own ``psi``.
    """
    if k1 is None:
        k1 = rhs(state, state.sigma, coeffs)
    P1 = state.Psi + dt * k1
    P1[:, -1] = 0.0
    if coeffs.config.assert_positivity:
        _check_temperature(P1, coeffs)
    s1 = sigma_for(P1[0], coeffs, guess=state.sigma)
    k2 = rhs(P1, s1, coeffs)
    P2 = 0.5 * state.Psi + 0.5 * (P1 + dt * k2)
    P2[:, -1] = 0.0
    if coeffs.config.assert_positivity or coeffs.config.assert_supersonic:
        _assert_state(P2, coeffs)
    s2 = sigma_for(P2[0], coeffs, guess=s1)
    return FieldState(state.t + dt, P2, s2)


@dataclass
class Trajectory:
    grid: Grid
    background: BackgroundProfile
    final: FieldState
    steps: int = 0
    steady: bool = False
    rhs_norm: float = float("inf")
    rhs_max: float = float("inf")
    times: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)
    records: list = field(default_factory=list)

    def snapshot_at(self, t: float, rtol: float = 1e-9):
        for ts, Psi in zip(self.times, self.snapshots):
            if abs(ts - t) <= rtol * max(1.0, abs(t)):
                return Psi
        raise KeyError(t)


def evolve(init: FieldState, config: EvolveConfig, background: BackgroundProfile, sinks=(),
           coeffs: CoeffBundle | None = None, start_step: int = 0) -> Trajectory:
    """March from ``init`` until ``t_end`` or until ``||rhs||_{0,beta} < tol_steady``."""
    coeffs = coeffs or CoeffBundle.build(background, config)
    grid = background.grid
    beta = coeffs.beta
    state = init.copy()
    if state.Psi.shape != (grid.dim + 2,) + grid.shape:
        raise ConfigError("initial state does not match the grid")
    state.Psi[:, -1] = 0.0
    _assert_state(state.Psi, coeffs)
    state.sigma = sigma_for(state.psi, coeffs, guess=state.sigma if np.any(state.sigma) else None)
    traj = Trajectory(grid, background, state)
    tracker = diagnostics.RunningSup()
    snap_dt = config.snapshot_every
    next_snap = state.t if snap_dt else None

    def emit(st, n):
        if not config.diagnostics:
            return
        rec = diagnostics.diagnostic_record(st, coeffs, beta, tracker, step=n)
        rec["rhs_norm0"] = traj.rhs_norm
        traj.records.append(rec)
        for s in sinks:
            s.write(rec)

    def flush():
        for s in sinks:
            if hasattr(s, "flush"):
                s.flush()

    n = start_step
    try:
        while True:
            k1 = rhs(state, state.sigma, coeffs)
            traj.rhs_norm = weighted_norm(k1, 0, beta, grid)
            traj.rhs_max = float(np.max(np.abs(k1)))
            if snap_dt and state.t >= next_snap - 1e-12 * max(1.0, next_snap):
                traj.times.append(state.t)
                traj.snapshots.append(state.Psi.copy())
                next_snap += snap_dt
            if (n - start_step) % config.stride == 0:
                if config.check_bounds and config.couple_sigma:
                    poisson_bounds_check(state.sigma, background)
                emit(state, n)
            if config.tol_steady > 0 and traj.rhs_norm < config.tol_steady:
                traj.steady = True
                break
            if state.t >= config.t_end * (1 - 1e-14) or (config.max_steps and n - start_step >= config.max_steps):
                break
            dt = cfl_dt(state, background, grid, config.cfl, config.frozen_coefficients)
            limit = config.t_end
            if snap_dt:
                limit = min(limit, next_snap)
            if state.t + dt > limit:
                dt = limit - state.t
            elif state.t + 1.5 * dt > limit:
                dt = 0.5 * (limit - state.t)
            state = step(state, dt, coeffs, k1=k1)
            n += 1
            if config.checkpoint_every and config.checkpoint_path and n % config.checkpoint_every == 0:
                write_checkpoint(config.checkpoint_path, state)
        if (n - start_step) % config.stride != 0:
            emit(state, n)
    except Exception:
        traj.final, traj.steps = state, n
        flush()
        raise
    flush()
    traj.final, traj.steps = state, n
    return traj


# -- checkpoints -------------------------------------------------------------
MAGIC = b"EPSH"
VERSION = 1
_HEADER = struct.Struct("<4sIIIId")


def write_checkpoint(path, state: FieldState) -> None:
    """Binary snapshot: magic, u32 version, u32 dim, u32 n1+1, u32 n2, f64 t, then
    ``Psi`` and ``sigma`` as little-endian float64 in C order."""
    dim = state.dim
    shape = state.sigma.shape
    n2 = shape[1] if len(shape) == 2 else 1
    tmp = Path(str(path) + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, dim, shape[0], n2, float(state.t)))
        fh.write(np.ascontiguousarray(state.Psi, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(state.sigma, dtype="<f8").tobytes())
    tmp.replace(path)


def read_checkpoint(path) -> FieldState:
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise ConfigError(f"{path}: truncated checkpoint header")
    magic, version, dim, n1p, n2, t = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise ConfigError(f"{path}: not an EPSH checkpoint")
    if version != VERSION:
        raise ConfigError(f"{path}: unsupported checkpoint version {version}")
    shape = (n1p,) if dim == 1 else (n1p, n2)
    count = (dim + 2) * math.prod(shape)
    body = np.frombuffer(data, dtype="<f8", offset=_HEADER.size)
    if body.size != count + math.prod(shape):
        raise ConfigError(f"{path}: checkpoint size does not match its header")
    Psi = body[:count].reshape((dim + 2,) + shape).astype(float)
    sigma = body[count:].reshape(shape).astype(float)
    return FieldState(t, Psi, sigma)
