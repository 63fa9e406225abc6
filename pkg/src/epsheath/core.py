"""Parameters, wall geometry, mapped grids and discrete weighted norms.

The physical domain is ``{x1 > M(x2)}``.  Every grid lives in computational
coordinates ``y1 = x1 - M(x2)``, ``y2 = x2``; node ``i = 0`` is the wall and
``i = n1`` the artificial far-field row.  In two dimensions the transverse
direction is periodic on ``[-L2, L2)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .errors import InvalidParameters, OrderUnsupported, TemperatureNonpositive


@dataclass(frozen=True)
class PlasmaParams:
    m: float = 1.0
    R: float = 1.0
    gamma: float = 5.0 / 3.0
    u_plus: float = -2.0
    theta_plus: float = 1.0
    phi_b: float = 0.0

    def __post_init__(self):
        if not self.m > 0:
            raise InvalidParameters(f"m must be positive, got {self.m}")
        if not self.R > 0:
            raise InvalidParameters(f"R must be positive, got {self.R}")
        if not self.gamma > 1:
            raise InvalidParameters(f"gamma must exceed 1, got {self.gamma}")
        if not self.theta_plus > 0:
            raise InvalidParameters(f"theta_plus must be positive, got {self.theta_plus}")
        if not self.u_plus < 0:
            raise InvalidParameters(f"u_plus must be negative, got {self.u_plus}")
        if not math.isfinite(self.phi_b):
            raise InvalidParameters("phi_b must be finite")

    @property
    def sound_speed_plus(self) -> float:
        return math.sqrt(self.gamma * self.R * self.theta_plus / self.m)

    def sound_speed(self, theta):
        return np.sqrt(self.gamma * self.R * np.asarray(theta) / self.m)

    def replace(self, **changes) -> "PlasmaParams":
        kw = dict(self.__dict__)
        kw.update(changes)
        return PlasmaParams(**kw)


@dataclass(frozen=True)
class BoundaryProfile:
    """Wall graph ``M(s) = sum a exp(-((s - c)/w)^2)``, or ``M = 0`` when flat."""

    kind: str = "flat"
    bumps: tuple = ()

    def __post_init__(self):
        if self.kind not in ("flat", "gaussian-sum"):
            raise InvalidParameters(f"unknown boundary kind {self.kind!r}")
        bumps = tuple(tuple(float(v) for v in b) for b in self.bumps)
        for b in bumps:
            if len(b) != 3 or not b[2] > 0:
                raise InvalidParameters(f"bump must be (a, c, w) with w > 0, got {b}")
        if self.kind == "flat" and bumps:
            raise InvalidParameters("a flat boundary takes no bumps")
        object.__setattr__(self, "bumps", bumps)

    @classmethod
    def flat(cls) -> "BoundaryProfile":
        return cls("flat", ())

    @classmethod
    def gaussian(cls, a: float, c: float = 0.0, w: float = 1.0) -> "BoundaryProfile":
        return cls("gaussian-sum", ((a, c, w),))

    @property
    def is_flat(self) -> bool:
        return self.kind == "flat" or all(a == 0.0 for a, _, _ in self.bumps)

    def M(self, s):
        s = np.asarray(s, dtype=float)
        out = np.zeros_like(s)
        for a, c, w in self.bumps:
            z = (s - c) / w
            out = out + a * np.exp(-z * z)
        return out

    def dM(self, s):
        s = np.asarray(s, dtype=float)
        out = np.zeros_like(s)
        for a, c, w in self.bumps:
            z = (s - c) / w
            out = out - 2.0 * a * z / w * np.exp(-z * z)
        return out

    def d2M(self, s):
        s = np.asarray(s, dtype=float)
        out = np.zeros_like(s)
        for a, c, w in self.bumps:
            z = (s - c) / w
            out = out + a * (4.0 * z * z - 2.0) / (w * w) * np.exp(-z * z)
        return out

    def max_abs_slope(self) -> float:
        """sup |M'| from a dense sample plus the critical points of each bump."""
        if self.is_flat:
            return 0.0
        lo = min(c - 8 * w for _, c, w in self.bumps)
        hi = max(c + 8 * w for _, c, w in self.bumps)
        s = np.linspace(lo, hi, 40001)
        extra = [c + sgn * w / math.sqrt(2.0) for _, c, w in self.bumps for sgn in (-1, 1)]
        s = np.concatenate([s, np.asarray(extra)])
        return float(np.max(np.abs(self.dM(s))))

    def to_config(self) -> str:
        return ";".join(f"{a:g},{c:g},{w:g}" for a, c, w in self.bumps)


@dataclass(frozen=True)
class Grid:
    dim: int
    L1: float
    n1: int
    L2: float = 0.0
    n2: int = 1
    boundary: BoundaryProfile = field(default_factory=BoundaryProfile.flat)

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise InvalidParameters(f"dim must be 1 or 2, got {self.dim}")
        if not self.L1 > 0 or self.n1 < 8:
            raise InvalidParameters("need L1 > 0 and n1 >= 8")
        if self.dim == 2:
            if not self.L2 > 0 or self.n2 < 8:
                raise InvalidParameters("need L2 > 0 and n2 >= 8 in dim 2")
        else:
            if not self.boundary.is_flat:
                raise InvalidParameters("a curved wall needs dim 2")
            object.__setattr__(self, "n2", 1)

    @property
    def h1(self) -> float:
        return self.L1 / self.n1

    @property
    def h2(self) -> float:
        return 2.0 * self.L2 / self.n2 if self.dim == 2 else 1.0

    @property
    def shape(self) -> tuple:
        return (self.n1 + 1,) if self.dim == 1 else (self.n1 + 1, self.n2)

    @property
    def y1(self) -> np.ndarray:
        return np.linspace(0.0, self.L1, self.n1 + 1)

    @property
    def y2(self) -> np.ndarray:
        return -self.L2 + self.h2 * np.arange(self.n2)

    def mesh(self):
        """Computational node coordinates broadcast to ``shape``."""
        if self.dim == 1:
            return (self.y1,)
        return np.meshgrid(self.y1, self.y2, indexing="ij")

    def physical_x1(self) -> np.ndarray:
        if self.dim == 1:
            return self.y1
        Y1, Y2 = self.mesh()
        return Y1 + self.boundary.M(Y2)

    # metric terms, shaped to broadcast against field arrays
    def slope(self):
        if self.dim == 1:
            return 0.0
        return self.boundary.dM(self.y2)[None, :]

    def curvature(self):
        if self.dim == 1:
            return 0.0
        return self.boundary.d2M(self.y2)[None, :]

    def with_resolution(self, n1: int, n2: int | None = None) -> "Grid":
        return Grid(self.dim, self.L1, n1, self.L2, self.n2 if n2 is None else n2, self.boundary)

    # -- discrete derivatives ------------------------------------------------
    def dy1(self, f):
        return np.gradient(f, self.h1, axis=0, edge_order=2)

    def dy2(self, f):
        return (np.roll(f, -1, axis=1) - np.roll(f, 1, axis=1)) / (2.0 * self.h2)

    def dx(self, f, j: int):
        """Physical derivative d/dx_j (j = 0 normal, j = 1 transverse)."""
        if j == 0:
            return self.dy1(f)
        if self.dim == 1:
            raise ValueError("no transverse direction in dim 1")
        return self.dy2(f) - self.slope() * self.dy1(f)

    def quadrature_weights(self) -> np.ndarray:
        """Trapezoidal weights in y1 times uniform periodic weights in y2.

        The graph mapping has unit Jacobian, so no area factor appears.
        """
        w1 = np.full(self.n1 + 1, self.h1)
        w1[0] = w1[-1] = 0.5 * self.h1
        if self.dim == 1:
            return w1
        return w1[:, None] * np.full((1, self.n2), self.h2)

    def integrate(self, f) -> float:
        return float(np.sum(self.quadrature_weights() * f))


def bohm_margin(params: PlasmaParams) -> float:
    """``m u+^2 - gamma R theta+ - 1``; positive iff the Bohm criterion holds."""
    p = params
    return p.m * p.u_plus**2 - p.gamma * p.R * p.theta_plus - 1.0


def supersonic_outflow_margin(params: PlasmaParams, boundary: BoundaryProfile) -> float:
    p = params
    slope = boundary.max_abs_slope()
    return -p.u_plus / math.sqrt(1.0 + slope * slope) - p.sound_speed_plus


def wall_normal(grid: Grid):
    """Outward unit normal at the wall nodes, components (n1, n2)."""
    s = np.atleast_1d(np.asarray(grid.slope(), dtype=float)).ravel()
    if grid.dim == 1:
        return np.array([-1.0]), np.array([0.0])
    norm = np.sqrt(1.0 + s * s)
    return -1.0 / norm, s / norm


def local_supersonic_margin(state, background, boundary: BoundaryProfile | None = None) -> float:
    """min over the wall of ``u . grad(M - x1)/|grad(M - x1)| - sqrt(gamma R theta/m)``."""
    grid = background.grid
    p = background.params
    theta = background.theta[0] + state.zeta[0]
    if np.any(theta <= 0):
        raise TemperatureNonpositive("temperature nonpositive on the wall")
    u1 = background.u[0] + state.eta[0][0]
    nn1, nn2 = wall_normal(grid)
    un = nn1 * u1
    if grid.dim == 2:
        un = un + nn2 * state.eta[1][0]
    return float(np.min(un - np.sqrt(p.gamma * p.R * theta / p.m)))


def _derivative_tensor(f, grid: Grid, order: int):
    """All physical partial derivatives of the given order (ordered tuples)."""
    if order == 0:
        return [f]
    dirs = range(grid.dim)
    cache = {(): f}
    for seq in product(dirs, repeat=order):
        for depth in range(1, order + 1):
            key = seq[:depth]
            if key not in cache:
                cache[key] = grid.dx(cache[key[:-1]], key[-1])
    return [cache[seq] for seq in product(dirs, repeat=order)]


def weighted_norm(field, k: int, beta: float, grid: Grid) -> float:
    """Discrete ``H^k_beta`` norm with weight ``exp(beta * y1)``.

    ``field`` may be a scalar grid array or a stack of components with the
    component axis first; the squared norms of the components add.
    """
    if k > 3 or k < 0:
        raise OrderUnsupported(f"derivative order {k} not supported (max 3)")
    arr = np.asarray(field, dtype=float)
    comps = [arr] if arr.shape == grid.shape else list(arr)
    weight = np.exp(beta * grid.y1)
    if grid.dim == 2:
        weight = weight[:, None]
    weight = weight * grid.quadrature_weights()
    total = 0.0
    for comp in comps:
        for j in range(k + 1):
            for d in _derivative_tensor(comp, grid, j):
                total += float(np.sum(weight * d * d))
    return math.sqrt(total)


def default_beta(alpha_fit: float) -> float:
    return min(alpha_fit / 2.0, 0.25)


def default_L1(alpha_fit: float) -> float:
    return 40.0 / alpha_fit


@dataclass
class FieldState:
    """Perturbation ``Psi = (psi, eta, zeta)`` stacked on axis 0, plus ``sigma``."""

    t: float
    Psi: np.ndarray
    sigma: np.ndarray

    @classmethod
    def zeros(cls, grid: Grid, t: float = 0.0) -> "FieldState":
        return cls(t, np.zeros((grid.dim + 2,) + grid.shape), np.zeros(grid.shape))

    @property
    def dim(self) -> int:
        return self.Psi.shape[0] - 2

    @property
    def psi(self):
        return self.Psi[0]

    @property
    def eta(self):
        return self.Psi[1 : 1 + self.dim]

    @property
    def zeta(self):
        return self.Psi[-1]

    def copy(self) -> "FieldState":
        return FieldState(self.t, self.Psi.copy(), self.sigma.copy())


@dataclass(frozen=True)
class BackgroundProfile:
    """Half-line stationary solution composed with ``x1 - M(x2)`` on a grid.

    Arrays are indexed by ``y1`` and shaped to broadcast against fields
    (``(n1+1,)`` in dim 1, ``(n1+1, 1)`` in dim 2).
    """

    grid: Grid
    params: PlasmaParams
    v: np.ndarray
    u: np.ndarray
    theta: np.ndarray
    phi: np.ndarray
    dv: np.ndarray
    du: np.ndarray
    dtheta: np.ndarray
    dphi: np.ndarray
    d2phi: np.ndarray
    alpha_fit: float

    @classmethod
    def from_profile(cls, profile, grid: Grid, params: PlasmaParams) -> "BackgroundProfile":
        if len(profile.x1) != grid.n1 + 1 or not np.allclose(profile.x1, grid.y1):
            raise InvalidParameters("profile nodes do not match the grid normal nodes")
        shape = (-1,) if grid.dim == 1 else (-1, 1)
        t = {k: np.asarray(getattr(profile, k), dtype=float).reshape(shape)
             for k in ("rho", "u", "theta", "phi", "dphi", "drho", "du", "dtheta", "d2phi")}
        if np.any(t["rho"] <= 0) or np.any(t["theta"] <= 0):
            raise TemperatureNonpositive("background density/temperature not positive")
        return cls(grid=grid, params=params, v=np.log(t["rho"]), u=t["u"], theta=t["theta"],
                   phi=t["phi"], dv=t["drho"] / t["rho"], du=t["du"], dtheta=t["dtheta"],
                   dphi=t["dphi"], d2phi=t["d2phi"], alpha_fit=float(profile.alpha_fit))

    @property
    def beta_default(self) -> float:
        return default_beta(self.alpha_fit)

    def full(self, arr) -> np.ndarray:
        return np.broadcast_to(arr, self.grid.shape)
