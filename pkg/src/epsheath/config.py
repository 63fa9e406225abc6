"""``key = value`` run configuration."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

from .core import BoundaryProfile, Grid, PlasmaParams, bohm_margin, default_L1
from .errors import BohmViolated, ConfigError
from .halfline import sagdeev_curvature, solve_stationary_halfline

REQUIRED = ("m", "R", "gamma", "u_plus", "theta_plus", "phi_b", "dim", "n1")
REQUIRED_2D = ("L2", "n2", "boundary.kind")

FLOAT_KEYS = {"m", "R", "gamma", "u_plus", "theta_plus", "phi_b", "beta", "L1", "L2",
              "cfl", "t_end", "tol_steady", "sigma_tol", "sponge_strength", "snapshot_every",
              "init.norm3", "init.center", "init.width", "init.transverse_width",
              "tol", "t_star", "max_time"}
INT_KEYS = {"dim", "n1", "n2", "stride", "sponge_cells", "max_steps"}
STR_KEYS = {"boundary.kind", "boundary.bumps", "init.kind"}
KNOWN = FLOAT_KEYS | INT_KEYS | STR_KEYS

EVOLVE_KEYS = ("cfl", "t_end", "stride", "tol_steady", "sigma_tol", "sponge_cells", "sponge_strength",
               "snapshot_every", "max_steps")


def parse_config(text: str, source: str = "<config>") -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in KNOWN:
            raise ConfigError(f"{source}:{lineno}: unknown key '{key}'")
        if key in out:
            raise ConfigError(f"{source}:{lineno}: duplicate key '{key}'")
        try:
            if key in FLOAT_KEYS:
                out[key] = float(value)
            elif key in INT_KEYS:
                out[key] = int(value)
            else:
                out[key] = value
        except ValueError:
            raise ConfigError(f"{source}:{lineno}: bad value for '{key}': {value!r}") from None
    return out


def parse_bumps(text: str):
    bumps = []
    for part in filter(None, (p.strip() for p in text.split(";"))):
        try:
            a, c, w = (float(v) for v in part.split(","))
        except ValueError:
            raise ConfigError(f"bad bump triple {part!r}; expected a,c,w") from None
        bumps.append((a, c, w))
    return tuple(bumps)


@dataclass
class RunConfig:
    params: PlasmaParams
    dim: int
    n1: int
    L1: float | None = None
    L2: float = 0.0
    n2: int = 1
    boundary: BoundaryProfile = field(default_factory=BoundaryProfile.flat)
    beta: float | None = None
    evolve: dict = field(default_factory=dict)
    init: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        need = list(REQUIRED)
        if d.get("dim") == 2:
            need += REQUIRED_2D
        for key in need:
            if key not in d:
                raise ConfigError(f"missing config key '{key}'")
        kind = d.get("boundary.kind", "flat")
        bumps = ()
        if kind == "gaussian-sum":
            if "boundary.bumps" not in d:
                raise ConfigError("missing config key 'boundary.bumps'")
            bumps = parse_bumps(d["boundary.bumps"])
        params = PlasmaParams(*(d[k] for k in ("m", "R", "gamma", "u_plus", "theta_plus", "phi_b")))
        init = {k.split(".", 1)[1]: v for k, v in d.items() if k.startswith("init.")}
        return cls(
            params=params, dim=d["dim"], n1=d["n1"], L1=d.get("L1"), L2=d.get("L2", 0.0), n2=d.get("n2", 1),
            boundary=BoundaryProfile(kind, bumps), beta=d.get("beta"),
            evolve={k: d[k] for k in EVOLVE_KEYS if k in d}, init=init,
            extra={k: d[k] for k in ("tol", "t_star", "max_time") if k in d},
        )

    def resolve_L1(self) -> float:
        """Configured depth, else ``40 / alpha_fit``."""
        if self.L1 is not None:
            return self.L1
        return default_L1(estimate_alpha(self.params))

    def grid(self) -> Grid:
        return Grid(self.dim, self.resolve_L1(), self.n1, self.L2, self.n2, self.boundary)


def estimate_alpha(params: PlasmaParams) -> float:
    """Decay rate from the canonical L1 = 20 profile (linearised rate when phi_b = 0)."""
    if bohm_margin(params) <= 0:
        raise BohmViolated(f"Bohm margin {bohm_margin(params):g} <= 0")
    if params.phi_b == 0.0:
        return math.sqrt(sagdeev_curvature(params))
    return solve_stationary_halfline(params, L1=20.0, n1=2000).alpha_fit


def load_config(path) -> RunConfig:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {path}")
    return RunConfig.from_dict(parse_config(p.read_text(encoding="utf-8"), str(p)))
