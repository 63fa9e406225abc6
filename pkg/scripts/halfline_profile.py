"""Half-line sheath profile for one parameter set, plus its decay-rate fits."""
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).parent))
from _cfg import parse_into  # noqa: E402

from epsheath.core import PlasmaParams  # noqa: E402
from epsheath.halfline import (fit_decay_alpha, sagdeev_curvature, solve_stationary_halfline,  # noqa: E402
                               stationary_residual)


@dataclass
class Config:
    u_plus: float = -2.0
    theta_plus: float = 1.0
    gamma: float = 5.0 / 3.0
    phi_b: float = -0.05
    L1: float = 20.0
    n1: int = 2000
    out: str = "halfline_profile.csv"


def main(argv=None):
    cfg = parse_into(Config, argv, __doc__)
    p = PlasmaParams(gamma=cfg.gamma, u_plus=cfg.u_plus, theta_plus=cfg.theta_plus, phi_b=cfg.phi_b)
    prof = solve_stationary_halfline(p, L1=cfg.L1, n1=cfg.n1)
    lin = math.sqrt(sagdeev_curvature(p))
    print(f"residual            {stationary_residual(prof)['max']:.3e}")
    print(f"alpha fit (phi)     {prof.alpha_fit:.6f}")
    print(f"alpha fit (dphi)    {fit_decay_alpha(prof, which='dphi'):.6f}")
    print(f"alpha linearised    {lin:.6f}")
    print(f"rho(0), u(0)        {prof.rho[0]:.6f}, {prof.u[0]:.6f}")
    table = np.column_stack([prof.x1, prof.rho, prof.u, prof.theta, prof.phi, prof.dphi])
    np.savetxt(cfg.out, table, delimiter=",", header="x1,rho,u,theta,phi,dphi", comments="", fmt="%.12g")
    print(f"wrote {cfg.out}")


if __name__ == "__main__":
    main()
