"""Regular sweep over (u+, gamma): Bohm margin, Sagdeev curvature, min-eig(-F1).

Flags the supersonic-but-sub-Bohm band where the flux matrix stays positive.
"""
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).parent))
from _cfg import parse_into  # noqa: E402

from epsheath.core import PlasmaParams, bohm_margin  # noqa: E402
from epsheath.halfline import sagdeev_curvature  # noqa: E402
from epsheath.matrices import assemble_F1, min_eig  # noqa: E402


@dataclass
class Config:
    theta_plus: float = 1.0
    u_min: float = 1.0
    u_max: float = 3.0
    n_u: int = 21
    gammas: str = "1.2,1.6666666666666667,2.5"


def main(argv=None):
    cfg = parse_into(Config, argv, __doc__)
    print(f"{'gamma':>7} {'u+':>7} {'bohm':>10} {'W2':>10} {'mineig(-F1)':>12}  note")
    for g in (float(v) for v in cfg.gammas.split(",")):
        for u in np.linspace(cfg.u_min, cfg.u_max, cfg.n_u):
            p = PlasmaParams(gamma=g, theta_plus=cfg.theta_plus, u_plus=-u)
            if u * u <= g * cfg.theta_plus:
                continue
            bm = bohm_margin(p)
            f1 = min_eig(-assemble_F1([-u], cfg.theta_plus, p))
            note = "sub-Bohm, F1 still definite" if bm <= 0 < f1 else ""
            print(f"{g:7.3f} {-u:7.3f} {bm:10.4f} {sagdeev_curvature(p):10.4f} {f1:12.5f}  {note}")


if __name__ == "__main__":
    main()
