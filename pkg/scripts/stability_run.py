"""Small bump on the 1D sheath: decay rate, a priori constant and energy monotonicity on two meshes."""
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).parent))
from _cfg import parse_into  # noqa: E402

from epsheath.core import Grid, PlasmaParams, default_L1, weighted_norm  # noqa: E402
from epsheath.diagnostics import NDJSONWriter, RunReport  # noqa: E402
from epsheath.evolve import EvolveConfig, evolve  # noqa: E402
from epsheath.halfline import build_background, solve_stationary_halfline  # noqa: E402
from epsheath.stationary import bump_state, fit_lambda, translation_cauchy_check  # noqa: E402


@dataclass
class Config:
    phi_b: float = -0.05
    norm3: float = 1e-2
    meshes: str = "400,800"
    t_end: float = 60.0
    t_star: float = 5.0
    out_dir: str = "stability_out"


def main(argv=None):
    cfg = parse_into(Config, argv, __doc__)
    p = PlasmaParams(phi_b=cfg.phi_b)
    L1 = default_L1(solve_stationary_halfline(p, 20.0, 2000).alpha_fit)
    Path(cfg.out_dir).mkdir(exist_ok=True)
    for n in (int(v) for v in cfg.meshes.split(",")):
        g = Grid(1, L1, n)
        bg = build_background(p, g)
        beta = bg.beta_default
        init = bump_state(g, beta, cfg.norm3)
        with NDJSONWriter(Path(cfg.out_dir) / f"run_n{n}.ndjson") as sink:
            tr = evolve(init, EvolveConfig(t_end=cfg.t_end, stride=50, snapshot_every=1.0), bg, sinks=[sink])
        rep = RunReport(tr.records)
        lam = fit_lambda(tr, np.zeros_like(init.Psi))
        tc = translation_cauchy_check(tr, cfg.t_star, beta, g)
        ratio = weighted_norm(tr.final.Psi, 0, beta, g) / weighted_norm(init.Psi, 0, beta, g)
        print(f"n1 = {n}: steps {tr.steps}, lambda {lam:.4f}, translation lambda {tc.lam:.4f} (r2 {tc.r2:.3f}), "
              f"norm ratio {ratio:.2e}, C {rep.a_priori_constant(p.phi_b):.4e}, "
              f"energy monotone after 5%: {rep.energy_monotone_after()}")


if __name__ == "__main__":
    main()
