"""Command-line entry point.

Exit codes: 0 success, 2 configuration error, 3 solver error.  Errors go to
standard error prefixed with ``EPSH-ERR:``.
"""
from __future__ import annotations

import argparse
import os
import sys

from .errors import ConfigError, SolverError


def _limit_threads() -> None:
    # must run before numpy loads its BLAS
    n = os.environ.get("EPSH_THREADS", "0").strip()
    if n and n != "0":
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ[var] = n


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="epsheath", description="Plasma-sheath Euler-Poisson simulation suite")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default="./out", help="output directory (default ./out)")
    common.add_argument("--quiet", action="store_true", help="suppress progress output")
    common.add_argument("--seed", type=int, default=0, help="seed for random scans")
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("stationary1d", parents=[common], help="half-line stationary profile")
    s.add_argument("--config", required=True)

    s = sub.add_parser("evolve", parents=[common], help="time-march a perturbation")
    s.add_argument("--config", required=True)
    s.add_argument("--checkpoint-every", type=int, default=0, metavar="N")
    s.add_argument("--resume", metavar="PATH")

    s = sub.add_parser("stationary", parents=[common], help="stationary solution as a long-time limit")
    s.add_argument("--config", required=True)
    s.add_argument("--tol", type=float)
    s.add_argument("--t-star", type=float)
    s.add_argument("--max-time", type=float)

    s = sub.add_parser("bohm-scan", parents=[common], help="random scan of the Bohm/Sagdeev/flux conditions")
    s.add_argument("--config", help="optional base parameters (m, R fixed from it)")
    s.add_argument("--samples", type=int, default=100)

    s = sub.add_parser("check-matrices", parents=[common], help="eigenvalue margins of A0, F, -F1")
    s.add_argument("--config", required=True)

    s = sub.add_parser("report", parents=[common], help="summarise a run NDJSON file")
    s.add_argument("input", help="run NDJSON file")
    return ap


def _say(args, msg: str) -> None:
    if not args.quiet:
        print(msg)


def _write_json(path, obj) -> None:
    import json

    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=float)
        fh.write("\n")


def _write_csv(path, header, table) -> None:
    import numpy as np

    np.savetxt(path, table, delimiter=",", header=",".join(header), comments="", fmt="%.17g")


def cmd_stationary1d(args) -> int:
    import numpy as np

    from .config import load_config
    from .core import bohm_margin
    from .halfline import sagdeev_curvature, solve_stationary_halfline, stationary_residual

    cfg = load_config(args.config)
    L1 = cfg.L1 if cfg.L1 is not None else 20.0
    prof = solve_stationary_halfline(cfg.params, L1=L1, n1=cfg.n1)
    res = stationary_residual(prof)
    table = np.column_stack([prof.x1, prof.rho, prof.u, prof.theta, prof.phi, prof.dphi])
    _write_csv(os.path.join(args.out, "profile.csv"), ["x1", "rho", "u", "theta", "phi", "dphi"], table)
    summary = {"alpha_fit": prof.alpha_fit, "alpha_linearised": float(np.sqrt(sagdeev_curvature(cfg.params))),
               "residual": res, "bohm_margin": bohm_margin(cfg.params), "L1": L1, "n1": cfg.n1}
    _write_json(os.path.join(args.out, "summary.json"), summary)
    _say(args, f"alpha_fit = {prof.alpha_fit:.6f}, residual = {res['max']:.3e}")
    return 0


def _setup_run(cfg):
    from .core import FieldState
    from .evolve import EvolveConfig
    from .halfline import build_background
    from .stationary import bump_state

    grid = cfg.grid()
    bg = build_background(cfg.params, grid)
    ev = EvolveConfig(beta=cfg.beta, **cfg.evolve)
    beta = ev.beta if ev.beta is not None else bg.beta_default
    kind = cfg.init.get("kind", "zero")
    if kind == "zero":
        init = FieldState.zeros(grid)
    elif kind == "bump":
        kw = {k: cfg.init[k] for k in ("norm3", "center", "width", "transverse_width") if k in cfg.init}
        init = bump_state(grid, beta, **kw)
    else:
        raise ConfigError(f"unknown init.kind {kind!r}")
    return grid, bg, ev, init


def cmd_evolve(args) -> int:
    from dataclasses import replace

    from .config import load_config
    from .diagnostics import NDJSONWriter, RunReport
    from .evolve import evolve, read_checkpoint, write_checkpoint

    cfg = load_config(args.config)
    grid, bg, ev, init = _setup_run(cfg)
    ckpt = os.path.join(args.out, "checkpoint.epsh")
    ev = replace(ev, checkpoint_every=args.checkpoint_every, checkpoint_path=ckpt)
    if args.resume:
        init = read_checkpoint(args.resume)
        if init.Psi.shape[1:] != grid.shape:
            raise ConfigError("checkpoint grid does not match the configuration")
    path = os.path.join(args.out, "run.ndjson")
    with NDJSONWriter(path) as sink:
        traj = evolve(init, ev, bg, sinks=[sink])
    write_checkpoint(os.path.join(args.out, "final.epsh"), traj.final)
    rep = RunReport(traj.records)
    _write_json(os.path.join(args.out, "summary.json"),
                {"steps": traj.steps, "t": traj.final.t, "steady": traj.steady, "rhs_norm0": traj.rhs_norm,
                 "a_priori_C": rep.a_priori_constant(cfg.params.phi_b) if traj.records else None})
    _say(args, rep.summary())
    return 0


def cmd_stationary(args) -> int:
    from .config import load_config
    from .diagnostics import NDJSONWriter
    from .stationary import compute_stationary, fit_lambda, summary_dict, translation_cauchy_check

    cfg = load_config(args.config)
    grid, bg, ev, _ = _setup_run(cfg)
    tol = args.tol if args.tol is not None else cfg.extra.get("tol", 1e-8)
    t_star = args.t_star if args.t_star is not None else cfg.extra.get("t_star", 5.0)
    max_time = args.max_time if args.max_time is not None else cfg.extra.get("max_time", 500.0)
    with NDJSONWriter(os.path.join(args.out, "run.ndjson")) as sink:
        sol = compute_stationary(cfg.params, cfg.boundary, grid, tol=tol, config=ev, max_time=max_time,
                                 t_star=t_star, background=bg, sinks=[sink])
    header, table = sol.csv_rows()
    _write_csv(os.path.join(args.out, "stationary.csv"), header, table)
    decay = lam = None
    try:
        decay = translation_cauchy_check(sol.trajectory, t_star, bg.beta_default, grid)
        lam = fit_lambda(sol.trajectory, sol)
    except SolverError as exc:
        _say(args, f"rate fit skipped: {exc}")
    _write_json(os.path.join(args.out, "stationary.json"), summary_dict(sol, decay, lam))
    _say(args, f"steady after {sol.provenance['steps']} steps, t = {sol.provenance['t']:.4g}; "
               f"residual = {sol.residual['max']:.3e}")
    return 0


def cmd_bohm_scan(args) -> int:
    import numpy as np

    from .core import PlasmaParams, bohm_margin
    from .config import load_config
    from .halfline import sagdeev_curvature_fd
    from .matrices import assemble_F1, min_eig

    base = load_config(args.config).params if args.config else PlasmaParams()
    rng = np.random.default_rng(args.seed)
    rows = []
    mismatches = 0
    while len(rows) < args.samples:
        gamma = rng.uniform(1.05, 3.0)
        theta = rng.uniform(0.2, 3.0)
        u = -rng.uniform(0.1, 4.0)
        p = PlasmaParams(base.m, base.R, gamma, u, theta, 0.0)
        if p.m * u * u <= gamma * p.R * theta:
            continue
        bm = bohm_margin(p)
        w2 = sagdeev_curvature_fd(p)
        f1 = min_eig(-assemble_F1([u], theta, p))
        agree = np.sign(bm) == np.sign(w2)
        mismatches += not agree
        rows.append([p.m, p.R, gamma, u, theta, bm, w2, f1, "sheath" if bm > 0 else "no-sheath",
                     "agree" if agree else "MISMATCH"])
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "bohm_scan.csv")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("m,R,gamma,u_plus,theta_plus,bohm_margin,W2,mineig_minus_F1,outcome,sign_check\n")
        for r in rows:
            fh.write(",".join(f"{v:.12g}" if isinstance(v, float) else str(v) for v in r) + "\n")
    _say(args, f"{len(rows)} samples, {mismatches} sign mismatches -> {path}")
    return 0 if mismatches == 0 else 3


def cmd_check_matrices(args) -> int:
    from .config import load_config
    from .core import bohm_margin
    from .halfline import solve_stationary_halfline
    from .matrices import assemble_A, assemble_F, assemble_F1, far_field_margins, min_eig

    cfg = load_config(args.config)
    p = cfg.params
    m = far_field_margins(p, cfg.dim)
    checks = {"bohm_margin": bohm_margin(p), "far_field.min_eig_A0": m.A0, "far_field.min_eig_F": m.F,
              "far_field.min_eig_minus_F1": m.minus_F1, "far_field.normal_speed": m.normal_speed}
    if p.phi_b != 0.0 and bohm_margin(p) > 0:
        prof = solve_stationary_halfline(p, L1=cfg.L1 or 20.0, n1=cfg.n1)
        checks["profile.min_eig_A0"] = min(min_eig(assemble_A(0, [u], th, p)) for u, th in zip(prof.u, prof.theta))
        checks["profile.min_eig_minus_F1"] = min(min_eig(-assemble_F1([u], th, p)) for u, th in zip(prof.u, prof.theta))
        checks["wall.min_eig_F"] = min_eig(assemble_F([prof.u[0]], prof.theta[0], [-1.0], p))
    failed = [k for k, v in checks.items() if not v > 0]
    for k, v in checks.items():
        _say(args, f"{k:32s} {v: .6e}  {'FAIL' if k in failed else 'ok'}")
    if failed:
        raise SolverError("positivity failed: " + ", ".join(f"{k} = {checks[k]:.6g}" for k in failed))
    return 0


def cmd_report(args) -> int:
    from .diagnostics import PLOT_SCRIPT, RunReport

    if not os.path.isfile(args.input):
        raise ConfigError(f"input not found: {args.input}")
    rep = RunReport.from_ndjson(args.input)
    text = rep.summary()
    with open(os.path.join(args.out, "summary.txt"), "w", encoding="utf-8") as fh:
        fh.write(text)
    with open(os.path.join(args.out, "plot_report.py"), "w", encoding="utf-8") as fh:
        fh.write(PLOT_SCRIPT)
    _say(args, text.rstrip())
    return 0


COMMANDS = {
    "stationary1d": cmd_stationary1d,
    "evolve": cmd_evolve,
    "stationary": cmd_stationary,
    "bohm-scan": cmd_bohm_scan,
    "check-matrices": cmd_check_matrices,
    "report": cmd_report,
}


def run_cli(argv=None) -> int:
    _limit_threads()
    args = build_parser().parse_args(argv)
    try:
        os.makedirs(args.out, exist_ok=True)
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"EPSH-ERR: config: {exc}", file=sys.stderr)
        return 2
    except SolverError as exc:
        print(f"EPSH-ERR: solver: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
