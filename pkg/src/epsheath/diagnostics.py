"""Weighted-energy diagnostics, run records and their NDJSON serialisation."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import FieldState, Grid, local_supersonic_margin, wall_normal, weighted_norm
from .elliptic import poisson_bounds_check
from .errors import TemperatureNonpositive
from .matrices import assemble_F, min_eig

SCHEMA = 1


def _background(coeffs):
    return getattr(coeffs, "background", coeffs)


def energy_functional(state: FieldState, coeffs, grid: Grid, beta: float) -> float:
    """``int e^(beta y1) [psi^2 + <A0 Psi, Psi> + m (div eta)^2 + R theta |grad psi|^2
    + R/((gamma-1) theta) |grad zeta|^2]`` with trapezoidal quadrature."""
    bg = _background(coeffs)
    p = bg.params
    theta = bg.theta + state.zeta
    if np.any(theta <= 0):
        raise TemperatureNonpositive("theta~ + zeta <= 0 in the energy functional")
    psi, eta, zeta = state.psi, state.eta, state.zeta
    dim = grid.dim
    a0 = p.R * theta * psi**2 + p.m * sum(e * e for e in eta) + p.R / ((p.gamma - 1.0) * theta) * zeta**2
    div = sum(grid.dx(eta[j], j) for j in range(dim))
    gpsi = sum(grid.dx(psi, j) ** 2 for j in range(dim))
    gzeta = sum(grid.dx(zeta, j) ** 2 for j in range(dim))
    integrand = psi**2 + a0 + p.m * div**2 + p.R * theta * gpsi + p.R / ((p.gamma - 1.0) * theta) * gzeta
    weight = np.exp(beta * grid.y1)
    if dim == 2:
        weight = weight[:, None]
    return grid.integrate(weight * integrand)


def wall_flux_margin(state: FieldState, coeffs) -> float:
    """Smallest eigenvalue of ``F`` over the wall nodes."""
    bg = _background(coeffs)
    grid, p = bg.grid, bg.params
    nn1, nn2 = wall_normal(grid)
    theta = np.atleast_1d(bg.full(bg.theta)[0] + state.zeta[0])
    u1 = np.atleast_1d(bg.full(bg.u)[0] + state.eta[0][0])
    worst = math.inf
    for k in range(theta.size):
        if grid.dim == 1:
            u, n = [u1[k]], [nn1[0]]
        else:
            u, n = [u1[k], state.eta[1][0][k]], [nn1[k], nn2[k]]
        worst = min(worst, min_eig(assemble_F(u, theta[k], n, p)))
    return worst


class RunningSup:
    """Running ``N_{r,beta}(t) = sup_s ||Psi(s)||_{r,beta}`` for r = 0..3."""

    def __init__(self):
        self.values = [0.0] * 4

    def update(self, norms):
        self.values = [max(a, b) for a, b in zip(self.values, norms)]
        return list(self.values)


def diagnostic_record(state: FieldState, coeffs, beta: float, tracker: RunningSup | None = None,
                      step: int = 0) -> dict:
    bg = _background(coeffs)
    grid = bg.grid
    psi_norms = [weighted_norm(state.Psi, k, beta, grid) for k in range(4)]
    sig_norms = [weighted_norm(state.sigma, k, beta, grid) for k in range(3)]
    rec = {
        "schema": SCHEMA,
        "step": int(step),
        "t": float(state.t),
        "psi_norms": psi_norms,
        "sigma_norms": sig_norms,
        "energy": energy_functional(state, coeffs, grid, beta),
        "sup_psi": float(np.max(np.abs(state.Psi))),
        "sup_sigma": float(np.max(np.abs(state.sigma))),
        "wall_F_margin": wall_flux_margin(state, coeffs),
        "wall_speed_margin": local_supersonic_margin(state, bg),
        "poisson_margin": poisson_bounds_check(state.sigma, bg).margin,
    }
    if tracker is not None:
        rec["N_r_beta"] = tracker.update(psi_norms)
    return rec


class NDJSONWriter:
    """Append-only writer, one JSON object per line, flushed per record."""

    def __init__(self, path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = open(self.path, "a", encoding="utf-8")

    def write(self, record: dict) -> None:
        rec = dict(record)
        rec.setdefault("schema", SCHEMA)
        self._fh.write(json.dumps(rec, sort_keys=True, allow_nan=True) + "\n")
        self._fh.flush()

    def flush(self) -> None:
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class ListSink:
    def __init__(self):
        self.records = []

    def write(self, record: dict) -> None:
        self.records.append(dict(record))


def read_ndjson(path) -> list:
    """Parse line by line, skipping a torn trailing line from a crashed run."""
    out = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line:
            continue
        try:
            out.append(json.loads(line))
        except json.JSONDecodeError:
            continue
    return out


@dataclass
class RunReport:
    records: list = field(default_factory=list)

    @classmethod
    def from_ndjson(cls, path) -> "RunReport":
        return cls(read_ndjson(path))

    def series(self, key, index=None):
        vals = [r[key] if index is None else r[key][index] for r in self.records if key in r]
        return np.asarray(vals, dtype=float)

    def validate(self) -> None:
        t = self.series("t")
        if np.any(np.diff(t) <= 0):
            raise ValueError("diagnostic times are not strictly increasing")
        for r in self.records:
            for k in ("psi_norms", "sigma_norms"):
                v = np.asarray(r.get(k, []), dtype=float)
                if np.any(~np.isfinite(v)) or np.any(v < 0):
                    raise ValueError(f"bad norm values at t = {r.get('t')}")

    def a_priori_constant(self, phi_b: float) -> float:
        """``sup_t ||Psi||_{0,beta}^2 / (||Psi_0||_{0,beta}^2 + |phi_b|)``."""
        n0 = self.series("psi_norms", 0)
        return float(np.max(n0**2) / (n0[0] ** 2 + abs(phi_b)))

    def energy_monotone_after(self, fraction: float = 0.05) -> bool:
        t, e = self.series("t"), self.series("energy")
        keep = t >= t[0] + fraction * (t[-1] - t[0])
        return bool(np.all(np.diff(e[keep]) <= 1e-14 * max(1.0, float(np.max(e)))))

    def summary(self) -> str:
        if not self.records:
            return "empty run report\n"
        first, last = self.records[0], self.records[-1]
        lines = [
            f"records: {len(self.records)}",
            f"time span: {first['t']:.6g} .. {last['t']:.6g}",
            f"||Psi||_0,beta: {first['psi_norms'][0]:.6e} -> {last['psi_norms'][0]:.6e}",
            f"||Psi||_3,beta: {first['psi_norms'][3]:.6e} -> {last['psi_norms'][3]:.6e}",
            f"energy: {first['energy']:.6e} -> {last['energy']:.6e}",
            f"sup|sigma| final: {last['sup_sigma']:.6e}",
            f"min wall F margin: {min(r['wall_F_margin'] for r in self.records):.6g}",
            f"min wall speed margin: {min(r['wall_speed_margin'] for r in self.records):.6g}",
            f"min Poisson-bound margin: {min(r['poisson_margin'] for r in self.records):.6g}",
        ]
        if "N_r_beta" in last:
            lines.append("N_r,beta (r=0..3): " + ", ".join(f"{v:.4e}" for v in last["N_r_beta"]))
        return "\n".join(lines) + "\n"


PLOT_SCRIPT = """\
# Plotting commands for an epsheath run report.
# Usage: python plot_report.py run.ndjson
import json, sys
import matplotlib.pyplot as plt

recs = [json.loads(l) for l in open(sys.argv[1]) if l.strip()]
t = [r["t"] for r in recs]
fig, ax = plt.subplots(1, 2, figsize=(10, 4))
for k in range(4):
    ax[0].semilogy(t, [r["psi_norms"][k] for r in recs], label=f"||Psi||_{k},beta")
ax[0].semilogy(t, [r["energy"] for r in recs], "k--", label="E(t)")
ax[0].set_xlabel("t"); ax[0].legend()
ax[1].plot(t, [r["wall_speed_margin"] for r in recs], label="wall speed margin")
ax[1].plot(t, [r["wall_F_margin"] for r in recs], label="min eig F")
ax[1].set_xlabel("t"); ax[1].legend()
fig.tight_layout()
fig.savefig(sys.argv[1] + ".png", dpi=120)
"""
