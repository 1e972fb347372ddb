# run_galerkin.py
from dataclasses import asdict
from pathlib import Path

import numpy as np

from phaseforge.core.galerkin import (
    build_bases,
    compare_with_pde,
    continuous_dependence_experiment,
    integrate_modes,
    lifting_1d,
    project,
)
from phaseforge.core.io import write_csv, write_yaml
from phaseforge.core.loader import (
    build_boundary,
    build_grid,
    build_initial,
    build_potentials,
    time_step,
)
from phaseforge.core.errors import DomainError
from phaseforge.core.pde import run
from phaseforge.utils.logging import log_info


def _plain(d):
    return {k: (bool(v) if isinstance(v, (bool, np.bool_)) else float(v)) for k, v in d.items()}


def cmd_galerkin(cfg, outdir, jobs=1):
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)

    hat = cfg.hat_params()
    pot = build_potentials(cfg)
    grid = build_grid(cfg)
    if grid.dim != 1:
        raise DomainError("galerkin mode needs grid.dim = 1")
    bc = build_boundary(cfg)
    state = build_initial(cfg, grid, bc, pot, hat)
    g = cfg.galerkin

    basis = build_bases(grid, bc, g["modes"])
    x = grid.coords[0]
    m0 = project(state.phi, state.T - lifting_1d(x, basis.length, bc), basis, x)
    m0.time = state.time

    traj = integrate_modes(
        m0, basis, pot, hat, g["dt"], g["t_end"], mode=g["model"],
        sample_every=g["sample_every"], E1_cap=g["E1_cap"],
    )
    n = basis.n
    columns = (
        ["time"] + [f"a_{i}" for i in range(1, n + 1)] + [f"b_{i}" for i in range(1, n + 1)]
        + ["E", "E0", "E1", "r"]
    )
    write_csv(outdir / "galerkin_modes.csv", traj.rows(), columns)

    summary = {
        "modes": n,
        "t_reached": float(traj.times[-1]),
        "truncated": bool(traj.truncated),
        "r_max": float(traj.r_max),
        "estimate_constants": _plain(asdict(traj.constants)),
    }

    if g["levels"] > 1 and g["perturbation_scale"] > 0:
        dep = continuous_dependence_experiment(
            m0, basis, pot, hat, g["dt"], g["t_end"],
            perturbation_scale=g["perturbation_scale"], levels=g["levels"],
            mode=g["model"], sample_every=g["sample_every"],
        )
        rows = []
        for k, t in enumerate(dep.times):
            row = {"time": float(t)}
            row.update({f"R_{s:g}": float(dep.R[s][k]) for s in dep.scales})
            rows.append(row)
        write_csv(outdir / "continuous_dependence.csv", rows, ["time"] + [f"R_{s:g}" for s in dep.scales])
        summary["continuous_dependence"] = {
            "scales": [float(s) for s in dep.scales],
            "R_max": [float(dep.R_max[s]) for s in dep.scales],
            "spread": float(dep.spread),
            "stable": bool(dep.stable),
            "t_reached": dep.t_reached,
        }

    if g["compare_pde"] and not traj.truncated:
        dt = time_step(cfg, grid, hat, pot)
        pde_run = run(state, hat, pot, bc, dt, traj.times[-1] - state.time, diag_every=10**9, mode=g["model"])
        err_phi, err_T = compare_with_pde(pde_run.final, traj.final, basis)
        summary["pde_comparison"] = {"L2_phi": err_phi, "L2_T": err_T}
        log_info(f"Galerkin vs finite differences: L2(phi)={err_phi:.3e}, L2(T)={err_T:.3e}")

    write_yaml(outdir / "galerkin_summary.yaml", summary)
    return traj
