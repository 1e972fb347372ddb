# diagnose.py
import math
from dataclasses import asdict
from pathlib import Path

from phaseforge.core.io import write_yaml
from phaseforge.core.loader import (
    build_boundary,
    build_grid,
    build_initial,
    build_potentials,
    build_profile,
)
from phaseforge.core.model import (
    energy_report,
    estimate_constants,
    physical_stefan_coefficients,
)
from phaseforge.core.pde import lifting_solution


def _plain(d):
    return {k: (v if isinstance(v, (bool, str)) else float(v)) for k, v in d.items()}


def lifting_norms(grid, bc):
    lift = lifting_solution(grid, bc)
    L2 = math.sqrt(grid.norm_sq(lift))
    return L2, math.sqrt(L2**2 + grid.gradient_sq_integral(lift))


def cmd_diagnose(cfg, outdir, jobs=1):
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)

    hat = cfg.hat_params()
    pot = build_potentials(cfg)
    grid = build_grid(cfg)
    bc = build_boundary(cfg)
    state = build_initial(cfg, grid, bc, pot, hat)

    report = {
        "chart": cfg.chart,
        "nondimensional": _plain(asdict(cfg.nondim_params())),
        "hat": _plain(asdict(hat)),
        "sharp": _plain(asdict(cfg.sharp_scalings())),
    }
    physical = cfg.physical_params()
    if physical is not None:
        report["physical_stefan"] = _plain(physical_stefan_coefficients(physical))

    profile = build_profile(cfg, pot)
    report["potentials"] = {
        "name": pot.name,
        "a": float(pot.a),
        "b": float(pot.b),
        "sigma0": float(profile.sigma0),
        "sup_norms": _plain(asdict(pot.sup)),
    }

    energy = energy_report(state, pot, hat)
    report["initial_energy"] = _plain(asdict(energy))

    norms = lifting_norms(grid, bc)
    constants = estimate_constants(hat, pot, norms, E1_initial=energy.E1)
    report["lifting_norms"] = {"L2": norms[0], "H1": norms[1]}
    report["estimate_constants"] = _plain(asdict(constants))

    write_yaml(outdir / "diagnose.yaml", report)
    print(f"sigma0 = {profile.sigma0:.17g}")
    print(f"t_star_1 = {constants.t_star_1:.17g}")
    return report
