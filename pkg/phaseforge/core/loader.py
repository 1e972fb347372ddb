"""
Run configuration: YAML parsing, schema and semantic validation, defaults,
and the builders that turn a RunConfig into model objects.
"""

import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import yaml

from phaseforge.core.errors import ConfigError, DomainError
from phaseforge.core.grid import FACES_1D, FACES_2D, Grid
from phaseforge.core.merge import load_defaults, merge_configs
from phaseforge.core.model import (
    HatParams,
    NondimParams,
    PhysicalParams,
    hat_params,
    nondimensionalize,
    sharp_scalings,
)
from phaseforge.core.validate_schema import validate_config

CHARTS = ("physical", "nondimensional", "hat")
SECTIONS = (
    "potentials", "grid", "boundary", "initial", "time",
    "profile", "sweep", "galerkin", "stefan", "output",
)


@dataclass(frozen=True)
class RunConfig:
    mode: str
    chart: str
    params: dict
    potentials: dict
    grid: dict
    boundary: dict
    initial: dict
    time: dict
    profile: dict
    sweep: dict
    galerkin: dict
    stefan: dict
    output: dict
    source: str = field(default=None, compare=False)

    def with_mode(self, mode):
        return replace(self, mode=mode)

    # ----- parameter charts -----
    def physical_params(self):
        if self.chart != "physical":
            return None
        return PhysicalParams(**self.params)

    def nondim_params(self):
        if self.chart == "hat":
            return HatParams(**self.params).to_nondim()
        return _chart_to_nondim(self.chart, self.params)

    def hat_params(self):
        return _chart_to_hat(self.chart, self.params)

    def sharp_scalings(self):
        return sharp_scalings(self.hat_params())


def _chart_to_nondim(chart, params):
    if chart == "physical":
        return nondimensionalize(PhysicalParams(**params))
    return NondimParams(**params)


def _chart_to_hat(chart, params):
    if chart == "hat":
        return HatParams(**params)
    return hat_params(_chart_to_nondim(chart, params))


# ---------------------------------------------------------------
# Line numbers
# ---------------------------------------------------------------
def _key_lines(text):
    """Map every key path of the YAML document to its 1-based line."""
    root = yaml.compose(text, Loader=yaml.SafeLoader)
    lines = {}

    def walk(node, path):
        if isinstance(node, yaml.MappingNode):
            for key, value in node.value:
                p = path + (key.value,)
                lines[p] = key.start_mark.line + 1
                walk(value, p)
        elif isinstance(node, yaml.SequenceNode):
            for i, value in enumerate(node.value):
                p = path + (i,)
                lines[p] = value.start_mark.line + 1
                walk(value, p)

    if root is not None:
        walk(root, ())
    return lines


def _line_lookup(lines):
    def line_of(path):
        path = tuple(path)
        while path:
            if path in lines:
                return lines[path]
            path = path[:-1]
        return None
    return line_of


# ---------------------------------------------------------------
# Semantic checks
# ---------------------------------------------------------------
def _validate_chart(data, line_of):
    present = [c for c in CHARTS if c in data]
    if not present:
        raise ConfigError(
            "No parameter chart given: exactly one of 'physical', 'nondimensional', 'hat' is required",
            line=1,
        )
    if len(present) > 1:
        second = max(present, key=lambda c: line_of((c,)) or 0)
        raise ConfigError(
            f"Conflicting parameter charts '{present[0]}' and '{present[1]}': give exactly one",
            line=line_of((second,)),
        )
    chart = present[0]
    try:
        _chart_to_hat(chart, data[chart])
    except (DomainError, TypeError) as e:
        raise ConfigError(f"Invalid '{chart}' parameters: {e}", line=line_of((chart,)))
    return chart


def _validate_grid(grid, line_of):
    dim = grid["dim"]
    for key in ("extents", "cells"):
        if len(grid[key]) != dim:
            raise ConfigError(
                f"grid.{key} has {len(grid[key])} entries but grid.dim is {dim}",
                line=line_of(("grid", key)),
            )


def _validate_boundary(boundary, grid, line_of):
    faces = FACES_1D if grid["dim"] == 1 else FACES_2D
    for i, face in enumerate(boundary["gamma_faces"]):
        if face not in faces:
            raise ConfigError(
                f"boundary.gamma_faces: '{face}' is not a face of a {grid['dim']}D grid {faces}",
                line=line_of(("boundary", "gamma_faces", i)),
            )


def _validate_initial(initial, grid, base_dir, line_of):
    kind = initial["kind"]
    if kind == "radial_bubble" and grid["dim"] != 2:
        raise ConfigError(
            "initial.kind 'radial_bubble' needs grid.dim = 2",
            line=line_of(("initial", "kind")),
        )
    if kind == "planar_front" and not 0.0 <= initial["front"] <= grid["extents"][0]:
        raise ConfigError(
            f"initial.front = {initial['front']} lies outside [0, {grid['extents'][0]}]",
            line=line_of(("initial", "front")),
        )
    if kind == "file":
        if not initial.get("path"):
            raise ConfigError("initial.kind 'file' needs initial.path", line=line_of(("initial", "kind")))
        path = Path(initial["path"])
        if not path.is_absolute():
            path = (base_dir / path).resolve()
        if not path.exists():
            raise ConfigError(f"Initial-condition file not found: {path}", line=line_of(("initial", "path")))
        initial["path"] = str(path)


def _validate_sweep(sweep, line_of):
    eps = sweep["eps_list"]
    if any(b >= a for a, b in zip(eps, eps[1:])):
        raise ConfigError(
            f"sweep.eps_list must be strictly decreasing, got {eps}",
            line=line_of(("sweep", "eps_list")),
        )
    lo, hi = sweep["window"]
    if lo >= hi:
        raise ConfigError(
            f"sweep.window must satisfy lower < upper, got {sweep['window']}",
            line=line_of(("sweep", "window")),
        )


# ---------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------
def parse_config_text(text, base_dir=None, source=None):
    """
    Performs:
      - YAML parsing
      - JSON schema validation
      - parameter chart checks
      - grid / boundary / initial / sweep consistency checks
      - merging of the documented defaults

    Returns:
        RunConfig
    """
    base_dir = Path(base_dir or ".").resolve()

    # ----- Load YAML -----
    try:
        data = yaml.safe_load(text)
        lines = _key_lines(text)
    except yaml.MarkedYAMLError as e:
        line = e.problem_mark.line + 1 if e.problem_mark else None
        raise ConfigError(f"Failed to parse YAML: {e.problem}", line=line)
    except yaml.YAMLError as e:
        raise ConfigError(f"Failed to parse YAML: {e}")
    if not isinstance(data, dict):
        raise ConfigError("Configuration must be a mapping of sections", line=1)
    line_of = _line_lookup(lines)

    # ----- Validate against schema -----
    validate_config(data, line_of)

    # ----- Additional semantic validation -----
    chart = _validate_chart(data, line_of)
    merged = merge_configs(load_defaults(), {k: v for k, v in data.items() if k not in CHARTS})
    _validate_grid(merged["grid"], line_of)
    _validate_boundary(merged["boundary"], merged["grid"], line_of)
    _validate_initial(merged["initial"], merged["grid"], base_dir, line_of)
    _validate_sweep(merged["sweep"], line_of)

    return RunConfig(
        mode=merged["mode"],
        chart=chart,
        params=dict(data[chart]),
        source=source,
        **{s: merged[s] for s in SECTIONS},
    )


def parse_config(path):
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"Config file not found: {path}")
    return parse_config_text(path.read_text(), base_dir=path.resolve().parent, source=str(path))


load_config = parse_config


def config_dict(cfg: RunConfig):
    data = {"mode": cfg.mode, cfg.chart: dict(cfg.params)}
    for s in SECTIONS:
        data[s] = getattr(cfg, s)
    return data


def emit_config(cfg: RunConfig):
    """YAML text that parses back to an equal RunConfig."""
    return yaml.safe_dump(config_dict(cfg), sort_keys=False)


# ---------------------------------------------------------------
# Builders
# ---------------------------------------------------------------
def build_potentials(cfg: RunConfig):
    from phaseforge.core.potentials import make_potentials
    return make_potentials(cfg.potentials["name"], cfg.potentials["w_scale"])


def build_grid(cfg: RunConfig):
    g = cfg.grid
    return Grid(g["dim"], tuple(float(v) for v in g["extents"]), tuple(int(n) for n in g["cells"]))


def build_boundary(cfg: RunConfig):
    from phaseforge.core.pde import BoundarySpec
    b = cfg.boundary
    return BoundarySpec(q_b=float(b["q_b"]), T_b=float(b["T_b"]), gamma_faces=tuple(b["gamma_faces"]))


def build_profile(cfg: RunConfig, pot):
    from phaseforge.core.profile import solve_profile
    p = cfg.profile
    return solve_profile(pot, half_width=p["half_width"], n_points=p["n_points"], orientation=p["orientation"])


def build_initial(cfg: RunConfig, grid, bc, pot, hat):
    """Initial FieldState; a null temperature means the lifting of the boundary data."""
    from phaseforge.core import pde
    from phaseforge.core.io import read_snapshot

    ic = cfg.initial
    kind = ic["kind"]
    T = pde.lifting_solution(grid, bc) if ic["T"] is None else float(ic["T"])

    if kind == "pure_phase":
        return pde.pure_phase(grid, ic["phase"], T=T, perturbation=ic["perturbation"], seed=ic["seed"])
    if kind == "smooth_cosine":
        return pde.smooth_cosine(grid, bc, phi_mean=ic["phase"], phi_amp=ic["phi_amp"], T_amp=ic["T_amp"])
    if kind == "file":
        state = read_snapshot(ic["path"])
        if state.grid.cells != grid.cells:
            raise DomainError(
                f"Snapshot {ic['path']} has cells {state.grid.cells}, config grid has {grid.cells}"
            )
        if not np.allclose(state.grid.extents, grid.extents, rtol=1e-9, atol=0.0):
            raise DomainError(
                f"Snapshot {ic['path']} has extents {state.grid.extents}, config grid has {grid.extents}"
            )
        return state

    profile = build_profile(cfg, pot)
    if kind == "planar_front":
        return pde.planar_front(grid, profile, hat.eps, ic["front"], ic["solid_side"], T=T)
    center = ic["center"] or tuple(0.5 * e for e in grid.extents)
    return pde.radial_bubble(grid, profile, hat.eps, tuple(center), ic["radius"], ic["inside"], T=T)


def build_scenario(cfg: RunConfig):
    from phaseforge.core.stefan import SweepScenario
    s = cfg.sweep
    return SweepScenario(
        name=s["scenario"],
        t_end=s["t_end"],
        points_per_eps=s["points_per_eps"],
        T_init=s["T_init"],
        front=s["front"],
        domain_length=s["domain_length"],
        window=tuple(s["window"]),
        safety=s["safety"],
        half_width=cfg.profile["half_width"],
        n_points=cfg.profile["n_points"],
    )


def time_step(cfg: RunConfig, grid, hat, pot):
    from phaseforge.core.pde import default_dt
    dt = cfg.time["dt"]
    if dt is None:
        return default_dt(grid, hat, pot, safety=cfg.time["safety"])
    if not math.isfinite(dt):
        raise DomainError(f"time.dt must be finite, got {dt}")
    return float(dt)
