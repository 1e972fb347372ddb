"""
IMEX finite-difference solver for the coupled order-parameter/temperature
system on intervals and rectangles, with conservation and entropy
diagnostics.
"""

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from phaseforge.core.errors import BlowUpError, BoundaryError, DomainError, NumericalError
from phaseforge.core.grid import FieldState, Grid
from phaseforge.core.model import EnergyReport, HatParams, energy_report
from phaseforge.core.potentials import WINDOW
from phaseforge.utils.logging import log_info, log_warn

MODES = ("full", "caginalp")


# ---------------------------------------------------------------
# Boundary data
# ---------------------------------------------------------------
@dataclass(frozen=True)
class BoundarySpec:
    """
    Constant Neumann flux q_b (outward normal derivative of T) on the faces in
    `gamma_faces`, constant Dirichlet value T_b on the others. phi is always
    homogeneous Neumann.
    """
    q_b: float = 0.0
    T_b: float = 0.0
    gamma_faces: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "gamma_faces", tuple(sorted(set(self.gamma_faces))))

    def validate(self, grid: Grid):
        for face in self.gamma_faces:
            if face not in grid.faces:
                raise DomainError(
                    f"Unknown boundary face '{face}' for a {grid.dim}D grid; "
                    f"expected one of {', '.join(grid.faces)}"
                )
        return self

    def is_pure_neumann(self, grid: Grid):
        return set(self.gamma_faces) == set(grid.faces)

    def dirichlet_faces(self, grid: Grid):
        return tuple(f for f in grid.faces if f not in self.gamma_faces)

    def is_homogeneous(self, grid: Grid):
        if self.gamma_faces and self.q_b != 0.0:
            return False
        if self.dirichlet_faces(grid) and self.T_b != 0.0:
            return False
        return True


def dirichlet_mask(grid: Grid, bc: BoundarySpec):
    mask = np.zeros(grid.shape, dtype=bool)
    for face in bc.dirichlet_faces(grid):
        mask |= grid.face_mask(face)
    return mask


def flux_source(grid: Grid, bc: BoundarySpec):
    """Ghost-node contribution of the Gamma flux to the temperature Laplacian."""
    g = np.zeros(grid.shape)
    for face in bc.gamma_faces:
        g[grid.face_mask(face)] += 2.0 * bc.q_b / grid.face_spacing(face)
    g[dirichlet_mask(grid, bc)] = 0.0
    return g


def _with_dirichlet_rows(A, mask):
    keep = sp.diags((~mask.ravel()).astype(float))
    fix = sp.diags(mask.ravel().astype(float))
    return (keep @ A + fix).tocsc()


def lifting_solution(grid: Grid, bc: BoundarySpec):
    """Discrete harmonic field carrying the mixed boundary data."""
    bc.validate(grid)
    if bc.is_pure_neumann(grid):
        if bc.q_b != 0.0:
            raise BoundaryError(
                f"Pure Neumann boundary with q_b={bc.q_b} has no steady lifting; "
                f"total boundary flux must vanish"
            )
        log_info("Pure Neumann boundary: lifting unique up to a constant, using 0")
        return np.zeros(grid.shape)

    mask = dirichlet_mask(grid, bc)
    A = _with_dirichlet_rows(-grid.neumann_laplacian, mask)
    rhs = flux_source(grid, bc).ravel()
    rhs[mask.ravel()] = bc.T_b
    return splu(A).solve(rhs).reshape(grid.shape)


# ---------------------------------------------------------------
# Time stepping
# ---------------------------------------------------------------
class StepOperators:
    """Factorized implicit operators for one (grid, bc, params, dt) combination."""

    def __init__(self, grid, bc, h, dt):
        self.grid, self.bc, self.h, self.dt = grid, bc, h, dt
        L0 = grid.neumann_laplacian
        I = sp.identity(grid.size, format="csc")
        self.mask = dirichlet_mask(grid, bc).ravel()
        self.flux = flux_source(grid, bc).ravel()
        self._phi_lu = splu((h.alpha_hat / dt * I - h.eps**2 * L0).tocsc())
        self._T_lu = splu(_with_dirichlet_rows(h.beta_hat / dt * I - h.delta * L0, self.mask))

    def solve_phi(self, rhs):
        return self._phi_lu.solve(rhs)

    def solve_T(self, rhs):
        rhs = rhs.copy()
        rhs[self.mask] = self.bc.T_b
        return self._T_lu.solve(rhs)


@lru_cache(maxsize=16)
def step_operators(grid, bc, h, dt):
    return StepOperators(grid, bc, h, dt)


def reaction_dt_limit(h: HatParams, pot):
    return h.alpha_hat / pot.sup.W2


def stability_dt(grid: Grid, h: HatParams, pot, safety=4.0):
    diffusive = safety * grid.min_spacing**2 * h.alpha_hat / (4.0 * h.eps**2)
    return min(diffusive, 0.1 * reaction_dt_limit(h, pot))


def default_dt(grid: Grid, h: HatParams, pot, safety=4.0):
    return stability_dt(grid, h, pot, safety)


def _check_state(phi, T, state, dt):
    if not (np.all(np.isfinite(phi)) and np.all(np.isfinite(T))):
        raise BlowUpError(
            f"Non-finite values after step at t={state.time + dt:.6g}",
            diagnostics={"time": state.time, "state": state},
        )
    lo, hi = WINDOW
    pmin, pmax = float(np.min(phi)), float(np.max(phi))
    if pmin < lo or pmax > hi:
        raise BlowUpError(
            f"Order parameter left [{lo}, {hi}] at t={state.time + dt:.6g} "
            f"(min {pmin:.6g}, max {pmax:.6g})",
            diagnostics={"time": state.time, "phi_min": pmin, "phi_max": pmax, "state": state},
        )


def step(state: FieldState, h: HatParams, pot, bc: BoundarySpec, dt, mode="full"):
    """One IMEX step: implicit Laplacians, explicit reactions, nu' at the half state."""
    if mode not in MODES:
        raise DomainError(f"mode must be one of {MODES}, got '{mode}'")
    if not dt > 0:
        raise DomainError(f"dt must be positive, got {dt}")
    limit = reaction_dt_limit(h, pot)
    if dt > limit:
        raise DomainError(f"dt={dt:.6g} exceeds the reaction stability bound alpha_hat/W''_inf={limit:.6g}")

    ops = step_operators(state.grid, bc, h, float(dt))
    phi = state.phi.ravel()
    T = state.T.ravel()

    rhs_phi = h.alpha_hat / dt * phi - pot.dW(phi) + h.gamma * pot.dnu(phi) * T
    phi_new = ops.solve_phi(rhs_phi)
    Dphi = (phi_new - phi) / dt
    coupling = pot.dnu(0.5 * (phi + phi_new)) * Dphi

    if mode == "full":
        source = -h.gamma * (T + h.theta) * coupling + h.alpha_hat * Dphi**2
    else:
        source = -h.gamma * h.theta * coupling
    rhs_T = h.beta_hat / dt * T + h.delta * ops.flux + source
    T_new = ops.solve_T(rhs_T)

    _check_state(phi_new, T_new, state, dt)
    return FieldState(phi_new, T_new, state.grid, state.time + dt)


# ---------------------------------------------------------------
# Diagnostics
# ---------------------------------------------------------------
@dataclass(frozen=True)
class DiagnosticsRecord:
    time: float
    energy: EnergyReport
    energy_residual: float = math.nan
    entropy_prod_conduction: float = math.nan
    entropy_prod_mobility: float = math.nan
    caginalp_residual: float = math.nan
    entropy_defined: bool = True

    def as_row(self):
        return {
            "time": self.time,
            "E": self.energy.E,
            "E0": self.energy.E0,
            "E1": self.energy.E1,
            "S": self.energy.S,
            "energy_residual": self.energy_residual,
            "entropy_prod_conduction": self.entropy_prod_conduction,
            "entropy_prod_mobility": self.entropy_prod_mobility,
            "caginalp_residual": self.caginalp_residual,
        }


DIAGNOSTIC_COLUMNS = (
    "time", "E", "E0", "E1", "S", "energy_residual",
    "entropy_prod_conduction", "entropy_prod_mobility", "caginalp_residual",
)


def boundary_heat_flux(state: FieldState, bc: BoundarySpec):
    """
    Total outward heat flux: q_b on Gamma faces, a one-sided difference of T
    on Dirichlet faces.
    """
    grid = state.grid
    Q = sum(bc.q_b * grid.face_measure(f) for f in bc.gamma_faces)
    T = state.T
    for face in bc.dirichlet_faces(grid):
        d = grid.face_spacing(face)
        if grid.dim == 1:
            edge, inner = (T[0], T[1]) if face == "left" else (T[-1], T[-2])
            Q += (edge - inner) / d
            continue
        if face == "left":
            edge, inner, w = T[:, 0], T[:, 1], grid.weights.sum(axis=1) / grid.extents[0]
        elif face == "right":
            edge, inner, w = T[:, -1], T[:, -2], grid.weights.sum(axis=1) / grid.extents[0]
        elif face == "bottom":
            edge, inner, w = T[0, :], T[1, :], grid.weights.sum(axis=0) / grid.extents[1]
        else:
            edge, inner, w = T[-1, :], T[-2, :], grid.weights.sum(axis=0) / grid.extents[1]
        Q += float(np.sum(w * (edge - inner))) / d
    return Q


def _nodal_grad_sq(grid, u):
    return sum(g**2 for g in grid.gradient(u))


def diagnostics(prev: FieldState, new: FieldState, dt, h: HatParams, pot, bc: BoundarySpec, mode="full"):
    grid = new.grid
    e_old = energy_report(prev, pot, h)
    e_new = energy_report(new, pot, h)

    Q = boundary_heat_flux(new, bc)
    energy_residual = (e_new.E - e_old.E) / dt - h.beta * h.delta * Q

    Dphi = (new.phi - prev.phi) / dt
    abs_T = new.T + h.theta
    if np.any(abs_T <= 0):
        log_warn(f"T + theta <= 0 at t={new.time:.6g}; entropy production undefined")
        conduction = mobility = math.nan
        entropy_defined = False
    else:
        conduction = h.beta * h.delta * grid.integrate(_nodal_grad_sq(grid, new.T) / abs_T**2)
        mobility = h.beta * h.alpha_hat * grid.integrate(Dphi**2 / abs_T)
        entropy_defined = True

    caginalp = math.nan
    if mode == "caginalp":
        caginalp = (
            h.theta * (e_new.E0 - e_old.E0) / dt
            + h.delta * grid.gradient_sq_integral(new.T)
            + h.alpha_hat * h.theta * grid.norm_sq(Dphi)
        )

    return DiagnosticsRecord(
        time=new.time,
        energy=e_new,
        energy_residual=energy_residual,
        entropy_prod_conduction=conduction,
        entropy_prod_mobility=mobility,
        caginalp_residual=caginalp,
        entropy_defined=entropy_defined,
    )


def initial_record(state: FieldState, h: HatParams, pot):
    return DiagnosticsRecord(time=state.time, energy=energy_report(state, pot, h))


@dataclass
class RunResult:
    states: list
    records: list = field(default_factory=list)
    steps: int = 0
    dt: float = math.nan

    @property
    def final(self):
        return self.states[-1]


def run(initial: FieldState, h: HatParams, pot, bc: BoundarySpec, dt, t_end,
        diag_every=1, mode="full", snapshot_every=None, on_snapshot=None):
    """
    Advance `initial` to `t_end`. The step count is rounded up so that the
    steps are uniform and no larger than `dt`.
    """
    if t_end < 0:
        raise DomainError(f"t_end must be nonnegative, got {t_end}")
    bc.validate(initial.grid)
    if mode == "caginalp" and not bc.is_homogeneous(initial.grid):
        log_warn("Caginalp identity residual assumes homogeneous boundary data; q_b or T_b is nonzero")
    n_steps = int(math.ceil(t_end / dt - 1e-12)) if t_end > 0 else 0
    dt_eff = t_end / n_steps if n_steps else dt

    result = RunResult(states=[initial], records=[initial_record(initial, h, pot)], dt=dt_eff)
    if on_snapshot is not None:
        on_snapshot(0, initial)

    log_info(f"Run ({mode}): {n_steps} steps of dt={dt_eff:.6g} to t={t_end:.6g}")
    state = initial
    for k in range(1, n_steps + 1):
        new = step(state, h, pot, bc, dt_eff, mode=mode)
        if k % diag_every == 0 or k == n_steps:
            result.records.append(diagnostics(state, new, dt_eff, h, pot, bc, mode=mode))
        if snapshot_every and (k % snapshot_every == 0 or k == n_steps):
            result.states.append(new)
            if on_snapshot is not None:
                on_snapshot(k, new)
        state = new

    if n_steps and result.states[-1] is not state:
        result.states.append(state)
    result.steps = n_steps
    return result


# ---------------------------------------------------------------
# Initial conditions
# ---------------------------------------------------------------
def pure_phase(grid: Grid, value, T=None, perturbation=0.0, seed=0):
    """Constant phase with temperature T (array or scalar); optional seeded noise."""
    phi = np.full(grid.shape, float(value))
    T = np.zeros(grid.shape) if T is None else np.broadcast_to(np.asarray(T, dtype=float), grid.shape).copy()
    if perturbation:
        rng = np.random.default_rng(seed)
        phi = phi + perturbation * rng.standard_normal(grid.shape)
        T = T + perturbation * rng.standard_normal(grid.shape)
    return FieldState(phi, T, grid)


def planar_front(grid: Grid, profile, eps, x0, solid_side="left", T=0.0):
    """Front at x = x0; the 0 (solid) phase on `solid_side`."""
    x = grid.coords[0]
    sign = 1.0 if solid_side == "left" else -1.0
    if solid_side not in ("left", "right"):
        raise DomainError(f"solid_side must be 'left' or 'right', got '{solid_side}'")
    phi = profile.evaluate(sign * (x - x0) / eps)
    T = np.broadcast_to(np.asarray(T, dtype=float), grid.shape).copy()
    return FieldState(phi, T, grid)


def radial_bubble(grid: Grid, profile, eps, center, radius, inside="solid", T=0.0):
    if grid.dim != 2:
        raise DomainError("radial_bubble needs a 2D grid")
    X, Y = grid.coords
    r = np.hypot(X - center[0], Y - center[1])
    sign = 1.0 if inside == "solid" else -1.0
    phi = profile.evaluate(sign * (r - radius) / eps)
    T = np.broadcast_to(np.asarray(T, dtype=float), grid.shape).copy()
    return FieldState(phi, T, grid)


def smooth_cosine(grid: Grid, bc: BoundarySpec, phi_mean=0.5, phi_amp=0.1, T_amp=0.05):
    """Smooth data compatible with the boundary data (used for cross-method checks)."""
    x = grid.coords[0]
    Lx = grid.extents[0]
    phi = phi_mean + phi_amp * np.cos(np.pi * x / Lx)
    T_bar = T_amp * _homogeneous_mode(x / Lx, "left" in bc.gamma_faces, "right" in bc.gamma_faces)
    if grid.dim == 2:
        y = grid.coords[1]
        Ly = grid.extents[1]
        phi = phi + phi_amp * np.cos(np.pi * y / Ly)
        T_bar = T_bar * _homogeneous_mode(y / Ly, "bottom" in bc.gamma_faces, "top" in bc.gamma_faces)
    T = lifting_solution(grid, bc) + T_bar
    return FieldState(phi, T, grid)


def _homogeneous_mode(s, flux_low, flux_high):
    """Lowest mode on [0, 1]: zero slope at flux ends, zero value at Dirichlet ends."""
    if flux_low and flux_high:
        return np.cos(np.pi * s)
    if flux_low:
        return np.cos(0.5 * np.pi * s)
    if flux_high:
        return np.sin(0.5 * np.pi * s)
    return np.sin(np.pi * s)


def perturbation_norm(state: FieldState, reference: FieldState):
    grid = state.grid
    return math.sqrt(grid.norm_sq(state.phi - reference.phi)) + math.sqrt(grid.norm_sq(state.T - reference.T))
