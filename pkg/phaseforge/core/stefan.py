"""
Sharp-interface diagnostics: interface location and kinematics, the flux jump
across the front, Gibbs-Thomson and jump-condition defects, epsilon sweeps of
the phase-field system, and a 1D front-tracking Stefan solver.

Frame convention: N = frame * e_x (1D) or frame * e_r (radial), the signed
distance is d = frame * (x - x_f), v = -dt(d) = frame * dx_f/dt, and the
orientation sign is [nu(phi0)] measured along N.
"""

import math
from dataclasses import dataclass, field
from multiprocessing import Pool

import numpy as np
from scipy.integrate import trapezoid
from scipy.linalg import solve_banded
from scipy.optimize import bisect

from phaseforge.core.errors import BracketError, DomainError, NumericalError, OrientationError
from phaseforge.core.grid import Grid
from phaseforge.core.model import hat_from_sharp
from phaseforge.core.pde import BoundarySpec, default_dt, planar_front, radial_bubble, step
from phaseforge.core.profile import solve_profile
from phaseforge.utils.logging import log_info, log_warn

SWEEP_COLUMNS = (
    "eps", "v", "H", "T_interface", "T_weighted", "jump",
    "gt_defect", "jump_defect", "linear_jump_defect",
)


# ---------------------------------------------------------------
# Interface location and kinematics
# ---------------------------------------------------------------
@dataclass
class InterfaceGeometry:
    positions: np.ndarray
    frame: int = 1
    radial: bool = False
    center: tuple = None
    dim: int = 1
    grazing: bool = False
    v: float = math.nan
    H: float = 0.0
    N_orientation: int = 1

    @property
    def empty(self):
        return len(self.positions) == 0


def normal_line(state, values, center=None):
    """
    Samples of `values` along the measurement line: the x axis in 1D, the
    row through `center` (x >= center) in 2D, abscissa = radius.
    """
    grid = state.grid
    if grid.dim == 1:
        return grid.coords[0], np.asarray(values)
    if center is None:
        raise DomainError("2D interface measurements need a radial center")
    x = grid.axis_coords(0)
    y = grid.axis_coords(1)
    j = int(np.argmin(np.abs(y - center[1])))
    i0 = int(np.searchsorted(x, center[0]))
    return x[i0:] - center[0], np.asarray(values)[j, i0:]


def locate_interface(state, b, center=None, frame=1):
    """Sub-grid crossings of the level phi = b by linear interpolation."""
    s, phi = normal_line(state, state.phi, center)
    g = phi - b
    positions = []
    grazing = False
    for i in range(len(s) - 1):
        if g[i] == 0.0:
            positions.append(float(s[i]))
            continue
        if g[i] * g[i + 1] < 0.0:
            dphi = phi[i + 1] - phi[i]
            if abs(dphi) < 1e-8:
                grazing = True
            positions.append(float(s[i] - g[i] * (s[i + 1] - s[i]) / dphi))
    if g[-1] == 0.0:
        positions.append(float(s[-1]))
    if grazing:
        log_warn("Grazing interface crossing: |grad phi| nearly vanishes at the level set")
    return InterfaceGeometry(
        positions=np.asarray(positions),
        frame=frame,
        radial=state.grid.dim == 2,
        center=center,
        dim=state.grid.dim,
        grazing=grazing,
    )


def interface_kinematics(positions, times, frame=1, dim=1, radial=False, spacing=None, max_jump=5.0):
    """
    Normal velocity (centred differences) and curvature sum along a position
    series. H = -lap(d): 0 for planar fronts, -frame (dim-1)/R for spheres.
    H is positive only for frame = -1 (N pointing to the center): a circle of
    radius 0.25 then has H = 4, while the outward frame gives -4.
    """
    positions = np.asarray(positions, dtype=float)
    times = np.asarray(times, dtype=float)
    if len(positions) < 3:
        raise DomainError(f"Interface kinematics need at least 3 samples, got {len(positions)}")
    if spacing is not None:
        jumps = np.abs(np.diff(positions))
        if np.any(jumps > max_jump * spacing):
            raise NumericalError(
                "Interface position series is not smooth",
                diagnostics={"max_jump": float(np.max(jumps)), "spacing": spacing},
            )
    v = frame * np.gradient(positions, times)
    if radial:
        H = -frame * (dim - 1) / positions
    else:
        H = np.zeros_like(positions)
    return v, H


def orientation_sign(state, position, eps, frame=1, center=None, offset=10.0):
    """[nu(phi0)] along N: +1 when N points to the liquid (phi = 1)."""
    s, phi = normal_line(state, state.phi, center)
    plus = np.interp(position + frame * offset * eps, s, phi)
    minus = np.interp(position - frame * offset * eps, s, phi)
    if plus == minus:
        raise OrientationError("Cannot determine interface orientation: equal phases on both sides")
    return 1 if plus > minus else -1


# ---------------------------------------------------------------
# Flux jump and interface temperatures
# ---------------------------------------------------------------
@dataclass
class FluxJump:
    jump: float
    slope_plus: float
    slope_minus: float
    T_plus: float
    T_minus: float
    T_gamma: float
    flagged: bool = False


def flux_jump_measure(state, position, eps, frame=1, center=None, window=(2.0, 10.0), agree_tol=1e-2):
    """
    Linear fits of T against the signed distance d on the windows
    window[0]*eps <= |d| <= window[1]*eps; jump = slope(d > 0) - slope(d < 0).
    """
    inner, outer = window
    flagged = inner < 2.0
    if flagged:
        log_warn(f"Fitting window inner edge {inner} eps straddles the diffuse layer")

    s, T = normal_line(state, state.T, center)
    d = frame * (s - position)
    fits = {}
    for side in (1, -1):
        sel = (side * d >= inner * eps) & (side * d <= outer * eps)
        reach = np.max(side * d) if len(d) else 0.0
        if reach < outer * eps or np.count_nonzero(sel) < 2:
            raise DomainError(
                f"Fitting window [{inner}, {outer}] eps on the d{'>' if side > 0 else '<'}0 side "
                f"leaves the domain"
            )
        slope, intercept = np.polyfit(d[sel], T[sel], 1)
        fits[side] = (float(slope), float(intercept))

    (sp_, Tp), (sm, Tm) = fits[1], fits[-1]
    if abs(Tp - Tm) > agree_tol * max(1.0, abs(Tp), abs(Tm)):
        log_warn(f"Side fits disagree on the interface temperature: {Tp:.6g} (d>0) vs {Tm:.6g} (d<0)")
    return FluxJump(
        jump=sp_ - sm, slope_plus=sp_, slope_minus=sm,
        T_plus=Tp, T_minus=Tm, T_gamma=0.5 * (Tp + Tm), flagged=flagged,
    )


def interface_average(T_along_normal, profile, z_max=20.0):
    """Profile-weighted interface temperature; T sampled on profile.z_grid."""
    z = profile.z_grid
    sel = np.abs(z) <= z_max
    w = profile.weight[sel]
    return float(trapezoid(np.asarray(T_along_normal)[sel] * w, z[sel]) / trapezoid(w, z[sel]))


def weighted_interface_temperature(state, position, eps, profile, frame=1, center=None):
    s, T = normal_line(state, state.T, center)
    samples = np.interp(position + frame * eps * profile.z_grid, s, T)
    return interface_average(samples, profile)


def pointwise_interface_temperature(state, position, center=None):
    s, T = normal_line(state, state.T, center)
    return float(np.interp(position, s, T))


# ---------------------------------------------------------------
# Residuals of the interface laws
# ---------------------------------------------------------------
@dataclass
class InterfaceMeasurement:
    position: float
    v: float
    H: float
    jump: float
    T_interface: float
    T_weighted: float
    frame: int = 1
    N_orientation: int = 1
    flagged: bool = False


@dataclass(frozen=True)
class StefanResiduals:
    gibbs_thomson_defect: float
    jump_defect: float
    linear_jump_defect: float
    T_interface: float
    T_weighted: float


def stefan_residuals(meas: InterfaceMeasurement, profile, bars, theta):
    if profile.orientation != meas.N_orientation:
        raise OrientationError(
            f"Profile orientation {profile.orientation:+d} does not match the measured "
            f"interface orientation {meas.N_orientation:+d}"
        )
    pm = meas.N_orientation
    sigma0 = profile.sigma0
    dtd = -meas.v
    lap_d = -meas.H
    T = meas.T_weighted

    gt = pm * sigma0 * (bars.alpha_bar * dtd - lap_d) - bars.gamma_bar * T
    linear = bars.delta_bar * meas.jump - pm * bars.gamma_bar * (T + theta) * dtd
    full = linear + 2.0 * bars.alpha_bar * sigma0 * dtd**2
    return StefanResiduals(
        gibbs_thomson_defect=float(gt),
        jump_defect=float(full),
        linear_jump_defect=float(linear),
        T_interface=meas.T_interface,
        T_weighted=meas.T_weighted,
    )


# ---------------------------------------------------------------
# Epsilon sweeps of the phase-field system
# ---------------------------------------------------------------
@dataclass(frozen=True)
class SweepScenario:
    name: str = "planar_1d"
    t_end: float = 0.2
    points_per_eps: int = 8
    T_init: float = -0.1
    front: float = 0.9
    domain_length: float = None
    window: tuple = (2.0, 10.0)
    safety: float = 4.0
    half_width: float = 20.0
    n_points: int = 2048

    def __post_init__(self):
        if self.name not in ("planar_1d", "radial_2d"):
            raise DomainError(f"Unknown sweep scenario '{self.name}'")


def scenario_setup(scenario: SweepScenario, eps, eps_max, profile):
    """Grid, boundary data, initial state and measurement center for one eps."""
    if scenario.name == "planar_1d":
        length = scenario.domain_length or max(2.0, 30.0 * eps_max)
        cells = int(math.ceil(length / eps * scenario.points_per_eps))
        grid = Grid.interval(length, cells)
        bc = BoundarySpec(q_b=0.0, T_b=scenario.T_init, gamma_faces=("left",))
        state = planar_front(grid, profile, eps, scenario.front, "left", T=scenario.T_init)
        return grid, bc, state, None

    length = scenario.domain_length or 2.0 * (scenario.front + 12.0 * eps_max)
    cells = int(math.ceil(length / eps * scenario.points_per_eps))
    grid = Grid.rectangle(length, length, cells, cells)
    center = (0.5 * length, 0.5 * length)
    bc = BoundarySpec(q_b=0.0, T_b=scenario.T_init, gamma_faces=())
    state = radial_bubble(grid, profile, eps, center, scenario.front, inside="solid", T=scenario.T_init)
    return grid, bc, state, center


@dataclass
class ScenarioRun:
    eps: float
    times: list
    positions: list
    measured: object = None
    truncated: bool = False
    row: dict = field(default_factory=dict)


def run_scenario(bars, theta, eps, pot, scenario: SweepScenario, eps_max=None):
    """Phase-field run at one eps with (alpha_bar, beta_bar, gamma_bar, delta_bar) held fixed."""
    eps_max = eps if eps_max is None else eps_max
    h = hat_from_sharp(bars, theta, eps)
    profile = solve_profile(pot, scenario.half_width, scenario.n_points)
    grid, bc, state, center = scenario_setup(scenario, eps, eps_max, profile)

    dt = default_dt(grid, h, pot, scenario.safety)
    n_steps = max(2, int(math.ceil(scenario.t_end / dt - 1e-12)))
    dt = scenario.t_end / n_steps
    log_info(f"Sweep row eps={eps:g}: {grid.cells} cells, {n_steps} steps of dt={dt:.3e}")

    frame = 1
    first = locate_interface(state, pot.b, center, frame)
    if first.empty:
        raise DomainError(f"No interface in the initial state at eps={eps}")
    times, positions = [state.time], [float(first.positions[0])]
    history = [state]
    truncated = False
    for _ in range(n_steps):
        state = step(state, h, pot, bc, dt, mode="full")
        geom = locate_interface(state, pot.b, center, frame)
        if geom.empty:
            log_warn(f"Interface left the domain at t={state.time:.6g} (eps={eps:g}); run truncated")
            truncated = True
            break
        times.append(state.time)
        positions.append(float(geom.positions[0]))
        history = history[-1:] + [state]

    run = ScenarioRun(eps=eps, times=times, positions=positions, truncated=truncated)
    if len(positions) < 3:
        raise NumericalError(f"Too few interface samples at eps={eps} to measure kinematics")

    m_state = history[0]
    m = len(positions) - 2
    v = frame * (positions[m + 1] - positions[m - 1]) / (times[m + 1] - times[m - 1])
    R = positions[m]
    H = -frame * (grid.dim - 1) / R if center is not None else 0.0

    pm = orientation_sign(m_state, R, eps, frame, center)
    prof = profile if pm == profile.orientation else profile.mirrored()
    fj = flux_jump_measure(m_state, R, eps, frame, center, scenario.window)
    meas = InterfaceMeasurement(
        position=R, v=v, H=H, jump=fj.jump,
        T_interface=pointwise_interface_temperature(m_state, R, center),
        T_weighted=weighted_interface_temperature(m_state, R, eps, prof, frame, center),
        frame=frame, N_orientation=pm, flagged=fj.flagged,
    )
    res = stefan_residuals(meas, prof, bars, theta)
    run.measured = meas
    run.row = {
        "eps": eps, "v": v, "H": H,
        "T_interface": meas.T_interface, "T_weighted": meas.T_weighted, "jump": fj.jump,
        "gt_defect": res.gibbs_thomson_defect,
        "jump_defect": res.jump_defect,
        "linear_jump_defect": res.linear_jump_defect,
    }
    return run


def _sweep_row(args):
    return run_scenario(*args)


def fitted_order(eps, defects):
    """Slope of log|defect| against log eps."""
    eps = np.asarray(eps, dtype=float)
    defects = np.abs(np.asarray(defects, dtype=float))
    if len(eps) < 2 or np.any(defects == 0.0):
        return math.nan
    return float(np.polyfit(np.log(eps), np.log(defects), 1)[0])


@dataclass
class EpsSweepReport:
    rows: list
    gt_order: float
    jump_order: float
    linear_jump_order: float
    runs: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    def to_frame(self):
        import pandas as pd
        return pd.DataFrame(self.rows, columns=list(SWEEP_COLUMNS))

    def monotone(self, column):
        values = np.abs([r[column] for r in self.rows])
        return bool(np.all(np.diff(values) < 0.0))


def eps_sweep(bars, theta, eps_list, pot, scenario=SweepScenario(), jobs=1):
    eps_list = [float(e) for e in eps_list]
    if not eps_list:
        raise DomainError("eps_list is empty")
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise DomainError(f"eps_list must be strictly decreasing, got {eps_list}")

    eps_max = eps_list[0]
    args = [(bars, theta, eps, pot, scenario, eps_max) for eps in eps_list]
    if jobs > 1 and len(args) > 1:
        with Pool(processes=min(jobs, len(args))) as pool:
            runs = pool.map(_sweep_row, args)
    else:
        runs = [_sweep_row(a) for a in args]

    rows = [r.row for r in runs]
    notes = [f"eps={r.eps:g}: run truncated at t={r.times[-1]:.6g}" for r in runs if r.truncated]
    eps = [r["eps"] for r in rows]
    report = EpsSweepReport(
        rows=rows,
        gt_order=fitted_order(eps, [r["gt_defect"] for r in rows]),
        jump_order=fitted_order(eps, [r["jump_defect"] for r in rows]),
        linear_jump_order=fitted_order(eps, [r["linear_jump_defect"] for r in rows]),
        runs=runs,
        notes=notes,
    )
    log_info(f"Sweep orders: Gibbs-Thomson {report.gt_order:.3g}, jump {report.jump_order:.3g}")
    return report


# ---------------------------------------------------------------
# Front-tracking reference solver
# ---------------------------------------------------------------
@dataclass
class StefanTrajectory:
    times: np.ndarray
    positions: np.ndarray
    velocities: np.ndarray
    x: np.ndarray
    T: np.ndarray


def solve_front_speed(residual, vmax):
    """
    Root of the scalar compatibility residual closest to v = 0, by bisection
    on brackets from 0 towards +-vmax (split at the parabola vertex).
    """
    r0 = residual(0.0)
    if r0 == 0.0:
        return 0.0
    rp, rm = residual(1.0), residual(-1.0)
    c2 = 0.5 * (rp + rm) - r0
    c1 = 0.5 * (rp - rm)

    roots = []
    for side in (1.0, -1.0):
        stops = [0.0]
        if c2 != 0.0:
            vertex = -c1 / (2.0 * c2)
            if side * vertex > 0.0 and abs(vertex) < vmax:
                stops.append(vertex)
        stops.append(side * vmax)
        for lo, hi in zip(stops, stops[1:]):
            a, b = min(lo, hi), max(lo, hi)
            if residual(a) * residual(b) <= 0.0:
                roots.append(bisect(residual, a, b, xtol=1e-14, maxiter=200))
                break
    if not roots:
        raise BracketError(
            "No admissible front speed in [-vmax, vmax]",
            diagnostics={"r0": r0, "r_plus": residual(vmax), "r_minus": residual(-vmax), "vmax": vmax},
        )
    return min(roots, key=abs)


def stefan_reference_1d(bars, theta, sigma0, bc, length, front, t_end, solid_side="left",
                        T_init=0.0, cells=400, dt=None, quadratic=True, sample_every=1):
    """
    Two-phase front tracking on (0, length). Each step solves the interface
    compatibility for v, moves the front, then advances the heat equation
    implicitly with the Gibbs-Thomson temperature imposed at the front
    (Shortley-Weller stencils next to it).
    """
    if solid_side not in ("left", "right"):
        raise DomainError(f"solid_side must be 'left' or 'right', got '{solid_side}'")
    dx = length / cells
    x = np.linspace(0.0, length, cells + 1)
    T = np.broadcast_to(np.asarray(T_init, dtype=float), x.shape).copy()
    dt = dt or 0.4 * dx**2 * bars.beta_bar / bars.delta_bar
    n_steps = int(math.ceil(t_end / dt - 1e-12)) if t_end > 0 else 0
    dt = t_end / n_steps if n_steps else dt

    a_bar, g_bar, d_bar, b_bar = bars.alpha_bar, bars.gamma_bar, bars.delta_bar, bars.beta_bar
    quad_coef = 2.0 * a_bar * sigma0 if quadratic else 0.0
    vmax = 10.0 * g_bar * theta / (2.0 * a_bar * sigma0)
    N = 1.0 if solid_side == "left" else -1.0
    flux_left = "left" in bc.gamma_faces
    flux_right = "right" in bc.gamma_faces

    def T_gamma(v):
        return -sigma0 * a_bar * v / g_bar

    s = float(front)
    times, positions, velocities = [0.0], [s], [0.0]
    for k in range(1, n_steps + 1):
        if s < 2 * dx or s > length - 2 * dx:
            raise DomainError(f"Front reached the domain boundary at t={times[-1]:.6g}")

        # nearest nodes at least dx/2 from the front on each side
        right = int(np.searchsorted(x, s + 0.5 * dx))
        left = int(np.searchsorted(x, s - 0.5 * dx, side="right")) - 1
        liq, sol = (right, left) if N > 0 else (left, right)
        dist_liq = abs(x[liq] - s)
        dist_sol = abs(x[sol] - s)

        def residual(v):
            Tg = T_gamma(v)
            g_plus = (T[liq] - Tg) / dist_liq
            g_minus = (Tg - T[sol]) / dist_sol
            return d_bar * (g_plus - g_minus) + g_bar * (Tg + theta) * v + quad_coef * v**2

        v = solve_front_speed(residual, vmax)
        s = s + N * v * dt
        T = _implicit_two_phase_step(T, x, s, T_gamma(v), dt, b_bar, d_bar, bc, flux_left, flux_right)

        if k % sample_every == 0 or k == n_steps:
            times.append(k * dt)
            positions.append(s)
            velocities.append(v)

    if len(velocities) > 1:
        velocities[0] = velocities[1]
    return StefanTrajectory(
        times=np.asarray(times), positions=np.asarray(positions),
        velocities=np.asarray(velocities), x=x, T=T,
    )


def _implicit_two_phase_step(T, x, s, T_front, dt, b_bar, d_bar, bc, flux_left, flux_right):
    n = len(x)
    dx = x[1] - x[0]
    c = b_bar / dt
    off = d_bar / dx**2
    lower = np.full(n, -off)
    upper = np.full(n, -off)
    diag = np.full(n, c + 2.0 * off)
    rhs = c * T

    # Shortley-Weller stencils on the two nodes bracketing the front
    k = int(np.searchsorted(x, s, side="right")) - 1  # x[k] <= s < x[k+1]
    for i, hl, hr, front_right in (
        (k, dx, max(s - x[k], 1e-3 * dx), True),
        (k + 1, max(x[k + 1] - s, 1e-3 * dx), dx, False),
    ):
        cl = 2.0 / ((hl + hr) * hl)
        cr = 2.0 / ((hl + hr) * hr)
        diag[i] = c + d_bar * (cl + cr)
        if front_right:
            lower[i] = -d_bar * cl
            upper[i] = 0.0
            rhs[i] += d_bar * cr * T_front
        else:
            lower[i] = 0.0
            upper[i] = -d_bar * cr
            rhs[i] += d_bar * cl * T_front

    for i, flux, nb in ((0, flux_left, "upper"), (n - 1, flux_right, "lower")):
        if flux:
            # reflected ghost carrying the outward flux
            diag[i] = c + 2.0 * off
            if nb == "upper":
                upper[i] = -2.0 * off
            else:
                lower[i] = -2.0 * off
            rhs[i] += 2.0 * d_bar * bc.q_b / dx
        else:
            diag[i] = 1.0
            upper[i] = lower[i] = 0.0
            rhs[i] = bc.T_b

    ab = np.zeros((3, n))
    ab[0, 1:] = upper[:-1]
    ab[1, :] = diag
    ab[2, :-1] = lower[1:]
    return solve_banded((1, 1), ab, rhs)


def front_comparison(pf_times, pf_positions, ref_times, ref_positions, eps):
    """Max front deviation over the common time range, in interface widths."""
    pf_times = np.asarray(pf_times, dtype=float)
    ref_times = np.asarray(ref_times, dtype=float)
    t_hi = min(pf_times[-1], ref_times[-1])
    sel = pf_times <= t_hi + 1e-12
    ref_at = np.interp(pf_times[sel], ref_times, ref_positions)
    return float(np.max(np.abs(np.asarray(pf_positions)[sel] - ref_at)) / eps)


def stefan_compare(bars, theta, eps, pot, scenario=SweepScenario(), cells=None, quadratic=True):
    """Phase-field planar run against the front-tracking reference from the same data."""
    if scenario.name != "planar_1d":
        raise DomainError("stefan_compare supports the planar_1d scenario only")
    run = run_scenario(bars, theta, eps, pot, scenario)
    profile = solve_profile(pot, scenario.half_width, scenario.n_points)
    length = scenario.domain_length or max(2.0, 30.0 * eps)
    bc = BoundarySpec(q_b=0.0, T_b=scenario.T_init, gamma_faces=("left",))
    ref = stefan_reference_1d(
        bars, theta, profile.sigma0, bc, length, run.positions[0], scenario.t_end,
        solid_side="left", T_init=scenario.T_init, cells=cells or int(round(length / eps * 4)),
        quadratic=quadratic,
    )
    deviation = front_comparison(run.times, run.positions, ref.times, ref.positions, eps)
    log_info(f"Front deviation at eps={eps:g}: {deviation:.4g} interface widths")
    return run, ref, deviation
