"""
Spectral Galerkin approximation on an interval: Neumann cosine modes for phi,
mixed-boundary eigenmodes for the homogeneous part of T, classical RK4 in time.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.fft import dct

from phaseforge.core.errors import BoundaryError, DomainError, NumericalError
from phaseforge.core.model import (
    EnergyReport,
    e1_coefficient,
    estimate_constants,
    source_F,
)
from phaseforge.utils.logging import log_info, log_warn

ALIAS_THRESHOLD = 1e-8


# ---------------------------------------------------------------
# Bases
# ---------------------------------------------------------------
def _gamma_case(bc):
    faces = set(bc.gamma_faces)
    if faces == {"left"}:
        return "left"
    if faces == {"right"}:
        return "right"
    if faces == {"left", "right"}:
        return "both"
    if not faces:
        return "none"
    raise DomainError(f"Unsupported boundary faces for the spectral basis: {sorted(faces)}")


def phi_modes_at(x, length, n):
    k = np.arange(n)[:, None]
    modes = math.sqrt(2.0 / length) * np.cos(k * np.pi * np.asarray(x)[None, :] / length)
    modes[0] = 1.0 / math.sqrt(length)
    return modes


def T_modes_at(x, length, n, case):
    s = np.asarray(x)[None, :] / length
    i = np.arange(1, n + 1)[:, None]
    c = math.sqrt(2.0 / length)
    if case == "left":
        return c * np.cos((i - 0.5) * np.pi * s)
    if case == "right":
        return c * np.sin((i - 0.5) * np.pi * s)
    if case == "none":
        return c * np.sin(i * np.pi * s)
    return phi_modes_at(x, length, n)


def _T_wavenumbers(n, case):
    i = np.arange(1, n + 1, dtype=float)
    if case in ("left", "right"):
        return i - 0.5
    if case == "none":
        return i
    return i - 1.0


def lifting_1d(x, length, bc):
    """Closed-form harmonic lifting on (0, length)."""
    x = np.asarray(x, dtype=float)
    case = _gamma_case(bc)
    if case == "left":
        return bc.T_b + bc.q_b * (length - x)
    if case == "right":
        return bc.T_b + bc.q_b * x
    if case == "none":
        return np.full_like(x, bc.T_b)
    if bc.q_b != 0.0:
        raise BoundaryError(f"Pure Neumann boundary with q_b={bc.q_b} has no steady lifting")
    return np.zeros_like(x)


@dataclass
class SpectralBasis:
    """
    L2-orthonormal eigenmodes on (0, length), sampled on a trapezoid grid.

    phi_modes[i] has eigenvalue phi_eigs[i] for -d2/dx2 with Neumann ends;
    T_modes[i] has zero slope on Gamma faces and zero value elsewhere.
    """
    n: int
    length: float
    case: str
    x: np.ndarray
    weights: np.ndarray
    phi_modes: np.ndarray
    T_modes: np.ndarray
    phi_eigs: np.ndarray
    T_eigs: np.ndarray
    T_tilde: np.ndarray
    bc: object = None
    aliasing_warned: bool = field(default=False, repr=False, compare=False)

    def inner(self, f, modes):
        return modes @ (self.weights * f)

    def gram(self, which="phi"):
        modes = self.phi_modes if which == "phi" else self.T_modes
        return (modes * self.weights) @ modes.T

    def lifting_norms(self):
        """L2 and H1 norms of the lifting (exact for the affine lifting)."""
        L2 = math.sqrt(float(np.sum(self.weights * self.T_tilde**2)))
        slope = (self.T_tilde[-1] - self.T_tilde[0]) / self.length
        H1 = math.sqrt(L2**2 + slope**2 * self.length)
        return L2, H1


def build_bases(grid, bc, n, quad_cells=None):
    if grid.dim != 1:
        raise DomainError("Spectral bases are built on 1D intervals only")
    if n < 1:
        raise DomainError(f"Mode count must be >= 1, got {n}")
    length = grid.extents[0]
    case = _gamma_case(bc)
    M = quad_cells or max(1024, 8 * n)
    x = np.linspace(0.0, length, M + 1)
    w = np.full(M + 1, length / M)
    w[0] = w[-1] = 0.5 * length / M

    basis = SpectralBasis(
        n=n, length=length, case=case, x=x, weights=w,
        phi_modes=phi_modes_at(x, length, n),
        T_modes=T_modes_at(x, length, n, case),
        phi_eigs=(np.arange(n) * np.pi / length) ** 2,
        T_eigs=(_T_wavenumbers(n, case) * np.pi / length) ** 2,
        T_tilde=lifting_1d(x, length, bc),
        bc=bc,
    )
    log_info(f"Spectral basis: n={n}, Gamma case '{case}', {M + 1} quadrature nodes")
    return basis


# ---------------------------------------------------------------
# Mode vectors
# ---------------------------------------------------------------
@dataclass
class ModeVector:
    a: np.ndarray
    b: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        self.a = np.asarray(self.a, dtype=float)
        self.b = np.asarray(self.b, dtype=float)
        if self.a.shape != self.b.shape:
            raise DomainError(f"Mode vectors must have equal lengths, got {self.a.shape} and {self.b.shape}")

    def __len__(self):
        return len(self.a)


def project(phi, T_bar, basis, x=None):
    """P_Vn phi and P_Zn T_bar; fields sampled on `x` (default the basis nodes)."""
    if x is not None:
        phi = np.interp(basis.x, x, phi)
        T_bar = np.interp(basis.x, x, T_bar)
    return ModeVector(basis.inner(phi, basis.phi_modes), basis.inner(T_bar, basis.T_modes))


def reconstruct(m: ModeVector, basis, x=None):
    """phi and T_bar on the basis nodes, or on `x`."""
    if x is None:
        return m.a @ basis.phi_modes, m.b @ basis.T_modes
    return (
        m.a @ phi_modes_at(x, basis.length, basis.n),
        m.b @ T_modes_at(x, basis.length, basis.n, basis.case),
    )


def _fields(m, basis):
    phi, T_bar = reconstruct(m, basis)
    lap_phi = -(basis.phi_eigs * m.a) @ basis.phi_modes
    return phi, lap_phi, T_bar, T_bar + basis.T_tilde


def galerkin_rhs(m: ModeVector, basis, pot, h, mode="full"):
    """(da/dt, db/dt) of the projected system. Warns once per basis when the quadrature aliases."""
    phi, lap_phi, _, T = _fields(m, basis)
    reaction = -pot.dW(phi) + h.gamma * pot.dnu(phi) * T
    if not basis.aliasing_warned:
        check_aliasing(reaction, basis)
    da = (-h.eps**2 * basis.phi_eigs * m.a + basis.inner(reaction, basis.phi_modes)) / h.alpha_hat

    dphi_dt = da @ basis.phi_modes
    forcing = -h.gamma * h.theta * pot.dnu(phi) * dphi_dt
    if mode == "full":
        forcing = forcing + source_F(phi, lap_phi, T, pot, h)
    db = (-h.delta * basis.T_eigs * m.b + basis.inner(forcing, basis.T_modes)) / h.beta_hat
    return da, db


def aliasing_fraction(values):
    """Share of cosine-spectrum energy in the top eighth of the modes."""
    c = dct(np.asarray(values, dtype=float), type=1)
    total = float(np.sum(c**2))
    if total == 0.0:
        return 0.0
    top = c[-max(1, len(c) // 8):]
    return float(np.sum(top**2)) / total


def check_aliasing(values, basis):
    frac = aliasing_fraction(values)
    if frac > ALIAS_THRESHOLD:
        log_warn(f"Galerkin quadrature aliasing: {frac:.3e} of the nonlinear spectrum in the top modes")
        basis.aliasing_warned = True
    return frac


# ---------------------------------------------------------------
# Energies along Galerkin trajectories
# ---------------------------------------------------------------
def modal_energy_report(m: ModeVector, basis, pot, h):
    phi, _, T_bar, T = _fields(m, basis)
    w = basis.weights
    W_int = float(np.sum(w * pot.W(phi)))
    nu_int = float(np.sum(w * pot.nu(phi)))
    grad_sq = float(np.sum(basis.phi_eigs * m.a**2))
    lap_sq = float(np.sum(basis.phi_eigs**2 * m.a**2))

    E = float(np.sum(w * T)) + h.beta * W_int + h.inv_St * nu_int + 0.5 * h.beta * h.eps**2 * grad_sq
    E0 = h.beta_hat / (2.0 * h.theta) * float(np.sum(m.b**2)) + W_int + 0.5 * h.eps**2 * grad_sq
    E1 = E0 + e1_coefficient(h, pot) * lap_sq
    if np.any(T + h.theta <= 0):
        S = math.nan
    else:
        S = float(np.sum(w * (h.beta * h.gamma * pot.nu(phi) + np.log(T + h.theta))))
    return EnergyReport(E=E, E0=E0, E1=E1, E1_star=max(1.0, E1), S=S)


def dE1_dt(m: ModeVector, rates, basis, pot, h):
    da, db = rates
    phi, _, _, _ = _fields(m, basis)
    dphi_dt = da @ basis.phi_modes
    dE0 = (
        h.beta_hat / h.theta * float(np.sum(m.b * db))
        + float(np.sum(basis.weights * pot.dW(phi) * dphi_dt))
        + h.eps**2 * float(np.sum(basis.phi_eigs * m.a * da))
    )
    return dE0 + 2.0 * e1_coefficient(h, pot) * float(np.sum(basis.phi_eigs**2 * m.a * da))


def energy_identity_residual(m: ModeVector, basis, pot, h, mode="full"):
    """
    theta dE0/dt + delta |grad T_bar|^2 + alpha_hat theta |dphi/dt|^2
    - int F T_bar - gamma theta int nu'(phi) dphi/dt T_tilde; zero for the
    semi-discrete system.
    """
    da, db = galerkin_rhs(m, basis, pot, h, mode)
    phi, lap_phi, T_bar, T = _fields(m, basis)
    dphi_dt = da @ basis.phi_modes
    w = basis.weights
    dE0 = (
        h.beta_hat / h.theta * float(np.sum(m.b * db))
        + float(np.sum(w * pot.dW(phi) * dphi_dt))
        + h.eps**2 * float(np.sum(basis.phi_eigs * m.a * da))
    )
    F = source_F(phi, lap_phi, T, pot, h) if mode == "full" else 0.0
    rhs = float(np.sum(w * F * T_bar)) + h.gamma * h.theta * float(np.sum(w * pot.dnu(phi) * dphi_dt * basis.T_tilde))
    lhs = h.theta * dE0 + h.delta * float(np.sum(basis.T_eigs * m.b**2)) + h.alpha_hat * h.theta * float(np.sum(da**2))
    return lhs - rhs


# ---------------------------------------------------------------
# Time integration
# ---------------------------------------------------------------
@dataclass
class GalerkinTrajectory:
    times: list = field(default_factory=list)
    modes: list = field(default_factory=list)
    energies: list = field(default_factory=list)
    r: list = field(default_factory=list)
    r_max: float = 0.0
    truncated: bool = False
    constants: object = None

    @property
    def final(self):
        return self.modes[-1]

    def rows(self):
        for t, m, e, r in zip(self.times, self.modes, self.energies, self.r):
            row = {"time": t}
            row.update({f"a_{i + 1}": v for i, v in enumerate(m.a)})
            row.update({f"b_{i + 1}": v for i, v in enumerate(m.b)})
            row.update({"E": e.E, "E0": e.E0, "E1": e.E1, "r": r})
            yield row


def rk4_step(m: ModeVector, dt, basis, pot, h, mode="full"):
    def f(a, b):
        return galerkin_rhs(ModeVector(a, b), basis, pot, h, mode)

    a, b = m.a, m.b
    k1 = f(a, b)
    k2 = f(a + 0.5 * dt * k1[0], b + 0.5 * dt * k1[1])
    k3 = f(a + 0.5 * dt * k2[0], b + 0.5 * dt * k2[1])
    k4 = f(a + dt * k3[0], b + dt * k3[1])
    a_new = a + dt / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
    b_new = b + dt / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
    return ModeVector(a_new, b_new, m.time + dt)


def integrate_modes(m0: ModeVector, basis, pot, h, dt, t_end, mode="full",
                    sample_every=1, E1_cap=1e12):
    if len(m0) != basis.n:
        raise DomainError(f"Mode vector has {len(m0)} modes, basis has {basis.n}")
    n_steps = int(math.ceil(t_end / dt - 1e-12)) if t_end > 0 else 0
    dt_eff = t_end / n_steps if n_steps else dt

    e_init = modal_energy_report(m0, basis, pot, h)
    constants = estimate_constants(h, pot, basis.lifting_norms(), E1_initial=e_init.E1)
    traj = GalerkinTrajectory(constants=constants)
    def sample(m, energy):
        rates = galerkin_rhs(m, basis, pot, h, mode)
        rate = dE1_dt(m, rates, basis, pot, h) if energy.E1 > 1.0 else 0.0
        bound = constants.A * energy.E1_star + constants.D * (constants.B + energy.E1_star) ** 3 + constants.C
        r = rate / bound if bound > 0 and math.isfinite(bound) else math.nan
        traj.times.append(m.time)
        traj.modes.append(m)
        traj.energies.append(energy)
        traj.r.append(r)
        if math.isfinite(r):
            traj.r_max = max(traj.r_max, r)

    sample(m0, e_init)
    m = m0
    for k in range(1, n_steps + 1):
        m = rk4_step(m, dt_eff, basis, pot, h, mode)
        if not (np.all(np.isfinite(m.a)) and np.all(np.isfinite(m.b))):
            log_warn(f"Galerkin trajectory blew up at t={m.time:.6g}; truncated")
            traj.truncated = True
            break
        if k % sample_every == 0 or k == n_steps:
            energy = modal_energy_report(m, basis, pot, h)
            if energy.E1 > E1_cap:
                log_warn(f"Galerkin E1={energy.E1:.3e} exceeds cap at t={m.time:.6g}; truncated")
                traj.truncated = True
                break
            sample(m, energy)
    return traj


# ---------------------------------------------------------------
# Continuous dependence
# ---------------------------------------------------------------
def perturbation_direction(n):
    i = np.arange(1, n + 1, dtype=float)
    return ModeVector(1.0 / i**2, 1.0 / i**2)


def difference_norm(m1: ModeVector, m2: ModeVector, basis):
    """|[T]|^2_L2 + |[phi]|^2_H2 of the difference of two mode vectors."""
    da = m1.a - m2.a
    db = m1.b - m2.b
    lam = basis.phi_eigs
    return float(np.sum(db**2) + np.sum((1.0 + lam + lam**2) * da**2))


@dataclass
class DependenceReport:
    times: np.ndarray
    scales: tuple
    R: dict
    R_max: dict
    spread: float
    stable: bool
    t_reached: float


def continuous_dependence_experiment(m0: ModeVector, basis, pot, h, dt, t_end,
                                     perturbation_scale=1e-3, levels=3, mode="full",
                                     sample_every=1, tolerance=0.2):
    """
    Growth ratio R(t) of the perturbation norm for dyadic scales
    `perturbation_scale`, /2, /4, ...; the run is stable when the max of R
    agrees across scales within `tolerance`.
    """
    scales = tuple(perturbation_scale / 2**k for k in range(levels))
    base = integrate_modes(m0, basis, pot, h, dt, t_end, mode, sample_every)
    direction = perturbation_direction(basis.n)

    R, R_max = {}, {}
    n_common = len(base.times)
    for s in scales:
        if s == 0.0:
            R[s] = np.ones(len(base.times))
            R_max[s] = 1.0
            continue
        m_pert = ModeVector(m0.a + s * direction.a, m0.b + s * direction.b, m0.time)
        pert = integrate_modes(m_pert, basis, pot, h, dt, t_end, mode, sample_every)
        n = min(len(base.modes), len(pert.modes))
        n_common = min(n_common, n)
        d0 = difference_norm(pert.modes[0], base.modes[0], basis)
        R[s] = np.array([difference_norm(pert.modes[k], base.modes[k], basis) / d0 for k in range(n)])

    times = np.asarray(base.times[:n_common])
    for s in scales:
        R[s] = R[s][:n_common]
        R_max[s] = float(np.max(R[s]))
    if n_common < len(base.times):
        log_warn(f"Continuous dependence interval shortened to t={times[-1]:.6g}")

    values = list(R_max.values())
    spread = (max(values) - min(values)) / min(values) if min(values) > 0 else math.inf
    return DependenceReport(
        times=times, scales=scales, R=R, R_max=R_max, spread=spread,
        stable=spread <= tolerance, t_reached=float(times[-1]) if len(times) else 0.0,
    )


# ---------------------------------------------------------------
# Cross-method comparison
# ---------------------------------------------------------------
def compare_with_pde(state, m: ModeVector, basis):
    """L2 differences (phi, T) between a finite-difference state and a mode vector on the state's grid."""
    grid = state.grid
    if grid.dim != 1:
        raise DomainError("compare_with_pde needs a 1D state")
    if abs(state.time - m.time) > 1e-9 * max(1.0, abs(m.time)):
        raise NumericalError(
            f"State time {state.time} and mode time {m.time} differ",
            diagnostics={"state_time": state.time, "mode_time": m.time},
        )
    x = grid.coords[0]
    phi, T_bar = reconstruct(m, basis, x)
    T = T_bar + lifting_1d(x, basis.length, basis.bc)
    return math.sqrt(grid.norm_sq(state.phi - phi)), math.sqrt(grid.norm_sq(state.T - T))
