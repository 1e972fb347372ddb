"""
Constitutive laws, parameter charts, energy/entropy functionals and the
a-priori estimate constants of the generalized Caginalp phase-field model.

Runtime physics works in the hat chart
    alpha_hat dt(phi) = eps^2 lap(phi) - W'(phi) + gamma nu'(phi) T
    beta_hat dt(T)    = delta lap(T) - gamma (T + theta) nu'(phi) dt(phi) + alpha_hat dt(phi)^2
"""

import math
from dataclasses import dataclass, fields

import numpy as np

from phaseforge.core.errors import DomainError
from phaseforge.utils.logging import log_warn


def _require_positive(obj, names=None):
    for f in fields(obj):
        if names is not None and f.name not in names:
            continue
        value = getattr(obj, f.name)
        if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
            raise DomainError(f"{type(obj).__name__}.{f.name} must be a positive finite number, got {value!r}")


# ---------------------------------------------------------------
# Parameter charts
# ---------------------------------------------------------------
@dataclass(frozen=True)
class PhysicalParams:
    rho: float
    Te: float
    dT: float
    L: float
    h: float
    t0: float
    sigma: float
    Le: float
    C0: float
    kappa0: float
    k0: float

    def __post_init__(self):
        _require_positive(self)
        if self.h > self.L:
            raise DomainError(f"Interface thickness h={self.h} exceeds length scale L={self.L}")


@dataclass(frozen=True)
class NondimParams:
    eps: float
    Pe: float
    alpha: float
    theta: float
    beta: float
    St: float

    def __post_init__(self):
        _require_positive(self)


@dataclass(frozen=True)
class HatParams:
    alpha_hat: float
    beta_hat: float
    gamma: float
    delta: float
    eps: float
    theta: float

    def __post_init__(self):
        _require_positive(self)

    @property
    def alpha(self):
        return 1.0 / self.alpha_hat

    @property
    def beta(self):
        return 1.0 / self.beta_hat

    @property
    def inv_St(self):
        return self.beta * self.gamma * self.theta

    @property
    def inv_Pe(self):
        return self.beta * self.delta

    def to_nondim(self):
        return NondimParams(
            eps=self.eps,
            Pe=1.0 / self.inv_Pe,
            alpha=self.alpha,
            theta=self.theta,
            beta=self.beta,
            St=1.0 / self.inv_St,
        )


@dataclass(frozen=True)
class SharpScalings:
    alpha_bar: float
    beta_bar: float
    gamma_bar: float
    delta_bar: float
    eps: float

    def __post_init__(self):
        _require_positive(self)


def nondimensionalize(p: PhysicalParams) -> NondimParams:
    return NondimParams(
        eps=p.h / p.L,
        Pe=p.rho * p.C0 * p.L**2 / (p.k0 * p.t0),
        alpha=p.kappa0 * p.t0 * p.sigma / (p.rho * p.h),
        theta=p.Te / p.dT,
        beta=p.sigma / (p.rho * p.C0 * p.h * p.dT),
        St=p.C0 * p.dT / p.Le,
    )


def hat_params(n: NondimParams) -> HatParams:
    return HatParams(
        alpha_hat=1.0 / n.alpha,
        beta_hat=1.0 / n.beta,
        gamma=1.0 / (n.beta * n.St * n.theta),
        delta=1.0 / (n.beta * n.Pe),
        eps=n.eps,
        theta=n.theta,
    )


def sharp_scalings(h: HatParams) -> SharpScalings:
    return SharpScalings(
        alpha_bar=h.alpha_hat / h.eps**2,
        beta_bar=h.beta_hat / h.eps,
        gamma_bar=h.gamma / h.eps,
        delta_bar=h.delta / h.eps,
        eps=h.eps,
    )


def hat_and_sharp_params(n: NondimParams):
    h = hat_params(n)
    return h, sharp_scalings(h)


def hat_from_sharp(bars: SharpScalings, theta, eps=None) -> HatParams:
    """Hat chart at `eps` (default `bars.eps`) with the barred quantities held fixed."""
    eps = bars.eps if eps is None else eps
    return HatParams(
        alpha_hat=bars.alpha_bar * eps**2,
        beta_hat=bars.beta_bar * eps,
        gamma=bars.gamma_bar * eps,
        delta=bars.delta_bar * eps,
        eps=eps,
        theta=theta,
    )


# ---------------------------------------------------------------
# Pointwise constitutive laws
# ---------------------------------------------------------------
def mu_g(phi, lap_phi, T, pot, h: HatParams):
    """Generalized chemical potential W'(phi) - gamma nu'(phi) T - eps^2 lap(phi)."""
    return pot.dW(phi) - h.gamma * pot.dnu(phi) * T - h.eps**2 * lap_phi


def source_F(phi, lap_phi, T, pot, h: HatParams):
    X = h.eps**2 * lap_phi - pot.dW(phi)
    return (X**2 + h.gamma * X * pot.dnu(phi) * T) / h.alpha_hat


def latent_heat(T, n):
    theta = n.theta
    T = np.asarray(T, dtype=float)
    if np.any(T + theta <= 0):
        raise DomainError("Absolute temperature T + theta must be positive")
    out = 1.0 + T / theta
    return float(out) if out.ndim == 0 else out


def physical_latent_heat(T_kelvin, p: PhysicalParams):
    T_kelvin = np.asarray(T_kelvin, dtype=float)
    if np.any(T_kelvin <= 0):
        raise DomainError("Physical temperature must be positive (Kelvin)")
    out = p.Le * T_kelvin / p.Te
    return float(out) if out.ndim == 0 else out


def entropy_density(phi, T, pot, h: HatParams):
    T = np.asarray(T, dtype=float)
    if np.any(T + h.theta <= 0):
        raise DomainError("Entropy undefined: T + theta <= 0")
    return h.beta * h.gamma * pot.nu(phi) + np.log(T + h.theta)


def free_energy_density(phi, grad_phi_sq, T, pot, h: HatParams):
    """Nondimensional f with e = f + (T + theta) s equal to the energy integrand."""
    s = entropy_density(phi, T, pot, h)
    e = T + h.beta * pot.W(phi) + h.inv_St * pot.nu(phi) + 0.5 * h.beta * h.eps**2 * grad_phi_sq
    return e - (T + h.theta) * s


def physical_stefan_coefficients(p: PhysicalParams):
    kappa = p.kappa0
    return {
        "kinetic": p.rho / (kappa * p.h),
        "capillary": p.sigma,
        "undercooling": p.rho * p.Le / p.Te,
        "quadratic": 2.0 / (kappa * p.h),
    }


# ---------------------------------------------------------------
# Energies
# ---------------------------------------------------------------
@dataclass(frozen=True)
class EnergyReport:
    E: float
    E0: float
    E1: float
    E1_star: float
    S: float


def coupling_mu(h: HatParams, pot):
    return h.gamma**2 * pot.sup.nu1**2


def e1_coefficient(h: HatParams, pot):
    """Coefficient of int |lap phi|^2 in E1; zero when the coupling is degenerate."""
    mu = coupling_mu(h, pot)
    if mu == 0.0:
        return 0.0
    return 0.5 * h.eps**2 * h.delta * h.alpha_hat / (mu * h.theta)


def energy_report(state, pot, h: HatParams) -> EnergyReport:
    grid = state.grid
    phi, T = state.phi, state.T
    grad_sq = grid.gradient_sq_integral(phi)
    lap = grid.laplacian(phi)

    W_int = grid.integrate(pot.W(phi))
    nu_int = grid.integrate(pot.nu(phi))

    E = grid.integrate(T) + h.beta * W_int + h.inv_St * nu_int + 0.5 * h.beta * h.eps**2 * grad_sq
    E0 = h.beta_hat / (2.0 * h.theta) * grid.norm_sq(T) + W_int + 0.5 * h.eps**2 * grad_sq
    E1 = E0 + e1_coefficient(h, pot) * grid.norm_sq(lap)

    if np.any(T + h.theta <= 0):
        S = math.nan
    else:
        S = grid.integrate(entropy_density(phi, T, pot, h))

    return EnergyReport(E=E, E0=E0, E1=E1, E1_star=max(1.0, E1), S=S)


def entropy_total(state, pot, h: HatParams):
    """Total entropy; raises when T + theta <= 0 anywhere."""
    return state.grid.integrate(entropy_density(state.phi, state.T, pot, h))


# ---------------------------------------------------------------
# A-priori estimate constants
# ---------------------------------------------------------------
@dataclass(frozen=True)
class EstimateConstants:
    mu: float
    omega: float
    iota: float
    A0: float
    B0: float
    C0: float
    D0: float
    A: float
    B: float
    C: float
    D: float
    t_star_1: float
    degenerate: bool = False


def estimate_constants(h: HatParams, pot, lifting_norms=(0.0, 0.0), E1_initial=None):
    """
    Structural constants of the second-order and final a-priori estimates.

    `pot` may be a Potentials or a SupNorms. `lifting_norms` are the L2 and H1
    norms of the temperature lifting. Hidden constants are set to 1.
    """
    sup = getattr(pot, "sup", pot)
    L2, H1 = lifting_norms

    alpha, beta, gamma, delta, eps, theta = h.alpha, h.beta, h.gamma, h.delta, h.eps, h.theta
    d_hat, e_hat, th_hat = 1.0 / delta, 1.0 / eps, 1.0 / theta

    mu = gamma**2 * sup.nu1**2
    omega = sup.W2**2
    W1 = sup.W1

    degenerate = mu == 0.0
    if degenerate:
        log_warn("Estimate constants degenerate: nu'_inf = 0, coupling absent")
        iota = math.nan
        mu_hat = math.nan
    else:
        iota = (sup.nu2 / sup.nu1) ** 2
        mu_hat = 1.0 / mu

    A0 = delta * omega * mu_hat * th_hat * e_hat**2
    D0 = (
        max(1.0, theta * beta) * theta * beta
        * (1.0 + mu * alpha * theta * d_hat)
        * iota * mu * e_hat**4 * (1.0 + iota * mu * e_hat**4)
    )
    B0 = h.beta_hat * th_hat * L2**2
    C0 = (mu * alpha + delta * th_hat) * H1**2

    sq_mu = math.sqrt(mu)
    bt = beta * theta
    A = A0 + beta * alpha * (1.0 + sq_mu) * W1 + d_hat * alpha**2 * mu**1.5
    C = (
        C0
        + th_hat * alpha * sq_mu * W1 * H1**2
        + th_hat * alpha * W1**3
        + th_hat * alpha * eps**2 * sq_mu * H1**4
    )
    D = (
        D0
        + eps**2 * math.sqrt(bt) * alpha**2 * d_hat * mu * (1.0 + alpha**3 * d_hat**3 * mu**3 * bt**1.5)
        + eps * beta * mu * math.sqrt(alpha**3 * d_hat * theta)
        * (1.0 + eps**3 * mu**3 * math.sqrt(alpha**9 * theta**3 * d_hat**9))
    )

    t_star = existence_time(D, E1_initial) if E1_initial is not None else math.nan
    return EstimateConstants(
        mu=mu, omega=omega, iota=iota,
        A0=A0, B0=B0, C0=C0, D0=D0,
        A=A, B=B0, C=C, D=D,
        t_star_1=t_star, degenerate=degenerate,
    )


def existence_time(D, E1_initial):
    """Lower bound 1/(D E1^2) on the time of existence."""
    if isinstance(D, EstimateConstants):
        D = D.D
    if E1_initial == 0.0 or D == 0.0:
        return math.inf
    return 1.0 / (D * E1_initial**2)
