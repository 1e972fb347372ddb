"""
Stationary diffuse-interface profile: phi0'' = W'(phi0), phi0(-inf)=0,
phi0(+inf)=1, phi0(0)=b.

The first integral (phi0')^2 = 2 W(phi0) is integrated in the logistic
variable psi = logit(phi), which removes the endpoint singularity of
dz/dphi = 1/sqrt(2W(phi)).
"""

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import Polynomial
from scipy.integrate import quad, solve_ivp, trapezoid
from scipy.interpolate import PchipInterpolator
from scipy.special import expit, logit

from phaseforge.core.errors import DomainError, NumericalError
from phaseforge.utils.logging import log_info

ENDPOINT_TOL = 1e-12
# distance to a well beyond which a W that does not factor is not resolvable
RESOLVABLE_TOL = 1e-7
WELL_FACTOR = Polynomial([0.0, 0.0, 1.0, -2.0, 1.0])
_PSI_SAMPLES = 8001


@dataclass
class ProfileSolution:
    z_grid: np.ndarray
    phi0: np.ndarray
    dphi0: np.ndarray
    sigma0: float
    b: float
    weight: np.ndarray
    orientation: int = 1
    _psi_of_z: object = field(default=None, repr=False)
    _slope: object = field(default=None, repr=False)

    @property
    def dz(self):
        return float(self.z_grid[1] - self.z_grid[0])

    def evaluate(self, z):
        """phi0 at arbitrary abscissae (scalar or array)."""
        z = np.asarray(z, dtype=float) * self.orientation
        return expit(self._psi_of_z(z))

    def derivative(self, z):
        z = np.asarray(z, dtype=float) * self.orientation
        psi = self._psi_of_z(z)
        return self.orientation * expit(psi) * expit(-psi) / self._slope(psi)

    def mirrored(self):
        """The same interface connecting 1 to 0 (z -> -z)."""
        return ProfileSolution(
            z_grid=self.z_grid.copy(),
            phi0=self.phi0[::-1].copy(),
            dphi0=-self.dphi0[::-1],
            sigma0=self.sigma0,
            b=self.b,
            weight=-self.weight[::-1],
            orientation=-self.orientation,
            _psi_of_z=self._psi_of_z,
            _slope=self._slope,
        )


def _well_quotient(pot):
    """R with W = phi^2 (1 - phi)^2 R on [0, 1], or None when W does not factor so."""
    core = pot.W_poly.core
    quotient, remainder = divmod(core, WELL_FACTOR)
    scale = max(1.0, float(np.max(np.abs(core.coef))))
    if np.any(np.abs(remainder.coef) > 1e-12 * scale):
        return None
    if np.any(quotient(np.linspace(0.0, 1.0, 10001)) <= 0.0):
        return None
    return quotient


def _stretch_rate(pot):
    """dz/dpsi as a function of psi, and the largest |psi| it is resolvable at."""
    quotient = _well_quotient(pot)
    if quotient is not None:
        # phi (1 - phi) cancels against sqrt(2 W)
        def rate(psi):
            return 1.0 / np.sqrt(2.0 * quotient(expit(psi)))
        return rate, float(logit(1.0 - ENDPOINT_TOL))

    def rate(psi):
        return expit(psi) * expit(-psi) / np.sqrt(2.0 * pot.W(expit(psi)))
    return rate, float(logit(1.0 - RESOLVABLE_TOL))


def _z_of_psi(rate, psi_b, psi_end, n):
    psi_eval = np.linspace(psi_b, psi_end, n)
    sol = solve_ivp(
        lambda s, z: [rate(s)], (psi_b, psi_end), [0.0],
        method="DOP853", t_eval=psi_eval, rtol=1e-12, atol=1e-13,
    )
    if not sol.success:
        raise NumericalError(
            f"Profile quadrature did not converge: {sol.message}",
            diagnostics={"psi_end": psi_end},
        )
    return psi_eval, sol.y[0]


def solve_profile(pot, half_width=20.0, n_points=2048, orientation=1):
    if n_points < 64:
        raise DomainError(f"n_points must be >= 64, got {n_points}")
    if orientation not in (1, -1):
        raise DomainError(f"orientation must be +1 or -1, got {orientation}")
    xs = np.linspace(RESOLVABLE_TOL, 1.0 - RESOLVABLE_TOL, 10001)
    if np.any(pot.W(xs) <= 0.0):
        raise DomainError(f"Potential '{pot.name}': W must be positive on (0, 1)")

    b = pot.b
    rate, psi_hi = _stretch_rate(pot)
    psi_b = float(logit(b))
    psi_lo = -psi_hi

    half = _PSI_SAMPLES // 2
    psi_r, z_r = _z_of_psi(rate, psi_b, psi_hi, half + 1)
    psi_l, z_l = _z_of_psi(rate, psi_b, psi_lo, half + 1)
    psi_s = np.concatenate([psi_l[:0:-1], psi_r])
    z_s = np.concatenate([z_l[:0:-1], z_r])

    if np.any(np.diff(z_s) <= 0.0):
        raise NumericalError(
            "Profile inversion is not monotone",
            diagnostics={"min_dz": float(np.min(np.diff(z_s)))},
        )

    inner = PchipInterpolator(z_s, psi_s, extrapolate=False)
    z_min, z_max = float(z_s[0]), float(z_s[-1])
    g_min, g_max = float(rate(psi_s[0])), float(rate(psi_s[-1]))

    def psi_of_z(z):
        z = np.asarray(z, dtype=float)
        out = inner(np.clip(z, z_min, z_max))
        # linear tails in psi
        out = np.where(z < z_min, psi_s[0] + (z - z_min) / g_min, out)
        out = np.where(z > z_max, psi_s[-1] + (z - z_max) / g_max, out)
        return out

    z_grid = np.linspace(-half_width, half_width, n_points)
    psi = psi_of_z(z_grid * orientation)
    phi0 = expit(psi)
    dphi0 = orientation * phi0 * expit(-psi) / rate(psi)

    edge = max(pot.W(phi0[0]), pot.W(phi0[-1]))
    if edge >= 1e-12:
        raise NumericalError(
            f"half_width={half_width} too small: W at the profile ends is {edge:.3e}",
            diagnostics={"W_edge": float(edge)},
        )

    weight = pot.nu(phi0, 1) * dphi0
    sol = ProfileSolution(
        z_grid=z_grid, phi0=phi0, dphi0=dphi0, sigma0=math.nan, b=b, weight=weight,
        orientation=orientation, _psi_of_z=psi_of_z, _slope=rate,
    )
    sol.sigma0 = surface_tension(sol, pot)
    log_info(f"Profile '{pot.name}': sigma0 = {sol.sigma0:.12g}, b = {b:.12g}")
    return sol


def surface_tension(sol: ProfileSolution, pot=None, tol=1e-8):
    """
    sigma0 = int (phi0')^2 dz. When `pot` is given it is cross-checked against
    int_0^1 sqrt(2 W(phi)) dphi.
    """
    sigma_z = float(trapezoid(sol.dphi0**2, sol.z_grid))
    if pot is not None:
        sigma_phi, _ = quad(lambda p: math.sqrt(2.0 * max(pot.W(p), 0.0)), 0.0, 1.0,
                            epsabs=1e-14, epsrel=1e-13, limit=200)
        if abs(sigma_z - sigma_phi) > tol:
            raise NumericalError(
                "Surface tension routes disagree",
                diagnostics={"sigma_z": sigma_z, "sigma_phi": sigma_phi},
            )
    return sigma_z


def interface_weight(sol: ProfileSolution, pot, tol=1e-6):
    """Weight d/dz nu(phi0) and its signed integral (+1 for the 0 -> 1 orientation)."""
    weight = pot.nu(sol.phi0, 1) * sol.dphi0
    total = float(trapezoid(weight, sol.z_grid))
    if abs(abs(total) - 1.0) > tol:
        raise NumericalError(
            f"Interface weight integrates to {total:.9g}; profile tails truncated",
            diagnostics={"normalization": total},
        )
    return weight, total


def first_integral_residual(sol: ProfileSolution, pot):
    return float(np.max(np.abs(sol.dphi0**2 - 2.0 * pot.W(sol.phi0))))
