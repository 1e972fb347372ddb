import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import Polynomial
from scipy.optimize import brentq, minimize_scalar

from phaseforge.core.errors import DomainError
from phaseforge.utils.logging import log_info, log_warn

# Polynomial cores are used on WINDOW; outside it they are blended to constants
# over BLEND so that every potential lies in C^3_b(R).
WINDOW = (-0.5, 1.5)
BLEND = 0.5
_SAMPLES = 200001


class SplicedPolynomial:
    """
    A polynomial on a window, continued outside by degree-6 blends that match
    value and the first three derivatives at the window edge and become
    constant after BLEND.
    """

    def __init__(self, core, window=WINDOW, blend=BLEND):
        self.core = Polynomial(core) if not isinstance(core, Polynomial) else core
        self.lo, self.hi = window
        self.blend = blend
        self._core = [self.core] + [self.core.deriv(k) for k in (1, 2, 3)]
        left = self._blend_polynomial(self.lo, -1.0)
        right = self._blend_polynomial(self.hi, +1.0)
        self._left = [left] + [left.deriv(k) for k in (1, 2, 3)]
        self._right = [right] + [right.deriv(k) for k in (1, 2, 3)]

    def _blend_polynomial(self, edge, direction):
        # P(u) with u = direction * (x - edge); P^(m)(blend) = 0 for m = 1, 2, 3
        c = np.zeros(7)
        for k in range(4):
            c[k] = self._core[k](edge) * direction**k / math.factorial(k)

        A = np.zeros((3, 3))
        rhs = np.zeros(3)
        for row, m in enumerate((1, 2, 3)):
            for j in range(m, 7):
                coeff = math.factorial(j) / math.factorial(j - m) * self.blend ** (j - m)
                if j >= 4:
                    A[row, j - 4] = coeff
                else:
                    rhs[row] -= coeff * c[j]
        c[4:] = np.linalg.solve(A, rhs)
        return Polynomial(c)

    def __call__(self, x, order=0):
        if order not in (0, 1, 2, 3):
            raise DomainError(f"Derivative order must be 0..3, got {order}")
        x_arr = np.asarray(x, dtype=float)
        out = self._core[order](x_arr)

        left = x_arr < self.lo
        if np.any(left):
            u = np.clip(self.lo - x_arr, 0.0, self.blend)
            out = np.where(left, (-1.0) ** order * self._left[order](u), out)

        right = x_arr > self.hi
        if np.any(right):
            u = np.clip(x_arr - self.hi, 0.0, self.blend)
            out = np.where(right, self._right[order](u), out)

        if np.ndim(out) == 0:
            return float(out)
        return out

    def support(self):
        return self.lo - self.blend, self.hi + self.blend


@dataclass(frozen=True)
class SupNorms:
    """Sup-norms over R of the potential derivatives entering the a-priori estimates."""
    W1: float
    W2: float
    nu1: float
    nu2: float
    W3: float = 0.0
    nu3: float = 0.0


@dataclass
class Potentials:
    """
    Double-well potential W and entropy interpolant nu, both C^3_b(R).

    Wells sit at 0 (solid) and 1 (liquid); `a` is the metastable root of W'
    inside (0, 1) and `b` the smallest argmax of nu' on [0, 1].
    """
    name: str
    W_poly: SplicedPolynomial
    nu_poly: SplicedPolynomial
    sup: SupNorms = field(init=False)
    a: float = field(init=False)
    b: float = field(init=False)
    b_multiplicity: int = field(init=False)
    phase_neutral: bool = field(init=False)

    def __post_init__(self):
        lo, hi = self.W_poly.support()
        xs = np.linspace(lo, hi, _SAMPLES)
        self.sup = SupNorms(
            W1=float(np.max(np.abs(self.W(xs, 1)))),
            W2=float(np.max(np.abs(self.W(xs, 2)))),
            nu1=float(np.max(np.abs(self.nu(xs, 1)))),
            nu2=float(np.max(np.abs(self.nu(xs, 2)))),
            W3=float(np.max(np.abs(self.W(xs, 3)))),
            nu3=float(np.max(np.abs(self.nu(xs, 3)))),
        )
        self.a = self._metastable_root()
        self.b, self.b_multiplicity = self._weight_peak()
        self.phase_neutral = (
            abs(self.nu(0.0, 1)) < 1e-12 and abs(self.nu(1.0, 1)) < 1e-12
        )

    # ---------------------------------------------------------------
    # Evaluators
    # ---------------------------------------------------------------
    def W(self, phi, order=0):
        return self.W_poly(phi, order)

    def nu(self, phi, order=0):
        return self.nu_poly(phi, order)

    def dW(self, phi):
        return self.W_poly(phi, 1)

    def dnu(self, phi):
        return self.nu_poly(phi, 1)

    # ---------------------------------------------------------------
    # Structural points
    # ---------------------------------------------------------------
    def _metastable_root(self):
        lo, hi = 1e-6, 1.0 - 1e-6
        f_lo, f_hi = self.dW(lo), self.dW(hi)
        if f_lo * f_hi >= 0.0:
            log_warn(f"Potential '{self.name}': W' has no sign change in (0, 1); metastable root undefined.")
            return math.nan
        return float(brentq(self.dW, lo, hi, xtol=1e-14, rtol=1e-14))

    def _weight_peak(self):
        xs = np.linspace(0.0, 1.0, 20001)
        vals = self.nu(xs, 1)
        vmax = float(np.max(vals))
        if vmax - float(np.min(vals)) < 1e-12:
            # flat nu' (linear interpolant): no distinguished peak
            b = self.a if not math.isnan(self.a) else 0.5
            log_info(f"Potential '{self.name}': nu' is constant, centering at b = {b:.6g}")
            return b, 1

        tol = 1e-9 * max(1.0, abs(vmax))
        peaks = []
        for i in range(len(xs)):
            left = vals[i - 1] if i > 0 else -np.inf
            right = vals[i + 1] if i < len(xs) - 1 else -np.inf
            if vals[i] >= left and vals[i] >= right and vals[i] >= vmax - tol:
                if peaks and i - peaks[-1] == 1:
                    continue
                peaks.append(i)

        if len(peaks) > 1:
            log_warn(
                f"Potential '{self.name}': nu' attains its maximum {len(peaks)} times; "
                f"using the smallest argmax."
            )

        i = peaks[0]
        lo = xs[max(i - 1, 0)]
        hi = xs[min(i + 1, len(xs) - 1)]
        res = minimize_scalar(
            lambda x: -self.nu(x, 1), bounds=(lo, hi), method="bounded",
            options={"xatol": 1e-12},
        )
        return float(res.x), len(peaks)

    def validate(self):
        """Check the structural properties required of W and nu on [0, 1]."""
        xs = np.linspace(0.0, 1.0, 10001)
        checks = [
            (np.all(self.W(xs) >= -1e-14), "W must be nonnegative on [0, 1]"),
            (abs(self.W(0.0)) < 1e-12 and abs(self.W(1.0)) < 1e-12, "W must vanish at 0 and 1"),
            (abs(self.dW(0.0)) < 1e-12 and abs(self.dW(1.0)) < 1e-12, "W' must vanish at 0 and 1"),
            (not math.isnan(self.a) and 0.0 < self.a < 1.0, "W' must have a root inside (0, 1)"),
            (abs(self.nu(0.0)) < 1e-12 and abs(self.nu(1.0) - 1.0) < 1e-12, "nu must satisfy nu(0)=0, nu(1)=1"),
            (np.all(self.nu(xs, 1) >= -1e-12), "nu must be nondecreasing on [0, 1]"),
        ]
        for ok, msg in checks:
            if not ok:
                raise DomainError(f"Potential '{self.name}': {msg}")
        return self

    @classmethod
    def from_polynomials(cls, W_coeffs, nu_coeffs, name="custom", validate=True):
        pot = cls(name, SplicedPolynomial(W_coeffs), SplicedPolynomial(nu_coeffs))
        if validate:
            pot.validate()
        return pot


QUARTIC_W = (0.0, 0.0, 1.0, -2.0, 1.0)

NU_REGISTRY = {
    "quartic": (0.0, 0.0, 3.0, -2.0),
    "smootherstep": (0.0, 0.0, 0.0, 10.0, -15.0, 6.0),
    "caginalp": (0.0, 1.0),
}


def make_potentials(name="quartic", w_scale=1.0):
    """
    Build one of the registered potential pairs.

    All pairs share the quartic double well (scaled by `w_scale`); they differ
    by the entropy interpolant nu.
    """
    if name not in NU_REGISTRY:
        raise DomainError(
            f"Unknown potentials '{name}'. Available: {', '.join(sorted(NU_REGISTRY))}"
        )
    if w_scale <= 0:
        raise DomainError(f"w_scale must be positive, got {w_scale}")
    W_coeffs = tuple(w_scale * c for c in QUARTIC_W)
    return Potentials.from_polynomials(W_coeffs, NU_REGISTRY[name], name=name)
