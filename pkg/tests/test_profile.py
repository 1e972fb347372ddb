import math
import time

import numpy as np
import pytest
from scipy.special import expit

from phaseforge.core.errors import DomainError, NumericalError
from phaseforge.core.potentials import make_potentials
from phaseforge.core.profile import (
    first_integral_residual,
    interface_weight,
    solve_profile,
    surface_tension,
)


@pytest.fixture(scope="module")
def quartic():
    return make_potentials("quartic")


@pytest.fixture(scope="module")
def profile(quartic):
    return solve_profile(quartic)


def test_quartic_surface_tension(profile):
    assert profile.sigma0 == pytest.approx(math.sqrt(2.0) / 6.0, abs=1e-8)


def test_first_integral_holds(profile, quartic):
    assert first_integral_residual(profile, quartic) < 1e-8


def test_profile_is_centered_and_monotone(profile):
    assert profile.evaluate(0.0) == pytest.approx(profile.b, abs=1e-10)
    assert np.all(np.diff(profile.phi0) >= 0.0)
    assert profile.phi0[0] < 1e-12
    assert profile.phi0[-1] > 1.0 - 1e-12


def test_quartic_profile_is_logistic(profile):
    z = np.linspace(-10.0, 10.0, 2001)
    assert np.max(np.abs(profile.evaluate(z) - expit(math.sqrt(2.0) * z))) < 1e-8
    assert np.max(np.abs(profile.dphi0 - profile.phi0 * (1.0 - profile.phi0) * math.sqrt(2.0))) < 1e-8


def test_derivative_matches_samples(profile):
    assert np.allclose(profile.derivative(profile.z_grid), profile.dphi0, atol=1e-12)


def test_interface_weight_is_normalized(profile, quartic):
    weight, total = interface_weight(profile, quartic)
    assert total == pytest.approx(1.0, abs=1e-6)
    assert np.all(weight >= -1e-14)


def test_mirrored_profile_connects_one_to_zero(profile, quartic):
    mirrored = profile.mirrored()
    assert mirrored.orientation == -1
    assert mirrored.evaluate(1.0) == pytest.approx(profile.evaluate(-1.0))
    _, total = interface_weight(mirrored, quartic)
    assert total == pytest.approx(-1.0, abs=1e-6)


def test_surface_tension_without_cross_check(profile):
    assert surface_tension(profile) == pytest.approx(profile.sigma0)


def test_smootherstep_shares_the_well(quartic, profile):
    other = solve_profile(make_potentials("smootherstep"))
    # same W, so same sigma0; b is 1/2 for both interpolants
    assert other.sigma0 == pytest.approx(profile.sigma0, abs=1e-8)


def test_truncated_half_width_is_rejected(quartic):
    with pytest.raises(NumericalError) as exc:
        solve_profile(quartic, half_width=2.0)
    assert "half_width" in str(exc.value)


def test_bad_orientation(quartic):
    with pytest.raises(DomainError):
        solve_profile(quartic, orientation=0)


# -----------------------------
# Test: far tails stay resolved
# -----------------------------
def test_default_profile_finishes_quickly(quartic):
    start = time.perf_counter()
    sol = solve_profile(quartic)
    assert time.perf_counter() - start < 30.0
    assert np.all(np.isfinite(sol.phi0))
    assert np.all(np.isfinite(sol.dphi0))
    # dz/dpsi stays 1/sqrt(2) even where 1 - phi is below machine resolution
    assert sol._slope(np.array([20.0, 30.0, -30.0])) == pytest.approx(np.full(3, 1.0 / math.sqrt(2.0)))


@pytest.mark.parametrize("c", [0.25, 4.0])
def test_surface_tension_scales_with_root_of_well_depth(profile, c):
    scaled = solve_profile(make_potentials("quartic", w_scale=c))
    assert scaled.sigma0 == pytest.approx(math.sqrt(c) * profile.sigma0, rel=1e-8)
