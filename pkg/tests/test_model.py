import math

import numpy as np
import pytest

from phaseforge.core.errors import DomainError
from phaseforge.core.grid import FieldState, Grid
from phaseforge.core.model import (
    HatParams,
    NondimParams,
    PhysicalParams,
    energy_report,
    entropy_density,
    entropy_total,
    estimate_constants,
    existence_time,
    free_energy_density,
    hat_and_sharp_params,
    hat_from_sharp,
    hat_params,
    latent_heat,
    mu_g,
    nondimensionalize,
    physical_latent_heat,
    physical_stefan_coefficients,
    sharp_scalings,
    source_F,
)
from phaseforge.core.potentials import SupNorms, make_potentials

ONES = dict(eps=1.0, Pe=1.0, alpha=1.0, theta=1.0, beta=1.0, St=1.0)


def _physical(**overrides):
    values = dict(rho=2.0, Te=1000.0, dT=10.0, L=1.0, h=0.01, t0=3.0,
                  sigma=0.5, Le=4.0, C0=1.5, kappa0=0.7, k0=0.2)
    values.update(overrides)
    return PhysicalParams(**values)


# -----------------------------
# Parameter charts
# -----------------------------
def test_all_ones_chart():
    h, bars = hat_and_sharp_params(NondimParams(**ONES))
    for value in (h.alpha_hat, h.beta_hat, h.gamma, h.delta, h.eps, h.theta):
        assert value == pytest.approx(1.0)
    for value in (bars.alpha_bar, bars.beta_bar, bars.gamma_bar, bars.delta_bar):
        assert value == pytest.approx(1.0)


def test_nondimensionalize_known_values():
    p = _physical()
    n = nondimensionalize(p)
    assert n.eps == pytest.approx(0.01)
    assert n.theta == pytest.approx(100.0)
    assert n.St == pytest.approx(1.5 * 10.0 / 4.0)
    assert n.Pe == pytest.approx(2.0 * 1.5 * 1.0 / (0.2 * 3.0))


def test_hat_chart_round_trip():
    n = NondimParams(eps=0.05, Pe=3.0, alpha=0.4, theta=7.0, beta=2.5, St=0.8)
    back = hat_params(n).to_nondim()
    for name in ("eps", "Pe", "alpha", "theta", "beta", "St"):
        assert getattr(back, name) == pytest.approx(getattr(n, name))


def test_sharp_chart_inverse():
    h = HatParams(alpha_hat=0.02, beta_hat=0.3, gamma=0.4, delta=0.5, eps=0.1, theta=2.0)
    back = hat_from_sharp(sharp_scalings(h), h.theta)
    for name in ("alpha_hat", "beta_hat", "gamma", "delta", "eps", "theta"):
        assert getattr(back, name) == pytest.approx(getattr(h, name))


def test_sharp_scalings_held_fixed_across_eps():
    h = HatParams(alpha_hat=0.04, beta_hat=0.2, gamma=0.2, delta=0.2, eps=0.2, theta=1.0)
    bars = sharp_scalings(h)
    finer = hat_from_sharp(bars, 1.0, eps=0.05)
    assert sharp_scalings(finer).alpha_bar == pytest.approx(bars.alpha_bar)
    assert finer.alpha_hat == pytest.approx(bars.alpha_bar * 0.05**2)


def test_nonpositive_parameter_is_rejected():
    with pytest.raises(DomainError) as exc:
        NondimParams(**{**ONES, "Pe": 0.0})
    assert "Pe" in str(exc.value)


def test_interface_thicker_than_domain_is_rejected():
    with pytest.raises(DomainError):
        _physical(h=2.0)


# -----------------------------
# Pointwise laws
# -----------------------------
def test_chemical_potential_vanishes_in_pure_phases():
    h = HatParams(1.0, 1.0, 1.0, 1.0, 0.1, 1.0)
    pot = make_potentials("quartic")
    for phase in (0.0, 1.0):
        assert mu_g(phase, 0.0, 0.3, pot, h) == pytest.approx(0.0, abs=1e-12)
        assert source_F(phase, 0.0, 0.3, pot, h) == pytest.approx(0.0, abs=1e-12)


def test_classical_interpolant_keeps_chemical_potential_in_phase():
    h = HatParams(1.0, 1.0, 1.0, 1.0, 0.1, 1.0)
    pot = make_potentials("caginalp")
    assert mu_g(1.0, 0.0, 0.3, pot, h) == pytest.approx(-0.3)


def test_latent_heat_is_affine_in_temperature():
    n = NondimParams(**{**ONES, "theta": 4.0})
    assert latent_heat(0.0, n) == pytest.approx(1.0)
    assert latent_heat(2.0, n) == pytest.approx(1.5)
    with pytest.raises(DomainError):
        latent_heat(-5.0, n)


def test_physical_latent_heat_at_melting_point():
    p = _physical()
    assert physical_latent_heat(p.Te, p) == pytest.approx(p.Le)
    with pytest.raises(DomainError):
        physical_latent_heat(0.0, p)


def test_physical_interface_coefficients():
    ones = PhysicalParams(**{k: 1.0 for k in ("rho", "Te", "dT", "L", "h", "t0", "sigma", "Le", "C0", "kappa0", "k0")})
    assert physical_stefan_coefficients(ones) == {
        "kinetic": 1.0, "capillary": 1.0, "undercooling": 1.0, "quadratic": 2.0,
    }
    thin = physical_stefan_coefficients(_physical(h=0.01))
    thick = physical_stefan_coefficients(_physical(h=0.02))
    assert thick["kinetic"] == pytest.approx(0.5 * thin["kinetic"])
    assert thick["quadratic"] == pytest.approx(0.5 * thin["quadratic"])
    assert thick["undercooling"] == thin["undercooling"]


# -----------------------------
# Energies
# -----------------------------
def test_energy_of_pure_liquid_at_rest():
    grid = Grid.interval(1.0, 16)
    state = FieldState(np.ones(grid.shape), np.zeros(grid.shape), grid)
    h = hat_params(NondimParams(**ONES))
    report = energy_report(state, make_potentials("quartic"), h)
    assert report.E == pytest.approx(1.0)
    assert report.E0 == pytest.approx(0.0, abs=1e-14)
    assert report.E1_star == 1.0
    assert report.S == pytest.approx(1.0)


def test_free_energy_and_entropy_recombine_to_energy():
    h = hat_params(NondimParams(**{**ONES, "eps": 0.1, "theta": 2.0}))
    pot = make_potentials("quartic")
    phi = np.linspace(0.0, 1.0, 11)
    T = np.linspace(-0.5, 0.5, 11)
    g = np.full(11, 0.4)

    e = free_energy_density(phi, g, T, pot, h) + (T + h.theta) * entropy_density(phi, T, pot, h)
    expected = T + h.beta * pot.W(phi) + h.inv_St * pot.nu(phi) + 0.5 * h.beta * h.eps**2 * g
    assert np.allclose(e, expected)
    assert entropy_density(1.0, 0.0, pot, h) == pytest.approx(h.beta * h.gamma + math.log(2.0))


def test_entropy_undefined_below_absolute_zero():
    grid = Grid.interval(1.0, 16)
    state = FieldState(np.ones(grid.shape), np.full(grid.shape, -2.0), grid)
    h = hat_params(NondimParams(**ONES))
    assert math.isnan(energy_report(state, make_potentials("quartic"), h).S)
    with pytest.raises(DomainError):
        entropy_total(state, make_potentials("quartic"), h)


def test_entropy_total_matches_report():
    grid = Grid.interval(1.0, 16)
    x = grid.coords[0]
    state = FieldState(np.cos(math.pi * x), 0.1 * x, grid)
    h = hat_params(NondimParams(**ONES))
    pot = make_potentials("quartic")
    assert entropy_total(state, pot, h) == pytest.approx(energy_report(state, pot, h).S)


# -----------------------------
# Estimate constants
# -----------------------------
def test_estimate_constants_all_ones():
    h = hat_params(NondimParams(**ONES))
    c = estimate_constants(h, SupNorms(W1=1.0, W2=1.0, nu1=1.0, nu2=1.0))
    assert not c.degenerate
    assert c.A0 == pytest.approx(1.0)
    assert c.D0 == pytest.approx(4.0)
    assert c.A == pytest.approx(4.0)
    assert c.B == pytest.approx(0.0)
    assert c.C == pytest.approx(1.0)
    assert c.D == pytest.approx(8.0)


def test_lifting_norms_enter_B_and_C():
    h = hat_params(NondimParams(**ONES))
    sup = SupNorms(W1=1.0, W2=1.0, nu1=1.0, nu2=1.0)
    c = estimate_constants(h, sup, lifting_norms=(2.0, 1.0))
    assert c.B == pytest.approx(4.0)
    # C0 = (mu alpha + delta/theta) H1^2 plus the H1 terms of C
    assert c.C0 == pytest.approx(2.0)
    assert c.C == pytest.approx(2.0 + 1.0 + 1.0 + 1.0)


def test_existence_time_scales_inverse_square():
    h = hat_params(NondimParams(**ONES))
    sup = SupNorms(W1=1.0, W2=1.0, nu1=1.0, nu2=1.0)
    t1 = estimate_constants(h, sup, E1_initial=2.0).t_star_1
    t2 = estimate_constants(h, sup, E1_initial=4.0).t_star_1
    assert t1 == pytest.approx(1.0 / (8.0 * 4.0))
    assert t1 / t2 == pytest.approx(4.0)
    assert existence_time(8.0, 0.0) == math.inf


def test_degenerate_coupling_is_flagged():
    h = hat_params(NondimParams(**ONES))
    c = estimate_constants(h, SupNorms(W1=1.0, W2=1.0, nu1=0.0, nu2=0.0))
    assert c.degenerate
    assert math.isnan(c.iota)
