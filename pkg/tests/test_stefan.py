import math
from types import SimpleNamespace

import numpy as np
import pytest
from scipy.special import expit

from phaseforge.core.errors import BracketError, DomainError, OrientationError
from phaseforge.core.grid import FieldState, Grid
from phaseforge.core.model import SharpScalings
from phaseforge.core.pde import BoundarySpec
from phaseforge.core.potentials import make_potentials
from phaseforge.core.stefan import (
    SWEEP_COLUMNS,
    InterfaceMeasurement,
    SweepScenario,
    eps_sweep,
    fitted_order,
    flux_jump_measure,
    front_comparison,
    interface_average,
    interface_kinematics,
    locate_interface,
    orientation_sign,
    solve_front_speed,
    stefan_compare,
    stefan_reference_1d,
    stefan_residuals,
)

BARS = SharpScalings(alpha_bar=1.0, beta_bar=1.0, gamma_bar=1.0, delta_bar=1.0, eps=0.05)
SIGMA0 = math.sqrt(2.0) / 6.0


def _measurement(**overrides):
    values = dict(position=0.5, v=0.3, H=0.0, jump=-0.2, T_interface=-0.05, T_weighted=-0.04)
    values.update(overrides)
    return InterfaceMeasurement(**values)


def _front_state(position, eps, cells=400, T=None):
    grid = Grid.interval(1.0, cells)
    x = grid.coords[0]
    phi = expit(math.sqrt(2.0) * (x - position) / eps)
    return FieldState(phi, np.zeros_like(x) if T is None else T(x), grid)


# -----------------------------
# Interface location
# -----------------------------
def test_locate_interface_on_analytic_profile():
    state = _front_state(0.3, 0.05)
    geom = locate_interface(state, 0.5)
    dx = state.grid.spacing[0]
    assert len(geom.positions) == 1
    assert abs(geom.positions[0] - 0.3) < dx**2


def test_no_crossing_gives_empty_geometry():
    grid = Grid.interval(1.0, 16)
    state = FieldState(np.ones(grid.shape), np.zeros(grid.shape), grid)
    assert locate_interface(state, 0.5).empty


def test_kinematics_of_a_uniformly_moving_front():
    times = np.linspace(0.0, 1.0, 11)
    v, H = interface_kinematics(0.2 + 0.1 * times, times)
    assert np.allclose(v, 0.1)
    assert np.allclose(H, 0.0)


def test_kinematics_of_a_circle():
    times = np.linspace(0.0, 1.0, 5)
    radii = np.full(5, 0.25)
    v, H = interface_kinematics(radii, times, frame=-1, dim=2, radial=True)
    assert np.allclose(H, 4.0)
    assert np.allclose(v, 0.0)
    _, H_out = interface_kinematics(radii, times, frame=1, dim=2, radial=True)
    assert np.allclose(H_out, -4.0)


def test_kinematics_need_three_samples():
    with pytest.raises(DomainError):
        interface_kinematics([0.1, 0.2], [0.0, 1.0])


def test_orientation_points_to_the_liquid():
    state = _front_state(0.5, 0.02)
    assert orientation_sign(state, 0.5, 0.02) == 1
    assert orientation_sign(state, 0.5, 0.02, frame=-1) == -1


# -----------------------------
# Flux jump and temperatures
# -----------------------------
def test_flux_jump_of_piecewise_linear_temperature():
    def T(x):
        d = x - 0.5
        return np.where(d > 0, 0.1 + 2.0 * d, 0.1 - 1.0 * d)

    state = _front_state(0.5, 0.02, T=T)
    fj = flux_jump_measure(state, 0.5, 0.02)
    assert fj.jump == pytest.approx(3.0, abs=1e-9)
    assert fj.T_gamma == pytest.approx(0.1, abs=1e-9)
    assert not fj.flagged


def test_flux_jump_is_frame_invariant():
    def T(x):
        d = x - 0.5
        return np.where(d > 0, 2.0 * d, -1.0 * d)

    state = _front_state(0.5, 0.02, T=T)
    plus = flux_jump_measure(state, 0.5, 0.02, frame=1).jump
    minus = flux_jump_measure(state, 0.5, 0.02, frame=-1).jump
    assert plus == pytest.approx(minus, abs=1e-9)


def test_fitting_window_outside_domain():
    state = _front_state(0.05, 0.02)
    with pytest.raises(DomainError):
        flux_jump_measure(state, 0.05, 0.02)


def test_interface_average_of_constant_temperature():
    profile = SimpleNamespace(z_grid=np.linspace(-20, 20, 401),
                              weight=np.exp(-np.linspace(-20, 20, 401) ** 2))
    assert interface_average(np.full(401, -0.3), profile) == pytest.approx(-0.3)


# -----------------------------
# Residuals
# -----------------------------
def test_quadratic_jump_term_is_isolated():
    profile = SimpleNamespace(orientation=1, sigma0=SIGMA0)
    for v in (0.0, 0.3, -1.7):
        res = stefan_residuals(_measurement(v=v), profile, BARS, 1.0)
        assert res.jump_defect - res.linear_jump_defect == pytest.approx(
            2.0 * BARS.alpha_bar * SIGMA0 * v**2, abs=1e-12
        )


def test_consistent_data_has_zero_gibbs_thomson_defect():
    profile = SimpleNamespace(orientation=1, sigma0=SIGMA0)
    v, H = 0.3, 2.0
    T = SIGMA0 * (-BARS.alpha_bar * v + H) / BARS.gamma_bar
    res = stefan_residuals(_measurement(v=v, H=H, T_weighted=T), profile, BARS, 1.0)
    assert res.gibbs_thomson_defect == pytest.approx(0.0, abs=1e-14)


def test_orientation_mismatch():
    profile = SimpleNamespace(orientation=1, sigma0=SIGMA0)
    with pytest.raises(OrientationError):
        stefan_residuals(_measurement(N_orientation=-1), profile, BARS, 1.0)


# -----------------------------
# Front-tracking reference
# -----------------------------
def test_front_speed_nearest_zero():
    assert solve_front_speed(lambda v: (v - 0.3) * (v + 2.0), 5.0) == pytest.approx(0.3, abs=1e-12)
    assert solve_front_speed(lambda v: (v + 0.4) * (v - 3.0), 5.0) == pytest.approx(-0.4, abs=1e-12)


def test_front_speed_without_root():
    with pytest.raises(BracketError) as exc:
        solve_front_speed(lambda v: v * v + 1.0, 5.0)
    assert "vmax" in exc.value.diagnostics


def test_front_at_equilibrium_stays_put():
    bc = BoundarySpec(q_b=0.0, T_b=0.0, gamma_faces=("left",))
    traj = stefan_reference_1d(BARS, 1.0, SIGMA0, bc, 1.0, 0.5, 0.01, cells=100)
    assert np.allclose(traj.positions, 0.5)
    assert np.allclose(traj.velocities, 0.0)


def test_undercooled_liquid_solidifies():
    bc = BoundarySpec(q_b=0.0, T_b=-0.1, gamma_faces=("left",))
    traj = stefan_reference_1d(BARS, 1.0, SIGMA0, bc, 1.0, 0.5, 0.01, T_init=-0.1, cells=100)
    assert traj.positions[-1] > traj.positions[0]
    assert np.all(traj.velocities[1:] > 0.0)
    linear = stefan_reference_1d(BARS, 1.0, SIGMA0, bc, 1.0, 0.5, 0.01, T_init=-0.1,
                                 cells=100, quadratic=False)
    assert linear.positions[-1] != traj.positions[-1]


def _undercooled_front(undercooling, cells=100, t_end=0.02, quadratic=True):
    bc = BoundarySpec(q_b=0.0, T_b=-undercooling, gamma_faces=("left",))
    return stefan_reference_1d(BARS, 1.0, SIGMA0, bc, 1.0, 0.5, t_end, T_init=-undercooling,
                               cells=cells, quadratic=quadratic)


def test_reference_front_converges_under_refinement():
    reference = _undercooled_front(0.1, cells=640, t_end=0.05).positions[-1]
    errors = [abs(_undercooled_front(0.1, cells=n, t_end=0.05).positions[-1] - reference)
              for n in (40, 160)]
    assert errors[1] < errors[0] / 2.5


def test_quadratic_term_shifts_the_front_by_speed_squared():
    gaps = []
    for undercooling in (0.005, 0.01):
        full = _undercooled_front(undercooling).positions[-1]
        linear = _undercooled_front(undercooling, quadratic=False).positions[-1]
        # the quadratic term slows the front
        assert linear > full
        gaps.append(linear - full)
    assert 3.0 < gaps[1] / gaps[0] < 5.0


def test_front_comparison_in_interface_widths():
    t = np.linspace(0.0, 1.0, 11)
    assert front_comparison(t, 0.5 + 0.1 * t, t, 0.5 + 0.1 * t, 0.01) == pytest.approx(0.0)
    assert front_comparison(t, 0.52 + 0.1 * t, t, 0.5 + 0.1 * t, 0.01) == pytest.approx(2.0)


# -----------------------------
# Sweeps
# -----------------------------
def test_fitted_order_of_power_law():
    eps = np.array([0.08, 0.04, 0.02, 0.01])
    assert fitted_order(eps, 3.0 * eps) == pytest.approx(1.0)
    assert math.isnan(fitted_order([0.1], [1.0]))


def test_scenario_name_is_checked():
    with pytest.raises(DomainError):
        SweepScenario(name="spiral")


def test_eps_list_must_decrease():
    with pytest.raises(DomainError):
        eps_sweep(BARS, 1.0, [0.02, 0.04], make_potentials("quartic"))


def test_single_eps_sweep_has_one_row():
    scenario = SweepScenario(t_end=0.02)
    report = eps_sweep(BARS, 1.0, [0.08], make_potentials("quartic"), scenario)
    assert len(report.rows) == 1
    row = report.rows[0]
    assert list(row) == list(SWEEP_COLUMNS)
    assert all(math.isfinite(row[c]) for c in SWEEP_COLUMNS)
    assert row["H"] == 0.0
    assert math.isnan(report.gt_order)
    assert list(report.to_frame().columns) == list(SWEEP_COLUMNS)


# -----------------------------
# Sharp-interface convergence
# -----------------------------
UNIT_BARS = SharpScalings(alpha_bar=1.0, beta_bar=1.0, gamma_bar=1.0, delta_bar=1.0, eps=0.08)


@pytest.fixture(scope="module")
def planar_sweep():
    return eps_sweep(UNIT_BARS, 1.0, [0.08, 0.04, 0.02, 0.01], make_potentials("quartic"))


def test_planar_sweep_defects_decay(planar_sweep):
    assert planar_sweep.notes == []
    assert planar_sweep.monotone("gt_defect")
    assert planar_sweep.monotone("jump_defect")
    assert planar_sweep.gt_order >= 0.8
    assert planar_sweep.jump_order >= 0.8


def test_full_jump_law_beats_linear_law(planar_sweep):
    for row in planar_sweep.rows:
        gap = row["jump_defect"] - row["linear_jump_defect"]
        assert gap == pytest.approx(2.0 * SIGMA0 * row["v"] ** 2, rel=1e-6)
    finest = planar_sweep.rows[-1]
    assert finest["v"] > 0.0
    assert abs(finest["jump_defect"]) < abs(finest["linear_jump_defect"])


def test_phase_field_front_tracks_reference():
    run, ref, deviation = stefan_compare(
        UNIT_BARS, 1.0, 0.01, make_potentials("quartic"), SweepScenario(t_end=1.0),
    )
    assert not run.truncated
    assert ref.times[-1] == pytest.approx(1.0)
    assert ref.positions[-1] > ref.positions[0]
    assert deviation <= 5.0
