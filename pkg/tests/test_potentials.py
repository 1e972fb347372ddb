import math

import numpy as np
import pytest

from phaseforge.core.errors import DomainError
from phaseforge.core.potentials import (
    QUARTIC_W,
    Potentials,
    SplicedPolynomial,
    make_potentials,
)


def test_quartic_structural_points():
    pot = make_potentials("quartic")
    assert pot.a == pytest.approx(0.5, abs=1e-10)
    assert pot.b == pytest.approx(0.5, abs=1e-8)
    assert pot.b_multiplicity == 1
    assert pot.phase_neutral
    assert pot.W(0.5) == pytest.approx(1.0 / 16.0)
    assert pot.nu(0.0) == pytest.approx(0.0, abs=1e-14)
    assert pot.nu(1.0) == pytest.approx(1.0)


def test_smootherstep_peak_is_centered():
    pot = make_potentials("smootherstep")
    assert pot.b == pytest.approx(0.5, abs=1e-8)
    assert pot.dnu(0.0) == pytest.approx(0.0, abs=1e-14)
    assert pot.dnu(1.0) == pytest.approx(0.0, abs=1e-12)


def test_caginalp_interpolant_is_not_phase_neutral():
    pot = make_potentials("caginalp")
    assert not pot.phase_neutral
    assert pot.dnu(1.0) == pytest.approx(1.0)


def test_w_scale_multiplies_the_well():
    pot = make_potentials("quartic", w_scale=2.0)
    assert pot.W(0.5) == pytest.approx(2.0 / 16.0)


def test_unknown_potentials_name():
    with pytest.raises(DomainError) as exc:
        make_potentials("sextic")
    assert "Available" in str(exc.value)


def test_splice_is_c3_at_window_edges():
    W = SplicedPolynomial(QUARTIC_W)
    for edge in (W.lo, W.hi):
        for order in range(4):
            inside = W(edge - 1e-9 if edge == W.hi else edge + 1e-9, order)
            outside = W(edge + 1e-9 if edge == W.hi else edge - 1e-9, order)
            assert inside == pytest.approx(outside, abs=1e-5)


def test_splice_is_constant_far_out():
    W = SplicedPolynomial(QUARTIC_W)
    lo, hi = W.support()
    assert W(hi + 3.0) == pytest.approx(W(hi + 1.0))
    assert W(lo - 3.0, 1) == pytest.approx(0.0, abs=1e-9)
    assert np.all(np.isfinite(W(np.linspace(-10, 10, 101), 3)))


def test_sup_norms_are_bounded():
    pot = make_potentials("quartic")
    for value in (pot.sup.W1, pot.sup.W2, pot.sup.nu1, pot.sup.nu2):
        assert math.isfinite(value) and value > 0
    # nu' = 6 phi (1 - phi) peaks at 1.5 inside [0, 1]
    assert pot.sup.nu1 >= 1.5 - 1e-9


def test_validate_rejects_bad_interpolant():
    with pytest.raises(DomainError) as exc:
        Potentials.from_polynomials(QUARTIC_W, (0.0, 2.0))
    assert "nu" in str(exc.value)


def test_flat_interpolant_centers_on_metastable_root():
    pot = Potentials.from_polynomials(QUARTIC_W, (0.0, 0.0), validate=False)
    assert pot.b == pytest.approx(pot.a)
