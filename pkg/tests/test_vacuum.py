from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from plsim.hal import rpm
from plsim.vacuum import (
    ImpellerModel,
    VacuumContainer,
    impeller_delta_p,
    settle_to_bin,
    suction_active,
    transport_step,
)
from plsim.world import SoilSite

MODEL = ImpellerModel()
FULL = rpm(10000)


def site(pile):
    return SoilSite(0, 0.05, 0.0, 0.0, 0.2, loosened_pile_g=pile)


def test_no_pressure_rise_on_axis_or_at_rest():
    assert impeller_delta_p(0.0, FULL, MODEL) == 0.0
    assert impeller_delta_p(0.03, 0.0, MODEL) == 0.0


def test_spot_value_at_ten_thousand_rpm():
    # worked by hand: omega = 1047.19755 rad/s; 0.5 * 1.2 * omega^2 * 0.03^2 = 592.176 Pa
    assert impeller_delta_p(0.03, FULL, MODEL) == pytest.approx(592.1762640653615, rel=1e-12)
    assert impeller_delta_p(0.03, FULL, MODEL) == pytest.approx(592.2, abs=0.05)


def test_rim_pressure_clears_threshold():
    assert impeller_delta_p(0.04, FULL, MODEL) == pytest.approx(1052.757802782865, rel=1e-12)
    assert suction_active(FULL, MODEL)
    assert not suction_active(0.0, MODEL)


def test_threshold_above_rim_pressure_never_activates():
    strict = ImpellerModel(min_suction_delta_p_pa=1100.0)
    assert not any(suction_active(FULL * i / 100, strict) for i in range(101))


def test_quadratic_form_against_exact_rationals():
    rho, omega, r = Fraction("1.2"), Fraction(523), Fraction("0.025")
    exact = rho * omega**2 * r**2 / 2
    assert impeller_delta_p(0.025, 523.0, MODEL) == pytest.approx(float(exact), rel=1e-14)


@given(st.floats(0, 0.04), st.floats(1e-9, 0.04), st.floats(1e-3, 2000))
def test_pressure_monotone_in_radius(r1, gap, omega):
    # gaps below a nanometre would only probe float underflow
    r2 = min(r1 + gap, 0.04)
    if r1 < r2:
        assert impeller_delta_p(r1, omega, MODEL) < impeller_delta_p(r2, omega, MODEL)


@given(st.one_of(st.just(0.0), st.floats(1e-9, 0.04)), st.one_of(st.just(0.0), st.floats(1e-6, 2000)))
def test_pressure_quadratic_in_speed(r, omega):
    base = impeller_delta_p(r, omega, MODEL)
    assert impeller_delta_p(r, 2 * omega, MODEL) == pytest.approx(4 * base, rel=1e-12, abs=0)


def test_impeller_preconditions():
    with pytest.raises(ValueError):
        impeller_delta_p(0.05, FULL, MODEL)
    with pytest.raises(ValueError):
        suction_active(-1.0, MODEL)
    with pytest.raises(ValueError):
        ImpellerModel(outer_radius_m=0.0)


def test_inactive_transport_changes_nothing():
    c, s = VacuumContainer(), site(5.0)
    transport_step(c, s, False, 1.0, 2.0)
    assert (c.collected_mass_g, c.lost_mass_g, s.loosened_pile_g) == (0.0, 0.0, 5.0)


def test_transport_split():
    c, s = VacuumContainer(), site(5.0)
    transport_step(c, s, True, 1.0, 2.0)
    assert c.collected_mass_g == pytest.approx(1.98)
    assert c.lost_mass_g == pytest.approx(0.02)
    assert s.loosened_pile_g == 3.0


def test_transport_clamps_at_pile():
    c, s = VacuumContainer(), site(0.5)
    transport_step(c, s, True, 1.0, 2.0)
    assert c.collected_mass_g + c.lost_mass_g == 0.5
    assert s.loosened_pile_g == 0.0


def test_clogged_filter_moves_nothing():
    c, s = VacuumContainer(clogged=True), site(2.0)
    transport_step(c, s, True, 1.0, 1.0)
    assert s.loosened_pile_g == 2.0


@given(st.floats(0, 50), st.floats(0, 1), st.lists(st.tuples(st.booleans(), st.floats(0, 5)),
                                                   max_size=40))
def test_transport_conserves_mass(pile, eff, schedule):
    c, s = VacuumContainer(filter_efficiency=eff), site(pile)
    for active, q in schedule:
        transport_step(c, s, active, q, 0.1)
    total = s.loosened_pile_g + c.collected_mass_g + c.lost_mass_g
    assert total == pytest.approx(pile, abs=1e-9)
    assert s.loosened_pile_g >= 0.0


def test_settle_to_bin():
    c = VacuumContainer(collected_mass_g=2.5)
    assert settle_to_bin(c, FULL) == 0.0
    assert c.collected_mass_g == 2.5
    assert settle_to_bin(c, 0.0) == 2.5
    assert c.collected_mass_g == 0.0
    assert settle_to_bin(c, 0.0) == 0.0


def test_transport_preconditions():
    with pytest.raises(ValueError):
        transport_step(VacuumContainer(), site(1), True, 1.0, 0.0)
    with pytest.raises(ValueError):
        transport_step(VacuumContainer(), site(1), True, -1.0, 0.1)
    with pytest.raises(ValueError):
        VacuumContainer(filter_efficiency=1.5)
