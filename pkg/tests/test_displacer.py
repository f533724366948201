import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from epskit.displacer import (DisplacerSpec, displacement, refraction_angle, spatial_walkoff, temporal_walkoff,
                              travel_times, walkoff_angle, walkoff_report)
from epskit.materials import dispersionless, get_material, refractive_index

from conftest import IDLER_NM, PUMP_NM, SIGNAL_NM
from oracles import displacer_by_ray_trace, random_displacer_cases


def test_isotropic_and_axis_limits():
    assert walkoff_angle(1.6, 1.6, np.radians(30)) == 0
    assert walkoff_angle(1.65, 1.5, 0.0) == 0
    assert abs(walkoff_angle(1.65, 1.5, np.pi / 2)) < 1e-15


def test_bbo_pump_angle_by_hand(bbo, displacer):
    n_o = refractive_index(bbo, "o", PUMP_NM)
    n_e = refractive_index(bbo, "e", PUMP_NM)
    r = (n_o / n_e) ** 2
    t = np.tan(np.radians(45))
    expected = np.arctan((1 - r) * t / (1 + r * t * t))
    assert refraction_angle(displacer, PUMP_NM) == pytest.approx(expected, rel=1e-14)
    assert expected < 0


def test_walkoff_angle_peaks_near_45(bbo):
    n_o = refractive_index(bbo, "o", PUMP_NM)
    n_e = refractive_index(bbo, "e", PUMP_NM)
    theta = np.radians(np.arange(0, 91, 1.0))
    mag = np.abs(walkoff_angle(n_o, n_e, theta))
    assert 40 <= np.degrees(theta[np.argmax(mag)]) <= 50
    assert mag[0] == 0 and mag[-1] < 1e-15


def test_zero_walkoff_at_pump(displacer):
    assert spatial_walkoff(displacer, PUMP_NM, PUMP_NM) == 0
    assert temporal_walkoff(displacer, PUMP_NM, PUMP_NM) == pytest.approx(0, abs=1e-15)


def test_reference_walkoffs(displacer):
    rep = walkoff_report(displacer, PUMP_NM, (SIGNAL_NM, IDLER_NM))
    s, i = rep.entries
    assert s.spatial_mm == pytest.approx(0.10, rel=0.25)
    assert i.spatial_mm == pytest.approx(0.17, rel=0.25)
    assert s.temporal_ps == pytest.approx(0.65, rel=0.25)
    assert i.temporal_ps == pytest.approx(1.06, rel=0.25)


def test_group_model_is_available(bbo):
    d = DisplacerSpec(bbo, 39.4, 45.0, "group")
    # the ellipse group index lengthens the e-legs; delays grow by roughly a third
    assert temporal_walkoff(d, PUMP_NM, SIGNAL_NM) > temporal_walkoff(DisplacerSpec(bbo, 39.4), PUMP_NM, SIGNAL_NM)


def test_dispersionless_isotropic_has_no_delay():
    d = DisplacerSpec(dispersionless(1.6), 20.0)
    assert temporal_walkoff(d, PUMP_NM, IDLER_NM) == pytest.approx(0, abs=1e-15)
    assert spatial_walkoff(d, PUMP_NM, IDLER_NM) == 0


def test_reverse_negates_delay(displacer):
    for lam in (SIGNAL_NM, IDLER_NM):
        assert temporal_walkoff(displacer, PUMP_NM, lam, reverse=True) == -temporal_walkoff(displacer, PUMP_NM, lam)


def test_monotone_in_detuning(displacer):
    lam = np.linspace(600.0, 1600.0, 50)
    dD = np.array([spatial_walkoff(displacer, PUMP_NM, x) for x in lam])
    dT = np.abs([temporal_walkoff(displacer, PUMP_NM, x) for x in lam])
    assert np.all(np.diff(dD) > 0)
    assert np.all(np.diff(dT) > 0)


def test_spec_invariants(bbo):
    with pytest.raises(ValueError):
        DisplacerSpec(bbo, -1.0)
    with pytest.raises(ValueError):
        DisplacerSpec(bbo, 10.0, 95.0)
    with pytest.raises(ValueError):
        DisplacerSpec(bbo, 10.0, 45.0, "energy")


def test_ray_trace_oracle_random_cases():
    worst_mm = worst_ps = 0.0
    for d, pump, lam in random_displacer_cases():
        sep, delay = displacer_by_ray_trace(d, pump, lam)
        worst_mm = max(worst_mm, abs(sep - spatial_walkoff(d, pump, lam)))
        worst_ps = max(worst_ps, abs(delay - temporal_walkoff(d, pump, lam)))
    assert worst_mm < 1e-3
    assert worst_ps < 1e-3


def test_travel_times_by_hand(displacer, bbo):
    L = displacer.length_mm * 1e-3
    c = 299792458.0
    th_p = refraction_angle(displacer, PUMP_NM)
    th_s = refraction_angle(displacer, SIGNAL_NM)
    t_oe = (L * refractive_index(bbo, "o", PUMP_NM) + L * refractive_index(bbo, "e", SIGNAL_NM) / np.cos(th_s)) / c
    t_eo = (L * refractive_index(bbo, "e", PUMP_NM) / np.cos(th_p) + L * refractive_index(bbo, "o", SIGNAL_NM)) / c
    a, b = travel_times(displacer, PUMP_NM, SIGNAL_NM)
    assert a == pytest.approx(t_oe * 1e12, rel=1e-14)
    assert b == pytest.approx(t_eo * 1e12, rel=1e-14)


@settings(max_examples=40, deadline=None)
@given(theta=st.floats(1.0, 89.0), L=st.floats(1.0, 60.0))
def test_displacement_scales_with_length(theta, L):
    bbo = get_material("alpha-BBO")
    one = DisplacerSpec(bbo, L, theta)
    two = DisplacerSpec(bbo, 2 * L, theta)
    assert displacement(two, SIGNAL_NM) == pytest.approx(2 * displacement(one, SIGNAL_NM), rel=1e-12)
    assert spatial_walkoff(two, PUMP_NM, IDLER_NM) == pytest.approx(2 * spatial_walkoff(one, PUMP_NM, IDLER_NM),
                                                                     rel=1e-9, abs=1e-15)
