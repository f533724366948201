import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.constants import c as C

from epskit.errors import CannotCompensateError, DomainError, GeometryError, UncompensatableError
from epskit.materials import dispersionless, get_material, group_index, refractive_index
from epskit.wedges import (WedgeSpec, crystal_leg_delay_ps, design_wedge_pair, residual_delay, solve_thickness,
                           trace_wedge_pair, wedge_exit_angles)

from conftest import IDLER_NM, SIGNAL_NM


def test_index_one_does_not_refract():
    vac = dispersionless(1.0)
    assert wedge_exit_angles(vac, 1000.0, 15.0) == pytest.approx((15.0, 15.0))
    with pytest.raises(CannotCompensateError):
        design_wedge_pair(0.1, WedgeSpec(vac, 15.0), 1000.0)


def test_exit_angles_by_snell(calcite):
    n_o = refractive_index(calcite, "o", IDLER_NM)
    n_e = refractive_index(calcite, "e", IDLER_NM)
    th_o, th_e = wedge_exit_angles(calcite, IDLER_NM, 15.0)
    assert np.sin(np.radians(th_o)) == pytest.approx(n_o * np.sin(np.radians(15.0)), rel=1e-14)
    assert np.sin(np.radians(th_e)) == pytest.approx(n_e * np.sin(np.radians(15.0)), rel=1e-14)
    assert th_o > th_e > 15.0


def test_total_internal_reflection(calcite):
    with pytest.raises(DomainError, match="critical angle"):
        wedge_exit_angles(calcite, IDLER_NM, 80.0)


def test_nothing_to_merge(wedge):
    d = design_wedge_pair(0.0, wedge, SIGNAL_NM)
    assert (d.a_mm, d.b_mm, d.d_mm) == (0.0, 0.0, 0.0)


@pytest.mark.parametrize("walkoff,lam,expected", [(0.145, SIGNAL_NM, 2.75), (0.325, IDLER_NM, 6.6)])
def test_reference_separations(wedge, walkoff, lam, expected):
    d = design_wedge_pair(walkoff, wedge, lam)
    assert d.d_mm == pytest.approx(expected, rel=0.05)
    assert d.d_mm == d.a_mm - d.b_mm * np.tan(wedge.angle)
    assert abs(d.residual_walkoff_um) < 1.0


def test_zero_thickness_zero_gap_leaves_delay(wedge):
    d = design_wedge_pair(0.0, wedge, SIGNAL_NM)
    assert residual_delay(d, 0.7, 0.0) == pytest.approx(0.7, abs=1e-15)


def test_crystal_legs_are_linear_in_thickness(wedge):
    d = design_wedge_pair(0.145, wedge, SIGNAL_NM)
    assert crystal_leg_delay_ps(d, 2.0) == pytest.approx(2 * crystal_leg_delay_ps(d, 1.0), rel=1e-14)


def test_thickness_nothing_to_cancel(wedge):
    sol = solve_thickness(0.0, wedge, 0.0, SIGNAL_NM)
    assert sol.thickness_mm == 0.0


@pytest.mark.parametrize("delay,walkoff,lam", [(0.59, 0.145, SIGNAL_NM), (1.01, 0.325, IDLER_NM)])
def test_thickness_round_trip(wedge, delay, walkoff, lam):
    design = design_wedge_pair(walkoff, wedge, lam)
    sol = solve_thickness(delay, wedge, design.d_mm, lam)
    assert not sol.swapped
    assert abs(residual_delay(design, delay, sol.thickness_mm)) * 1e3 < 1.0
    assert abs(sol.residual_fs) < 1.0
    # closed form is reported, not used; it is much thinner than the travel-time root
    assert 0 < sol.closed_form_mm < sol.thickness_mm


def test_negative_delay_needs_swapped_orientation(wedge):
    design = design_wedge_pair(0.145, wedge, SIGNAL_NM)
    sol = solve_thickness(-0.59, wedge, design.d_mm, SIGNAL_NM)
    assert sol.swapped
    swapped = dataclasses.replace(design, swapped=True)
    assert abs(residual_delay(swapped, -0.59, sol.thickness_mm)) < 1e-3


def test_uncompensatable(wedge):
    with pytest.raises(UncompensatableError, match="bracket ends"):
        solve_thickness(500.0, wedge, 2.0, SIGNAL_NM)


def test_design_with_delay_traces_clean(wedge):
    for walkoff, lam, delay in ((0.145, SIGNAL_NM, 0.59), (0.325, IDLER_NM, 1.01)):
        d = design_wedge_pair(walkoff, wedge, lam, initial_delay_ps=delay)
        assert abs(d.residual_walkoff_um) < 1.0
        assert abs(d.residual_delay_fs) < 1.0
        tr = trace_wedge_pair(d)
        assert tr.exit_angle_rad < 1e-6


def test_pass_through(calcite):
    w = WedgeSpec(calcite, 15.0, thickness_mm=2.0)
    d = dataclasses.replace(design_wedge_pair(0.0, WedgeSpec(calcite, 15.0), SIGNAL_NM), wedge=w)
    tr = trace_wedge_pair(d)
    assert tr.separation_mm == pytest.approx(0.0, abs=1e-12)
    ngo, nge = group_index(calcite, "o", SIGNAL_NM), group_index(calcite, "e", SIGNAL_NM)
    assert tr.delay_ps == pytest.approx(2.0e-3 * (ngo - nge) / C * 1e12, rel=1e-9)


def test_random_designs_merge_under_trace():
    rng = np.random.default_rng(11)
    calcite = get_material("calcite")
    worst = 0.0
    for _ in range(200):
        w = WedgeSpec(calcite, float(rng.uniform(5, 25)))
        d = design_wedge_pair(float(rng.uniform(0, 0.5)), w, float(rng.choice([SIGNAL_NM, IDLER_NM])))
        worst = max(worst, abs(trace_wedge_pair(d).separation_mm))
    assert worst * 1e3 < 1.0


def test_gap_changes_delay_monotonically(calcite):
    w = WedgeSpec(calcite, 15.0, thickness_mm=1.0)
    d = design_wedge_pair(0.325, w, IDLER_NM)
    delays = [trace_wedge_pair(d, separation_mm=s).delay_ps for s in np.linspace(0.0, 12.0, 25)]
    steps = np.diff(delays)
    assert np.all(steps > 0) or np.all(steps < 0)


def test_aperture_miss(calcite):
    d = design_wedge_pair(0.325, WedgeSpec(calcite, 15.0, aperture_mm=0.1), IDLER_NM)
    with pytest.raises(GeometryError, match="aperture"):
        trace_wedge_pair(d, separation_mm=d.d_mm + 5.0)


def test_spec_invariants(calcite):
    with pytest.raises(ValueError):
        WedgeSpec(calcite, 0.0)
    with pytest.raises(ValueError):
        WedgeSpec(calcite, 15.0, thickness_mm=-1.0)
    with pytest.raises(ValueError):
        design_wedge_pair(-0.1, WedgeSpec(calcite, 15.0), SIGNAL_NM)


@settings(max_examples=40, deadline=None)
@given(walkoff=st.floats(0.0, 0.5), phi=st.floats(5.0, 25.0))
def test_separation_is_linear_in_walkoff(walkoff, phi):
    w = WedgeSpec(get_material("calcite"), phi)
    one = design_wedge_pair(walkoff, w, IDLER_NM)
    two = design_wedge_pair(2 * walkoff, w, IDLER_NM)
    assert two.d_mm == pytest.approx(2 * one.d_mm, rel=1e-12, abs=1e-15)
