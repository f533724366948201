import dataclasses
import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.constants import c as C
from scipy.optimize import brentq

from epskit.errors import DomainError, GroupVelocityMatchedError, NotPhaseMatchedError
from epskit.materials import dispersionless, refractive_index
from epskit.phasematch import (CrystalSpec, PumpSpec, idler_wavelength, phase_matching_temperature, qpm_mismatch,
                               solve_signal_idler, spectral_temporal_widths)

from conftest import IDLER_NM, PUMP_NM, SIGNAL_NM


def k_of(crystal, omega):
    lam_nm = 2 * np.pi * C / omega * 1e9
    return refractive_index(crystal.material, "e", lam_nm, crystal.temperature_c) * omega / C


def omega_of(lam_nm):
    return 2 * np.pi * C / (lam_nm * 1e-9)


def test_reference_wavelengths(solution):
    assert solution.signal_nm == pytest.approx(SIGNAL_NM, abs=10)
    assert solution.idler_nm == pytest.approx(IDLER_NM, abs=40)


def test_energy_conservation_and_residual(pump, crystal, solution):
    rel = abs(1 / solution.signal_nm + 1 / solution.idler_nm - 1 / PUMP_NM) * PUMP_NM
    assert rel < 1e-12
    grating = 2 * np.pi / (crystal.poling_period_at() * 1e-6)
    assert abs(qpm_mismatch(solution.signal_nm, pump, crystal)) < 1e-6 * grating
    assert abs(solution.residual_per_m) < 1e-3 * grating


def test_solver_is_fast_and_deterministic(pump, crystal, solution):
    t0 = time.perf_counter()
    again = solve_signal_idler(pump, crystal)
    assert time.perf_counter() - t0 < 1.0
    assert again == solution


def test_degenerate_probe_equals_direct_sum(pump, crystal):
    lam = 2 * PUMP_NM
    T = crystal.temperature_c
    n = lambda l: refractive_index(crystal.material, "e", l, T)  # noqa: E731
    direct = (2 * np.pi * n(PUMP_NM) / (PUMP_NM * 1e-9) - 2 * 2 * np.pi * n(lam) / (lam * 1e-9)
              - 2 * np.pi / (crystal.poling_period_at() * 1e-6))
    assert qpm_mismatch(lam, pump, crystal) == pytest.approx(direct, rel=1e-12)


def test_idler_outside_validity_is_rejected(pump, ppln):
    narrow = dataclasses.replace(ppln.sellmeier_e, validity_um=(0.5, 2.5))
    material = dataclasses.replace(ppln, sellmeier_e=narrow)
    crystal = CrystalSpec(material, 10.0, 7.1, 100.0)
    signal = 1 / (1 / PUMP_NM - 1 / 3000.0)
    assert idler_wavelength(signal, PUMP_NM) == pytest.approx(3000.0)
    with pytest.raises(DomainError, match="2500"):
        qpm_mismatch(signal, pump, crystal)


def test_signal_must_exceed_pump(pump, crystal):
    with pytest.raises(DomainError):
        qpm_mismatch(PUMP_NM, pump, crystal)


def test_not_phase_matched_reports_extrema(pump, ppln):
    crystal = CrystalSpec(ppln, 10.0, 30.0, 100.0)
    with pytest.raises(NotPhaseMatchedError, match="mismatch ranges"):
        solve_signal_idler(pump, crystal)


def test_phase_matching_temperature_round_trip(pump, crystal):
    t = phase_matching_temperature(SIGNAL_NM, pump, crystal)
    assert 20 < t < 200
    sol = solve_signal_idler(pump, crystal.at_temperature(t))
    assert sol.signal_nm == pytest.approx(SIGNAL_NM, abs=1e-3)


def test_continuity_over_temperature(pump, crystal):
    temps = np.arange(90.0, 110.01, 0.5)
    lam = np.array([solve_signal_idler(pump, crystal.at_temperature(t)).signal_nm for t in temps])
    steps = np.diff(lam)
    assert np.all(steps < 0) or np.all(steps > 0)
    assert np.max(np.abs(steps)) < 5.0


def test_reference_widths(pump, crystal, solution):
    w = spectral_temporal_widths(solution, pump, crystal)
    assert w.tau_signal_ps == pytest.approx(2.68, rel=0.15)
    assert w.tau_idler_ps == pytest.approx(2.61, rel=0.15)
    assert w.tau_signal_ps / w.tau_idler_ps == pytest.approx(2.68 / 2.61, rel=0.01)


def test_default_widths_against_exact_k_oracle(pump, crystal, solution):
    # both down-converted fields shift by the same delta while the pump shifts by its bandwidth;
    # solve the full (not linearised) momentum condition with exact wave vectors
    ws, wi, wp = omega_of(solution.signal_nm), omega_of(solution.idler_nm), omega_of(PUMP_NM)
    dwp = pump.bandwidth_rad_s
    target = 2 * np.pi / (crystal.length_mm * 1e-3)

    def f(delta):
        return ((k_of(crystal, wp + dwp) - k_of(crystal, wp)) - (k_of(crystal, ws + delta) - k_of(crystal, ws))
                - (k_of(crystal, wi + delta) - k_of(crystal, wi)) - target)

    delta = brentq(f, -5e12, 5e12, xtol=1e3)
    w = spectral_temporal_widths(solution, pump, crystal, "pump-bandwidth")
    assert w.dw_signal == pytest.approx(abs(delta), rel=0.05)
    assert w.dw_idler == pytest.approx(abs(dwp - delta), rel=0.05)


def test_energy_widths_against_grid_scan(crystal, solution):
    pump = PumpSpec(PUMP_NM, 0.0)
    w = spectral_temporal_widths(solution, pump, crystal, "energy")
    grid = solution.signal_nm + np.linspace(-3.0, 3.0, 60001)
    dk = qpm_mismatch(grid, pump, crystal) - solution.residual_per_m
    target = 2 * np.pi / (crystal.length_mm * 1e-3)
    i = np.flatnonzero(np.diff(np.sign(np.abs(dk) - target)))
    # nearest crossing of |dk L| = 2 pi on either side of the root
    lam_edges = grid[i]
    dw = np.abs(omega_of(lam_edges) - omega_of(solution.signal_nm))
    assert np.min(dw) == pytest.approx(w.dw_signal, rel=0.05)


def test_doubling_length_halves_widths(crystal, solution):
    pump = PumpSpec(PUMP_NM, 0.0)
    long = dataclasses.replace(crystal, length_mm=2 * crystal.length_mm)
    for conv in ("pump-bandwidth", "energy"):
        a = spectral_temporal_widths(solution, pump, crystal, conv)
        b = spectral_temporal_widths(solution, pump, long, conv)
        assert b.dw_signal == pytest.approx(a.dw_signal / 2, rel=1e-12)
        assert b.dw_idler == pytest.approx(a.dw_idler / 2, rel=1e-12)


def test_group_velocity_matched_is_rejected():
    flat = CrystalSpec(dispersionless(2.2), 10.0, 7.1, 20.0)
    sol = type("S", (), {"signal_nm": 1000.0, "idler_nm": 1098.7, "temperature_c": 20.0})()
    with pytest.raises(GroupVelocityMatchedError):
        spectral_temporal_widths(sol, PumpSpec(PUMP_NM, 0.0), flat, "energy")


def test_unknown_convention(pump, crystal, solution):
    with pytest.raises(ValueError):
        spectral_temporal_widths(solution, pump, crystal, "field")


def test_pump_and_crystal_invariants(ppln):
    with pytest.raises(ValueError):
        PumpSpec(-1.0)
    with pytest.raises(ValueError):
        PumpSpec(500.0, -0.1)
    with pytest.raises(ValueError):
        CrystalSpec(ppln, 0.0, 7.1, 20.0)


@settings(max_examples=25, deadline=None)
@given(T=st.floats(60.0, 160.0), period=st.floats(6.9, 7.3))
def test_every_solution_conserves_energy(T, period, ppln):
    pump = PumpSpec(PUMP_NM)
    crystal = CrystalSpec(ppln, 10.0, period, T)
    try:
        sol = solve_signal_idler(pump, crystal)
    except NotPhaseMatchedError:
        return
    assert PUMP_NM < sol.signal_nm <= 2 * PUMP_NM
    assert abs(1 / sol.signal_nm + 1 / sol.idler_nm - 1 / PUMP_NM) * PUMP_NM < 1e-12
