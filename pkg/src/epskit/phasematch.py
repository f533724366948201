"""Type-0 quasi-phase matching: signal/idler wavelengths and their bandwidths.

Conventions
-----------
Wave vectors are ``k = 2 pi n / lambda`` on the extraordinary axis of the poled
crystal. The poling period follows the crystal's a-axis (ordinary record)
expansion, ``Lambda(T) = Lambda0 * (1 + alpha_a * (T - T_ref))``.

Spectral widths use the linearised momentum condition in the form::

    k_p' dw_p - (k_s' + k_i') dw_s = 2 pi / L

with ``dw_i = dw_p - dw_s`` from energy conservation (``convention="pump-bandwidth"``).
``tau = 1 / |dw|`` is the 1/e half-width of the temporal intensity of a
transform-limited Gaussian whose spectral field amplitude is
``exp(-d_omega^2 / (2 dw^2))``. The strictly energy-conserving linearisation,
``(k_p' - k_i') dw_p + (k_i' - k_s') dw_s = 2 pi / L``, is available as
``convention="energy"``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.constants import c as C_LIGHT
from scipy.optimize import brentq

from .errors import DomainError, GroupVelocityMatchedError, NotPhaseMatchedError
from .materials import MaterialRecord, group_index, refractive_index


@dataclass(frozen=True)
class PumpSpec:
    wavelength_nm: float
    bandwidth_nm: float = 0.0
    power_w: float = 0.0

    def __post_init__(self):
        if not self.wavelength_nm > 0:
            raise ValueError("pump wavelength must be positive")
        if self.bandwidth_nm < 0 or self.power_w < 0:
            raise ValueError("pump bandwidth and power must be non-negative")

    @property
    def bandwidth_rad_s(self):
        lam = self.wavelength_nm * 1e-9
        return 2 * np.pi * C_LIGHT * self.bandwidth_nm * 1e-9 / lam**2


@dataclass(frozen=True)
class CrystalSpec:
    material: MaterialRecord
    length_mm: float
    poling_period_um: float
    temperature_c: float
    poling_reference_c: float = 25.0
    axis: str = "e"

    def __post_init__(self):
        if not (self.length_mm > 0 and self.poling_period_um > 0):
            raise ValueError("crystal length and poling period must be positive")

    def poling_period_at(self, temperature_c=None):
        """Thermally expanded poling period in micrometres."""
        t = self.temperature_c if temperature_c is None else temperature_c
        alpha = self.material.expansion_alpha("o")
        return self.poling_period_um * (1 + alpha * (t - self.poling_reference_c))

    def at_temperature(self, temperature_c):
        return CrystalSpec(self.material, self.length_mm, self.poling_period_um,
                           temperature_c, self.poling_reference_c, self.axis)


@dataclass(frozen=True)
class PhaseMatchSolution:
    signal_nm: float
    idler_nm: float
    residual_per_m: float
    temperature_c: float


@dataclass(frozen=True)
class SpectralWidths:
    dw_signal: float
    dw_idler: float
    tau_signal_ps: float
    tau_idler_ps: float
    convention: str


def idler_wavelength(signal_nm, pump_nm):
    """Energy conservation: 1/lambda_i = 1/lambda_p - 1/lambda_s."""
    signal_nm = np.asarray(signal_nm, dtype=float)
    return 1.0 / (1.0 / pump_nm - 1.0 / signal_nm)


def _k(crystal, wavelength_nm, temperature_c):
    n = refractive_index(crystal.material, crystal.axis, wavelength_nm, temperature_c)
    return 2 * np.pi * n / (np.asarray(wavelength_nm) * 1e-9)


def qpm_mismatch(signal_nm, pump, crystal):
    """k_p - k_s - k_i - 2 pi / Lambda(T), in 1/m.

    Vectorised over ``signal_nm``. The idler follows from energy conservation;
    a signal at or below the pump wavelength, or an idler outside the material's
    validity interval, raises DomainError.
    """
    signal_nm = np.asarray(signal_nm, dtype=float)
    if np.any(signal_nm <= pump.wavelength_nm):
        raise DomainError("signal wavelength must exceed the pump wavelength", module="phasematch")
    idler_nm = idler_wavelength(signal_nm, pump.wavelength_nm)
    t = crystal.temperature_c
    grating = 2 * np.pi / (crystal.poling_period_at(t) * 1e-6)
    dk = _k(crystal, pump.wavelength_nm, t) - _k(crystal, signal_nm, t) - _k(crystal, idler_nm, t) - grating
    return float(dk) if dk.ndim == 0 else dk


def _signal_scan_range(pump, crystal):
    lo_um, hi_um = crystal.material.sellmeier(crystal.axis).validity_um
    lp = pump.wavelength_nm
    if not lo_um * 1e3 <= lp <= hi_um * 1e3:
        raise DomainError(f"pump {lp} nm outside material validity", module="phasematch")
    hi = min(2 * lp, hi_um * 1e3)
    lo = lp * (1 + 1e-6)
    if np.isfinite(hi_um):
        lo = max(lo, float(idler_wavelength(hi_um * 1e3, lp)) * (1 + 1e-9))
    return lo, hi


def solve_signal_idler(pump, crystal, scan_step_nm=0.1, xtol_nm=1e-9):
    """Bracket and refine the quasi-phase-matched signal (the shorter wavelength).

    The signal range from the idler's validity edge up to degeneracy is scanned
    at ``scan_step_nm``; the first sign change is refined with Brent's method.
    """
    lo, hi = _signal_scan_range(pump, crystal)
    grid = np.arange(lo, hi, scan_step_nm)
    grid = np.append(grid, hi)
    dk = qpm_mismatch(grid, pump, crystal)
    tol = 1e-6 * 2 * np.pi / (crystal.poling_period_at() * 1e-6)

    exact = np.flatnonzero(dk == 0)
    change = np.flatnonzero(np.sign(dk[:-1]) * np.sign(dk[1:]) < 0)
    if exact.size:
        signal = float(grid[exact[0]])
    elif change.size:
        i = change[0]
        signal = brentq(lambda x: qpm_mismatch(x, pump, crystal), grid[i], grid[i + 1],
                        xtol=xtol_nm, rtol=4 * np.finfo(float).eps, maxiter=200)
    else:
        raise NotPhaseMatchedError(
            f"no phase-matching bracket at {crystal.temperature_c:g} C over signal "
            f"[{lo:.1f}, {hi:.1f}] nm; mismatch ranges {dk.min():.4g} .. {dk.max():.4g} 1/m"
        )
    residual = qpm_mismatch(signal, pump, crystal)
    if abs(residual) > tol:
        raise NotPhaseMatchedError(f"root refinement stalled at residual {residual:.3g} 1/m")
    return PhaseMatchSolution(
        signal_nm=signal,
        idler_nm=float(idler_wavelength(signal, pump.wavelength_nm)),
        residual_per_m=residual,
        temperature_c=crystal.temperature_c,
    )


def phase_matching_temperature(target_signal_nm, pump, crystal, t_range_c=(20.0, 200.0),
                               step_c=5.0, scan_step_nm=0.1):
    """Crystal temperature at which the solved signal equals ``target_signal_nm``."""

    def offset(t):
        return solve_signal_idler(pump, crystal.at_temperature(t), scan_step_nm).signal_nm - target_signal_nm

    temps = np.arange(t_range_c[0], t_range_c[1] + step_c / 2, step_c)
    values = []
    for t in temps:
        try:
            values.append(offset(t))
        except NotPhaseMatchedError:
            values.append(np.nan)
    values = np.asarray(values)
    for i in range(len(temps) - 1):
        a, b = values[i], values[i + 1]
        if np.isfinite(a) and np.isfinite(b) and a * b <= 0:
            return brentq(offset, temps[i], temps[i + 1], xtol=1e-6)
    raise NotPhaseMatchedError(
        f"signal {target_signal_nm} nm is not reached between {t_range_c[0]} and {t_range_c[1]} C"
    )


def _k_prime(crystal, wavelength_nm):
    return group_index(crystal.material, crystal.axis, wavelength_nm, crystal.temperature_c) / C_LIGHT


def spectral_temporal_widths(solution, pump, crystal, convention="pump-bandwidth"):
    """Signal/idler spectral widths (rad/s) and 1/e temporal widths (ps)."""
    crystal = crystal.at_temperature(solution.temperature_c)
    kp = _k_prime(crystal, pump.wavelength_nm)
    ks = _k_prime(crystal, solution.signal_nm)
    ki = _k_prime(crystal, solution.idler_nm)
    dwp = pump.bandwidth_rad_s
    dk = 2 * np.pi / (crystal.length_mm * 1e-3)

    if convention == "pump-bandwidth":
        dws = (kp * dwp - dk) / (ks + ki)
    elif convention == "energy":
        mismatch = ki - ks
        if abs(mismatch) < 1e-9 * (ks + ki):
            raise GroupVelocityMatchedError(
                "signal and idler group velocities match; the linearised width formula is invalid"
            )
        dws = (dk - (kp - ki) * dwp) / mismatch
    else:
        raise ValueError(f"unknown width convention {convention!r}")
    dwi = dwp - dws
    if dws == 0 or dwi == 0:
        raise GroupVelocityMatchedError("vanishing spectral width; the linearised width formula is invalid")
    dws, dwi = abs(dws), abs(dwi)
    return SpectralWidths(dws, dwi, 1e12 / dws, 1e12 / dwi, convention)
