"""Calcite wedge pairs that cancel a spatial walk-off and a temporal walk-off at once.

Geometry (2-D, beam along +z, heights along +y): two parallel beams enter the
first wedge at normal incidence, the o-polarised one at y = 0 and the
e-polarised one at y = dD. The first wedge's exit face is tilted by the wedge
angle phi so that the crystal is thicker at larger y; both beams bend towards
+y on leaving it, the o-ray more (n_o > n_e). The second wedge is identical,
rotated by 180 deg, with its entry face parallel to the first exit face at a
distance ``d`` along z. Choosing ``d`` makes both beams hit the second wedge at
the same point, where they are refracted back to +z and leave merged.

Thickness ``t`` is the o-ray's total crystal path (P1 + P3), split equally
between the wedges. Inside the crystal the optic axis is perpendicular to the
propagation direction, so o- and e-rays see the principal indices.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.constants import c as C_LIGHT
from scipy.optimize import brentq

from .errors import CannotCompensateError, DomainError, GeometryError, UncompensatableError
from .materials import MaterialRecord, group_index, refractive_index
from .raytrace import Plane, Ray

THICKNESS_BRACKET_MM = (0.0, 100.0)


@dataclass(frozen=True)
class WedgeSpec:
    material: MaterialRecord
    wedge_angle_deg: float
    thickness_mm: float = 0.0
    aperture_mm: float | None = None

    def __post_init__(self):
        if not 0 < self.wedge_angle_deg < 90:
            raise ValueError("wedge angle must lie strictly between 0 and 90 degrees")
        if self.thickness_mm < 0:
            raise ValueError("wedge thickness must be non-negative")

    @property
    def angle(self):
        return np.radians(self.wedge_angle_deg)


@dataclass(frozen=True)
class WedgePairDesign:
    wedge: WedgeSpec
    wavelength_nm: float
    temperature_c: float
    walkoff_mm: float
    a_mm: float
    b_mm: float
    d_mm: float
    theta_o_deg: float
    theta_e_deg: float
    initial_delay_ps: float = 0.0
    swapped: bool = False
    residual_walkoff_um: float = float("nan")
    residual_delay_fs: float = float("nan")


@dataclass(frozen=True)
class ThicknessSolution:
    thickness_mm: float
    closed_form_mm: float
    swapped: bool
    residual_fs: float


@dataclass(frozen=True)
class TraceResult:
    separation_mm: float
    delay_ps: float
    exit_angle_rad: float
    rays: tuple


def wedge_exit_angles(material, wavelength_nm, wedge_angle_deg, temperature_c=20.0):
    """Exit angles (deg) of the o- and e-ray from the tilted face normal.

    sin(theta_x) = n_x sin(phi); the deviation from the original direction is
    theta_x - phi.
    """
    phi = np.radians(wedge_angle_deg)
    out = []
    for axis in ("o", "e"):
        n = refractive_index(material, axis, wavelength_nm, temperature_c)
        s = n * np.sin(phi)
        if s >= 1:
            critical = np.degrees(np.arcsin(1 / n))
            raise DomainError(
                f"total internal reflection of the {axis}-ray: wedge angle {wedge_angle_deg} deg "
                f"exceeds the critical angle {critical:.3f} deg",
                module="wedges",
            )
        out.append(float(np.degrees(np.arcsin(s))))
    return tuple(out)


def _deviations(theta_o_deg, theta_e_deg, phi):
    return np.tan(np.radians(theta_o_deg) - phi), np.tan(np.radians(theta_e_deg) - phi)


def _gap_geometry(walkoff_mm, theta_o_deg, theta_e_deg, phi):
    to, te = _deviations(theta_o_deg, theta_e_deg, phi)
    if to == te:
        raise CannotCompensateError("o- and e-rays leave the wedge at the same angle; no birefringent steering")
    a = (1 - np.tan(phi) * te) / (to - te) * walkoff_mm
    b = a * to
    return a, b, a - b * np.tan(phi)


def _group_indices(design_or_wedge, wavelength_nm, temperature_c):
    m = design_or_wedge.material
    return (group_index(m, "o", wavelength_nm, temperature_c),
            group_index(m, "e", wavelength_nm, temperature_c))


def gap_legs(design):
    """Air paths (P2,o, P2,e) in mm between the wedges for merged rays."""
    phi = design.wedge.angle
    to = np.radians(design.theta_o_deg) - phi
    te = np.radians(design.theta_e_deg) - phi
    p2o = design.a_mm / np.cos(to)
    p2e = (design.a_mm - design.walkoff_mm * np.tan(phi)) / np.cos(te)
    return p2o, p2e


def crystal_leg_delay_ps(design, thickness_mm=None):
    """(P1 + P3)(1/v_g,o - 1/v_g,e), ps."""
    t = design.wedge.thickness_mm if thickness_mm is None else thickness_mm
    ngo, nge = _group_indices(design.wedge, design.wavelength_nm, design.temperature_c)
    return t * 1e-3 * (ngo - nge) / C_LIGHT * 1e12


def wedge_delay_ps(design, thickness_mm=None):
    """Travel-time difference o-ray minus e-ray through the merged pair, ps."""
    t = design.wedge.thickness_mm if thickness_mm is None else thickness_mm
    ngo, nge = _group_indices(design.wedge, design.wavelength_nm, design.temperature_c)
    p2o, p2e = gap_legs(design)
    extra = design.walkoff_mm * np.tan(design.wedge.angle)
    t_o = (t * ngo + p2o) * 1e-3 / C_LIGHT
    t_e = ((t + extra) * nge + p2e) * 1e-3 / C_LIGHT
    return (t_o - t_e) * 1e12


def residual_delay(design, initial_delay_ps, thickness_mm=None):
    """Signed temporal walk-off left after the pair, ps.

    With ``design.swapped`` the wedge optic axis is turned so that the other
    beam is the delayed one, which flips the sign of the correction.
    """
    sign = -1.0 if design.swapped else 1.0
    return initial_delay_ps - sign * wedge_delay_ps(design, thickness_mm)


def _bare_design(walkoff_mm, wedge, wavelength_nm, temperature_c):
    if walkoff_mm < 0:
        raise ValueError("walk-off must be non-negative")
    theta_o, theta_e = wedge_exit_angles(wedge.material, wavelength_nm, wedge.wedge_angle_deg, temperature_c)
    a, b, d = _gap_geometry(walkoff_mm, theta_o, theta_e, wedge.angle)
    return WedgePairDesign(wedge, float(wavelength_nm), float(temperature_c), float(walkoff_mm),
                           float(a), float(b), float(d), theta_o, theta_e)


def _design_for_separation(wedge, d_mm, wavelength_nm, temperature_c):
    """Invert d = a - b tan(phi) to the walk-off that ``d_mm`` merges."""
    theta_o, theta_e = wedge_exit_angles(wedge.material, wavelength_nm, wedge.wedge_angle_deg, temperature_c)
    to, te = _deviations(theta_o, theta_e, wedge.angle)
    if to == te:
        raise CannotCompensateError("o- and e-rays leave the wedge at the same angle; no birefringent steering")
    a = d_mm / (1 - to * np.tan(wedge.angle))
    walkoff = a * (to - te) / (1 - np.tan(wedge.angle) * te)
    return _bare_design(walkoff, wedge, wavelength_nm, temperature_c)


def solve_thickness(initial_delay_ps, wedge, d_mm, wavelength_nm, temperature_c=20.0,
                    bracket_mm=THICKNESS_BRACKET_MM):
    """Total thickness that zeroes the residual delay, by bracketed root finding.

    Tries the normal orientation first, then the swapped one. Also reports the
    closed-form estimate |v_g,e - v_g,o| * dT for comparison.
    """
    design = _design_for_separation(wedge, d_mm, wavelength_nm, temperature_c)
    ngo, nge = _group_indices(wedge, wavelength_nm, temperature_c)
    closed = abs(C_LIGHT / nge - C_LIGHT / ngo) * abs(initial_delay_ps) * 1e-12 * 1e3
    lo, hi = bracket_mm
    ends = {}
    for swapped in (False, True):
        trial = replace(design, swapped=swapped)
        f_lo = residual_delay(trial, initial_delay_ps, lo)
        f_hi = residual_delay(trial, initial_delay_ps, hi)
        ends[swapped] = (f_lo, f_hi)
        if f_lo == 0:
            t = lo
        elif f_lo * f_hi < 0:
            t = brentq(lambda x: residual_delay(trial, initial_delay_ps, x), lo, hi, xtol=1e-13, rtol=1e-15)
        else:
            continue
        return ThicknessSolution(t, closed, swapped, residual_delay(trial, initial_delay_ps, t) * 1e3)
    raise UncompensatableError(
        f"no thickness in [{lo}, {hi}] mm cancels {initial_delay_ps:.4g} ps; residuals at the bracket ends "
        f"{ends[False][0]:.4g}/{ends[False][1]:.4g} ps (normal), {ends[True][0]:.4g}/{ends[True][1]:.4g} ps (swapped)"
    )


def design_wedge_pair(walkoff_mm, wedge, wavelength_nm, temperature_c=20.0, initial_delay_ps=None):
    """Lateral separation (and, given a delay to cancel, thickness) of a wedge pair.

    Residuals come from :func:`trace_wedge_pair`, never from the closed form.
    """
    design = _bare_design(walkoff_mm, wedge, wavelength_nm, temperature_c)
    if initial_delay_ps is None:
        initial_delay_ps = 0.0
    else:
        sol = solve_thickness(initial_delay_ps, wedge, design.d_mm, wavelength_nm, temperature_c)
        design = replace(design, wedge=replace(wedge, thickness_mm=sol.thickness_mm), swapped=sol.swapped)
    design = replace(design, initial_delay_ps=float(initial_delay_ps))
    trace = trace_wedge_pair(design)
    sign = -1.0 if design.swapped else 1.0
    return replace(
        design,
        residual_walkoff_um=trace.separation_mm * 1e3,
        residual_delay_fs=(initial_delay_ps - sign * trace.delay_ps) * 1e3,
    )


def trace_wedge_pair(design, walkoff_mm=None, separation_mm=None, thickness_mm=None):
    """Forward 2-D trace of the o- and e-ray through the pair.

    The second wedge keeps its design height reference, so ``separation_mm``
    slides it along z as in a lateral-separation scan. Returns the exit height
    difference e minus o, the time difference o minus e, and the largest exit
    angle from +z.
    """
    walkoff = design.walkoff_mm if walkoff_mm is None else walkoff_mm
    d = design.d_mm if separation_mm is None else separation_mm
    t = design.wedge.thickness_mm if thickness_mm is None else thickness_mm
    m, lam, temp = design.wedge.material, design.wavelength_nm, design.temperature_c
    phi = design.wedge.angle
    tilted = (np.cos(phi), -np.sin(phi))
    h = t / 2 * 1e-3
    d_m = d * 1e-3
    b_ref = design.b_mm * 1e-3

    w1_exit = Plane((h, 0.0), tilted)
    w2_entry = Plane((h + d_m, 0.0), tilted)
    w2_exit = Plane((h + d_m + b_ref * np.tan(phi) + h, 0.0), (1.0, 0.0))

    rays = []
    for axis, y0 in (("o", 0.0), ("e", walkoff * 1e-3)):
        n = refractive_index(m, axis, lam, temp)
        ng = group_index(m, axis, lam, temp)
        ray = Ray((0.0, y0), (1.0, 0.0))
        ray.propagate_to(w1_exit, ng)
        ray.refract(w1_exit, n, 1.0)
        ray.propagate_to(w2_entry, 1.0)
        if design.wedge.aperture_mm:
            half = design.wedge.aperture_mm * 1e-3 / 2
            if abs(ray.position[1] - b_ref) > half:
                raise GeometryError(
                    f"{axis}-ray misses the second wedge aperture "
                    f"(height {ray.position[1] * 1e3:.4f} mm, aperture {design.wedge.aperture_mm} mm)"
                )
        ray.refract(w2_entry, 1.0, n)
        ray.propagate_to(w2_exit, ng)
        ray.refract(w2_exit, n, 1.0)
        rays.append(ray)

    o, e = rays
    exit_angle = max(abs(o.angle), abs(e.angle))
    return TraceResult(
        separation_mm=(e.position[1] - o.position[1]) * 1e3,
        delay_ps=(o.time_s - e.time_s) * 1e12,
        exit_angle_rad=exit_angle,
        rays=(o, e),
    )
