"""Thermal phase drift of the two counter-propagating loop paths.

Each beam picks up ``sum_j (2 pi L_j / lambda)(dn_j/dT + n_j alpha_j) dT`` over
the components it crosses. The loop is described by one component stack per
wavelength and direction; the relative phase of the Bell state drifts by the
difference between the clockwise and counter-clockwise totals.

For wavelength ``x`` the per-wavelength relative drift is taken as the phase
of the path that crosses the displacer extraordinarily minus the ordinary one.
With the pump polarised e in the clockwise direction and the pairs leaving
it o-polarised, that is ``cw - ccw`` for the pump and ``ccw - cw`` for signal
and idler, so that

    dphi_r = r(pump) - r(signal) - r(idler)

and a loop without the counter-propagating cancellation would see
``r(pump) + r(signal) + r(idler)`` instead.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, NoThermalModelError
from .materials import MaterialRecord, normalize_axis, refractive_index, thermo_optic_coefficient

WAVES = ("pump", "signal", "idler")


@dataclass(frozen=True)
class Component:
    material: MaterialRecord
    length_mm: float
    axis: str = "o"
    label: str = ""

    def __post_init__(self):
        if not self.length_mm > 0:
            raise ValueError("component length must be positive")
        object.__setattr__(self, "axis", normalize_axis(self.axis))

    @property
    def name(self):
        return self.label or f"{self.material.name} ({self.axis}, {self.length_mm:g} mm)"


@dataclass(frozen=True)
class ComponentStack:
    components: tuple

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        if not self.components:
            raise ValueError("a component stack must not be empty")

    def __iter__(self):
        return iter(self.components)

    def __len__(self):
        return len(self.components)


@dataclass(frozen=True)
class ThermalScenario:
    delta_temperature_k: float
    baseline_c: float = 20.0


@dataclass(frozen=True)
class LoopPhase:
    """Per-path and relative drifts, radians (unwrapped)."""

    cw: float
    ccw: float
    relative: float
    no_selfcomp: float
    per_wave: dict = field(default_factory=dict)


def component_phase(component, wavelength_nm, scenario):
    """Single summand (2 pi L / lambda)(dn/dT + n alpha) dT in radians."""
    m = component.material
    t = scenario.baseline_c
    try:
        n = refractive_index(m, component.axis, wavelength_nm, t)
        dndt = thermo_optic_coefficient(m, component.axis, wavelength_nm, t)
    except NoThermalModelError as exc:
        raise NoThermalModelError(f"component {component.name}: {exc.args[0]}", module="stability") from None
    except DomainError as exc:
        raise DomainError(f"component {component.name}: {exc.args[0]}", module="stability") from None
    alpha = m.expansion_alpha(component.axis)
    L = component.length_mm * 1e-3
    lam = wavelength_nm * 1e-9
    return float(2 * np.pi * L / lam * (dndt + n * alpha) * scenario.delta_temperature_k)


def path_phase_variation(stack, wavelength_nm, scenario):
    """Thermal phase drift (radians) accumulated across ``stack``."""
    return sum(component_phase(c, wavelength_nm, scenario) for c in stack)


def phase_budget(r_pump, r_signal, r_idler):
    """(relative, no_selfcomp) from per-wavelength relative drifts.

    Pure arithmetic, so Fraction or Decimal inputs stay exact.
    """
    return r_pump - r_signal - r_idler, r_pump + r_signal + r_idler


def relative_phase_variation(cw, ccw, pump_nm, signal_nm, idler_nm, scenario):
    """Loop drifts for stacks keyed by ``"pump"``, ``"signal"`` and ``"idler"``.

    Returns a LoopPhase whose ``per_wave`` maps each wave to its relative
    drift ``r``.
    """
    lam = dict(zip(WAVES, (pump_nm, signal_nm, idler_nm)))
    missing = [w for w in WAVES if w not in cw or w not in ccw]
    if missing:
        raise ValueError(f"stacks missing for {', '.join(missing)}")
    phase_cw = {w: path_phase_variation(cw[w], lam[w], scenario) for w in WAVES}
    phase_ccw = {w: path_phase_variation(ccw[w], lam[w], scenario) for w in WAVES}
    r = {
        "pump": phase_cw["pump"] - phase_ccw["pump"],
        "signal": phase_ccw["signal"] - phase_cw["signal"],
        "idler": phase_ccw["idler"] - phase_cw["idler"],
    }
    rel, nosc = phase_budget(r["pump"], r["signal"], r["idler"])
    return LoopPhase(sum(phase_cw.values()), sum(phase_ccw.values()), rel, nosc, r)


def displacer_stacks(material, length_mm):
    """Default loop: the pump crosses the first displacer, the pairs the second.

    Clockwise the pump is extraordinary and the pairs ordinary; counter-clockwise
    the roles swap. Waveplate and dichroic contributions are left out.
    """
    def one(axis, which):
        return ComponentStack((Component(material, length_mm, axis, f"displacer {which} ({axis})"),))

    cw = {"pump": one("e", 1), "signal": one("o", 2), "idler": one("o", 2)}
    ccw = {"pump": one("o", 1), "signal": one("e", 2), "idler": one("e", 2)}
    return cw, ccw


def per_kelvin(cw, ccw, pump_nm, signal_nm, idler_nm, baseline_c=20.0):
    """Relative drifts for a 1 K excursion (the model is linear in dT)."""
    return relative_phase_variation(cw, ccw, pump_nm, signal_nm, idler_nm, ThermalScenario(1.0, baseline_c))
