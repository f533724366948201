"""Run configuration: a TOML file with one table per subsystem.

Every key is checked against ``SCHEMA`` before anything is computed; unknown
tables or keys are rejected, type errors name the offending key and its line.
Keys left out take the defaults listed in the schema, and the names of the
defaulted keys are kept so reports can echo them.
"""
from __future__ import annotations

import copy
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .errors import ConfigError

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

REQUIRED = object()
NUMBER = (int, float)

# section -> key -> (accepted types, default)
SCHEMA = {
    "run": {
        "seed": (int, 1),
        "out": (str, "."),
        "materials": (str, ""),
    },
    "pump": {
        "wavelength_nm": (NUMBER, REQUIRED),
        "bandwidth_nm": (NUMBER, 0.0),
        "power_mw": (NUMBER, 1.0),
    },
    "crystal": {
        "material": (str, REQUIRED),
        "length_mm": (NUMBER, REQUIRED),
        "poling_period_um": (NUMBER, REQUIRED),
        "temperature_c": (NUMBER, REQUIRED),
        "poling_reference_c": (NUMBER, 25.0),
        "target_signal_nm": (NUMBER, 0.0),
    },
    "solver": {
        "scan_step_nm": (NUMBER, 0.1),
        "xtol_nm": (NUMBER, 1e-9),
        "width_convention": (str, "pump-bandwidth"),
        "temperature_min_c": (NUMBER, 20.0),
        "temperature_max_c": (NUMBER, 200.0),
    },
    "displacer": {
        "material": (str, "alpha-BBO"),
        "length_mm": (NUMBER, 39.4),
        "optic_angle_deg": (NUMBER, 45.0),
        "velocity_model": (str, "phase"),
        "temperature_c": (NUMBER, 20.0),
    },
    "wedge": {
        "material": (str, "calcite"),
        "wedge_angle_deg": (NUMBER, 15.0),
        "temperature_c": (NUMBER, 20.0),
        "aperture_mm": (NUMBER, 0.0),
        "walkoff_signal_mm": (NUMBER, 0.0),
        "walkoff_idler_mm": (NUMBER, 0.0),
    },
    "beams": {
        "fwhm_signal_mm": (NUMBER, 0.6),
        "fwhm_idler_mm": (NUMBER, 0.8),
    },
    "sweep": {
        "arm": (str, "idler"),
        "separations_mm": (list, [0.0, 1.6, 3.6, 6.6, 9.6, 11.6]),
        "max_workers": (int, 0),
    },
    "detection": {
        "eta_s": (NUMBER, 1.0),
        "eta_i": (NUMBER, 1.0),
        "dark_s_hz": (NUMBER, 0.0),
        "dark_i_hz": (NUMBER, 0.0),
        "window_ns": (NUMBER, 1.5),
        "pair_rate_per_mw": (NUMBER, 1.0e6),
        "measured_Ns_hz": (NUMBER, 0.0),
        "measured_Ni_hz": (NUMBER, 0.0),
        "measured_N_hz": (NUMBER, 0.0),
        "measured_power_mw": (NUMBER, 1.0),
    },
    "state": {
        "phase_rad": (NUMBER, 0.0),
        "visibility": (NUMBER, 1.0),
        "basis_angles_deg": (list, []),
        "basis_visibilities": (list, []),
    },
    "simulate": {
        "duration_s": (NUMBER, 1.0),
        "scan_step_deg": (NUMBER, 10.0),
        "scan_stop_deg": (NUMBER, 180.0),
        "idler_angles_deg": (list, [0.0, 45.0, 90.0, 135.0]),
        "chsh_angles_deg": (list, [0.0, 22.5, 45.0, 67.5]),
        "chsh_duration_s": (NUMBER, 1.0),
        "powers_mw": (list, [0.2, 0.4, 0.6, 0.8, 1.0]),
        "bg_subtracted": (bool, True),
    },
    "stability": {
        "delta_temperature_k": (NUMBER, 1.0),
        "baseline_c": (NUMBER, 20.0),
        "component": (list, []),
    },
}
REQUIRED_SECTIONS = ("pump", "crystal")
COMPONENT_KEYS = {"path": str, "wave": str, "material": str, "length_mm": NUMBER, "axis": str}


@dataclass
class RunConfig:
    sections: dict
    defaulted: list = field(default_factory=list)
    origin: str = "<string>"

    def __getitem__(self, section):
        return self.sections[section]

    def get(self, dotted):
        section, key = dotted.split(".", 1)
        return self.sections[section][key]


def _line_of(text, section, key=None):
    """1-based line of ``[section]`` (or of ``key`` inside it), or None."""
    current = None
    for no, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        m = re.match(r"\[\[?\s*([A-Za-z0-9_.\-]+)\s*\]\]?", stripped)
        if m:
            current = m.group(1).split(".")[0]
            if key is None and current == section:
                return no
            continue
        if key is not None and current == section and re.match(rf"{re.escape(key)}\s*=", stripped):
            return no
    return None


def _where(text, section, key=None):
    line = _line_of(text, section, key)
    name = section if key is None else f"{section}.{key}"
    return f"line {line}, {name}" if line else name


def _type_ok(value, types):
    if isinstance(value, bool) and types is not bool:
        return False
    return isinstance(value, types)


def _parse_override(item):
    if "=" not in item:
        raise ConfigError(f"override {item!r} is not of the form section.key=value")
    dotted, raw = item.split("=", 1)
    dotted = dotted.strip()
    if dotted.count(".") != 1:
        raise ConfigError(f"override key {dotted!r} must be section.key")
    try:
        value = tomllib.loads(f"v = {raw.strip()}")["v"]
    except tomllib.TOMLDecodeError:
        value = raw.strip()
    section, key = dotted.split(".")
    return section, key, value


def _check_component(text, idx, comp):
    where = _where(text, "stability", "component")
    if not isinstance(comp, dict):
        raise ConfigError(f"{where}: entry {idx} must be a table")
    for k in comp:
        if k not in COMPONENT_KEYS:
            raise ConfigError(f"{where}: entry {idx} has unknown key {k!r}")
    for k, types in COMPONENT_KEYS.items():
        if k not in comp:
            raise ConfigError(f"{where}: entry {idx} lacks {k!r}")
        if not _type_ok(comp[k], types):
            raise ConfigError(f"{where}: entry {idx} key {k!r} has the wrong type")
    if comp["path"] not in ("cw", "ccw") or comp["wave"] not in ("pump", "signal", "idler"):
        raise ConfigError(f"{where}: entry {idx} needs path in (cw, ccw) and wave in (pump, signal, idler)")


def parse_config(text, overrides=(), origin="<string>"):
    """Validate TOML ``text`` (plus ``section.key=value`` overrides) into a RunConfig."""
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{origin}: {exc}") from None

    for item in overrides:
        section, key, value = _parse_override(item)
        raw.setdefault(section, {})
        if not isinstance(raw[section], dict):
            raise ConfigError(f"override {item!r}: {section!r} is not a table")
        raw[section][key] = value

    for section in raw:
        if section not in SCHEMA:
            raise ConfigError(f"{origin}: unknown section [{section}] ({_where(text, section)})")
    for section in REQUIRED_SECTIONS:
        if section not in raw:
            raise ConfigError(f"{origin}: missing required section [{section}]")

    sections, defaulted = {}, []
    for section, spec in SCHEMA.items():
        given = raw.get(section, {})
        if not isinstance(given, dict):
            raise ConfigError(f"{origin}: {_where(text, section)} must be a table")
        for key in given:
            if key not in spec:
                raise ConfigError(f"{origin}: unknown key {key!r} ({_where(text, section, key)})")
        out = {}
        for key, (types, default) in spec.items():
            if key in given:
                value = given[key]
                if not _type_ok(value, types):
                    raise ConfigError(
                        f"{origin}: {_where(text, section, key)} has type {type(value).__name__}"
                    )
                out[key] = float(value) if types is NUMBER else value
            elif default is REQUIRED:
                raise ConfigError(f"{origin}: missing required key {section}.{key}")
            else:
                out[key] = copy.deepcopy(default)
                defaulted.append(f"{section}.{key}")
        sections[section] = out

    for i, comp in enumerate(sections["stability"]["component"]):
        _check_component(text, i, comp)
    for section, key in (("sweep", "separations_mm"), ("state", "basis_angles_deg"),
                         ("state", "basis_visibilities"), ("simulate", "idler_angles_deg"),
                         ("simulate", "chsh_angles_deg"), ("simulate", "powers_mw")):
        values = sections[section][key]
        if not all(_type_ok(v, NUMBER) for v in values):
            raise ConfigError(f"{origin}: {_where(text, section, key)} must be a list of numbers")
        sections[section][key] = [float(v) for v in values]
    st = sections["state"]
    if len(st["basis_angles_deg"]) != len(st["basis_visibilities"]):
        raise ConfigError(f"{origin}: state.basis_angles_deg and state.basis_visibilities differ in length")
    if len(sections["simulate"]["chsh_angles_deg"]) != 4:
        raise ConfigError(f"{origin}: simulate.chsh_angles_deg needs four angles")
    if sections["solver"]["width_convention"] not in ("pump-bandwidth", "energy"):
        raise ConfigError(f"{origin}: solver.width_convention must be 'pump-bandwidth' or 'energy'")
    if sections["sweep"]["arm"] not in ("signal", "idler"):
        raise ConfigError(f"{origin}: sweep.arm must be 'signal' or 'idler'")
    return RunConfig(sections, defaulted, origin)


def load_config(path, overrides=()):
    path = Path(path)
    return parse_config(path.read_text(encoding="utf-8"), overrides, origin=str(path))


def bundled_config_path():
    """The shipped configuration describing the reference source."""
    return resources.files("epskit").joinpath("data", "paper.cfg")
