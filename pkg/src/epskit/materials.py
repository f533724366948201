"""Refractive indices, group indices and thermal coefficients of uniaxial crystals.

Public functions take wavelengths in nanometres and temperatures in degrees
Celsius; the Sellmeier forms themselves are evaluated in micrometres.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np
from numpy.polynomial import polynomial as P

from .errors import DomainError, NoThermalModelError

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

FORMS = ("constant", "sellmeier", "sellmeier_ir", "linbo3_thermal")
_T_DEPENDENT_FORMS = ("linbo3_thermal",)

# Step of the Richardson-extrapolated central difference used for dn/dlambda.
DERIVATIVE_STEP_UM = 1e-3
_THERMAL_STEP_K = 0.5

_AXIS_ALIASES = {
    "o": "o", "ordinary": "o",
    "e": "e", "extraordinary": "e",
}


def normalize_axis(axis):
    try:
        return _AXIS_ALIASES[str(axis).lower()]
    except KeyError:
        raise ValueError(f"axis must be 'o' or 'e', got {axis!r}") from None


@dataclass(frozen=True)
class SellmeierModel:
    form: str
    coefficients: tuple
    validity_um: tuple = (0.0, np.inf)
    axis: str = "o"
    reference_temperature_c: float = 20.0

    def __post_init__(self):
        if self.form not in FORMS:
            raise ValueError(f"unknown Sellmeier form {self.form!r}; known: {FORMS}")
        object.__setattr__(self, "coefficients", tuple(float(c) for c in self.coefficients))
        object.__setattr__(self, "axis", normalize_axis(self.axis))
        lo, hi = self.validity_um
        if not 0 <= lo < hi:
            raise ValueError(f"bad validity interval {self.validity_um}")

    @property
    def temperature_dependent(self):
        return self.form in _T_DEPENDENT_FORMS

    def check_validity(self, lam_um, margin_um=0.0):
        lam = np.asarray(lam_um, dtype=float)
        lo, hi = self.validity_um
        if np.any(lam - margin_um < lo) or np.any(lam + margin_um > hi) or np.any(~np.isfinite(lam)):
            bad = lam[(lam - margin_um < lo) | (lam + margin_um > hi) | ~np.isfinite(lam)]
            extra = f" with a {margin_um * 1e3:g} nm stencil margin" if margin_um else ""
            raise DomainError(
                f"wavelength {np.atleast_1d(bad)[0] * 1e3:.6g} nm outside the validity interval "
                f"[{lo * 1e3:g}, {hi * 1e3:g}] nm of the {self.form} model ({self.axis}-axis){extra}"
            )

    def n_squared(self, lam_um, temperature_c):
        """Evaluate the raw form; no validity check, no thermo-optic correction."""
        c = self.coefficients
        l2 = np.asarray(lam_um, dtype=float) ** 2
        if self.form == "constant":
            return np.full_like(l2, c[0] ** 2)
        if self.form == "sellmeier":
            out = np.full_like(l2, c[0])
            for b, cc in zip(c[1::2], c[2::2]):
                out = out + b * l2 / (l2 - cc)
            return out
        if self.form == "sellmeier_ir":
            a, b, cc, d = c
            return a + b / (l2 - cc) - d * l2
        a1, a2, a3, a4, a5, a6, b1, b2, b3, b4 = c
        f = (temperature_c - 24.5) * (temperature_c + 570.82)
        return (a1 + b1 * f + (a2 + b2 * f) / (l2 - (a3 + b3 * f) ** 2)
                + (a4 + b4 * f) / (l2 - a5 ** 2) - a6 * l2)


@dataclass(frozen=True)
class MaterialRecord:
    name: str
    sellmeier_o: SellmeierModel
    sellmeier_e: SellmeierModel
    dndT_o: tuple | None = None
    dndT_e: tuple | None = None
    alpha_o: float = 0.0
    alpha_e: float = 0.0
    provenance: str = ""

    def __post_init__(self):
        if not self.provenance:
            raise ValueError(f"material {self.name!r} needs a provenance citation")

    def sellmeier(self, axis):
        return self.sellmeier_o if normalize_axis(axis) == "o" else self.sellmeier_e

    def dndT_poly(self, axis):
        return self.dndT_o if normalize_axis(axis) == "o" else self.dndT_e

    def expansion_alpha(self, axis):
        return self.alpha_o if normalize_axis(axis) == "o" else self.alpha_e

    def validity_nm(self, axis):
        lo, hi = self.sellmeier(axis).validity_um
        return lo * 1e3, hi * 1e3


def _scalar_or_array(x):
    x = np.asarray(x, dtype=float)
    return float(x) if x.ndim == 0 else x


def _thermo_optic_um(material, axis, lam_um, temperature_c):
    model = material.sellmeier(axis)
    poly = material.dndT_poly(axis)
    if poly is not None:
        lam, temp = np.broadcast_arrays(np.asarray(lam_um, dtype=float), np.asarray(temperature_c, dtype=float))
        return P.polyval2d(lam, temp, np.asarray(poly, dtype=float))
    if model.temperature_dependent:
        h = _THERMAL_STEP_K
        up = np.sqrt(model.n_squared(lam_um, temperature_c + h))
        down = np.sqrt(model.n_squared(lam_um, temperature_c - h))
        return (up - down) / (2 * h)
    raise NoThermalModelError(
        f"material {material.name!r} ({model.axis}-axis) has no thermo-optic model"
    )


def _index_um(material, axis, lam_um, temperature_c):
    model = material.sellmeier(axis)
    n = np.sqrt(model.n_squared(lam_um, temperature_c))
    if not model.temperature_dependent:
        dT = temperature_c - model.reference_temperature_c
        if dT != 0:
            n = n + _thermo_optic_um(material, axis, lam_um, temperature_c) * dT
    return n


def refractive_index(material, axis, wavelength_nm, temperature_c=20.0):
    """Phase index n(lambda, T) on one crystal axis.

    Raises DomainError if any wavelength falls outside the model's validity
    interval, and NoThermalModelError if ``temperature_c`` differs from the
    model's reference temperature but no dn/dT is available to shift it.
    """
    axis = normalize_axis(axis)
    lam_um = np.asarray(wavelength_nm, dtype=float) * 1e-3
    material.sellmeier(axis).check_validity(lam_um)
    return _scalar_or_array(_index_um(material, axis, lam_um, temperature_c))


def derivative(func, x, h):
    """Richardson-extrapolated central difference, O(h^4)."""
    d1 = (func(x + h) - func(x - h)) / (2 * h)
    d2 = (func(x + h / 2) - func(x - h / 2)) / h
    return (4 * d2 - d1) / 3


def group_index_of(index_func, lam_um, h=DERIVATIVE_STEP_UM):
    """n_g = n - lambda dn/dlambda for an arbitrary index function of lambda (um)."""
    lam_um = np.asarray(lam_um, dtype=float)
    return index_func(lam_um) - lam_um * derivative(index_func, lam_um, h)


def group_index(material, axis, wavelength_nm, temperature_c=20.0):
    """Group index n - lambda dn/dlambda; the group velocity is c / n_g."""
    axis = normalize_axis(axis)
    lam_um = np.asarray(wavelength_nm, dtype=float) * 1e-3
    material.sellmeier(axis).check_validity(lam_um, margin_um=DERIVATIVE_STEP_UM)
    ng = group_index_of(lambda x: _index_um(material, axis, x, temperature_c), lam_um)
    return _scalar_or_array(ng)


def thermo_optic_coefficient(material, axis, wavelength_nm, temperature_c=20.0):
    """dn/dT in 1/K.

    Taken from the stored dn/dT polynomial when present, otherwise from the
    temperature dependence of a temperature-dependent Sellmeier form. Materials
    with neither raise NoThermalModelError; the coefficient is never assumed zero.
    """
    axis = normalize_axis(axis)
    lam_um = np.asarray(wavelength_nm, dtype=float) * 1e-3
    material.sellmeier(axis).check_validity(lam_um)
    return _scalar_or_array(_thermo_optic_um(material, axis, lam_um, temperature_c))


def dispersionless(n_o, n_e=None, dndT=None, alpha=0.0, name="dispersionless"):
    """Constant-index test material; ``n_e`` defaults to ``n_o`` (isotropic)."""
    n_e = n_o if n_e is None else n_e
    poly = None if dndT is None else ((float(dndT),),)
    return MaterialRecord(
        name=name,
        sellmeier_o=SellmeierModel("constant", (n_o,), axis="o"),
        sellmeier_e=SellmeierModel("constant", (n_e,), axis="e"),
        dndT_o=poly,
        dndT_e=poly,
        alpha_o=alpha,
        alpha_e=alpha,
        provenance="synthetic test material",
    )


_RECORD_KEYS = {
    "name", "axis", "form", "coefficients", "validity_min_um", "validity_max_um",
    "dndT_poly", "alpha_per_K", "source", "reference_temperature_c",
}
_REQUIRED_KEYS = {"name", "axis", "form", "coefficients", "validity_min_um", "validity_max_um", "source"}


def parse_database(text, origin="<string>"):
    """Parse a TOML materials database into ``{name: MaterialRecord}``."""
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise DomainError(f"{origin}: {exc}") from None
    records = doc.get("record")
    if not isinstance(records, list) or not records:
        raise DomainError(f"{origin}: no [[record]] entries")
    axes = {}
    for i, rec in enumerate(records):
        where = f"{origin}: record {i + 1}"
        unknown = set(rec) - _RECORD_KEYS
        if unknown:
            raise DomainError(f"{where}: unknown key(s) {sorted(unknown)}")
        missing = _REQUIRED_KEYS - set(rec)
        if missing:
            raise DomainError(f"{where}: missing key(s) {sorted(missing)}")
        if not rec["source"].strip():
            raise DomainError(f"{where}: empty source")
        axis = normalize_axis(rec["axis"])
        model = SellmeierModel(
            form=rec["form"],
            coefficients=tuple(rec["coefficients"]),
            validity_um=(float(rec["validity_min_um"]), float(rec["validity_max_um"])),
            axis=axis,
            reference_temperature_c=float(rec.get("reference_temperature_c", 20.0)),
        )
        poly = rec.get("dndT_poly")
        if poly is not None:
            poly = tuple(tuple(float(v) for v in row) for row in poly)
        axes.setdefault(rec["name"], {})[axis] = (model, poly, float(rec.get("alpha_per_K", 0.0)), rec["source"])

    db = {}
    for name, by_axis in axes.items():
        if set(by_axis) != {"o", "e"}:
            raise DomainError(f"{origin}: material {name!r} needs both 'o' and 'e' records")
        (mo, po, ao, so), (me, pe, ae, se) = by_axis["o"], by_axis["e"]
        provenance = so if so == se else f"o: {so}; e: {se}"
        db[name] = MaterialRecord(name, mo, me, po, pe, ao, ae, provenance)
    return db


@functools.lru_cache(maxsize=8)
def _load_cached(path):
    if path is None:
        text = resources.files("epskit").joinpath("data", "materials.toml").read_text()
        return parse_database(text, "materials.toml")
    return parse_database(Path(path).read_text(), str(path))


def load_database(path=None):
    return dict(_load_cached(None if path is None else str(path)))


def get_material(name, path=None):
    db = _load_cached(None if path is None else str(path))
    try:
        return db[name]
    except KeyError:
        raise DomainError(f"unknown material {name!r}; available: {sorted(db)}") from None
