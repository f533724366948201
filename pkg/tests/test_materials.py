import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from epskit.errors import DomainError, NoThermalModelError
from epskit.materials import (dispersionless, get_material, group_index, load_database, parse_database,
                              refractive_index, thermo_optic_coefficient)

SHIPPED = [(name, axis) for name in ("MgO:LiNbO3", "LiNbO3", "alpha-BBO", "calcite") for axis in "oe"]


def calcite_by_hand(lam_um, axis):
    # two-term Sellmeier, evaluated independently of the database parser
    if axis == "o":
        a, b1, c1, b2, c2 = 1.73358749, 0.96464345, 1.94325203e-2, 1.82831454, 120.0
    else:
        a, b1, c1, b2, c2 = 1.35859695, 0.82427830, 1.06689543e-2, 0.14429128, 120.0
    l2 = lam_um**2
    return math.sqrt(a + b1 * l2 / (l2 - c1) + b2 * l2 / (l2 - c2))


def test_calcite_sodium_line(calcite):
    n_o = refractive_index(calcite, "o", 589.0, 20.0)
    n_e = refractive_index(calcite, "e", 589.0, 20.0)
    assert n_o == pytest.approx(calcite_by_hand(0.589, "o"), abs=1e-12)
    assert n_e == pytest.approx(calcite_by_hand(0.589, "e"), abs=1e-12)
    assert n_o == pytest.approx(1.658, abs=1e-3)
    assert n_e == pytest.approx(1.486, abs=1e-3)


def test_dispersionless_material():
    m = dispersionless(1.7)
    for lam in (300.0, 800.0, 5000.0):
        assert refractive_index(m, "o", lam) == 1.7
        assert group_index(m, "e", lam) == pytest.approx(1.7, abs=1e-12)


def test_out_of_validity_names_interval(calcite):
    with pytest.raises(DomainError, match=r"\[204, 2172\] nm"):
        refractive_index(calcite, "o", 3000.0)


def test_group_index_stencil_needs_neighbourhood(calcite):
    refractive_index(calcite, "o", 204.0)
    with pytest.raises(DomainError, match="stencil"):
        group_index(calcite, "o", 204.0)


def test_group_index_matches_finite_difference(ppln):
    h = 0.1  # nm
    lam, T = 1550.0, 100.0
    n = refractive_index(ppln, "e", lam, T)
    dn = (refractive_index(ppln, "e", lam + h, T) - refractive_index(ppln, "e", lam - h, T)) / (2 * h)
    assert group_index(ppln, "e", lam, T) == pytest.approx(n - lam * dn, abs=1e-6)


def test_calcite_normal_dispersion_at_signal(calcite):
    assert group_index(calcite, "o", 790.8) > refractive_index(calcite, "o", 790.8)


@pytest.mark.parametrize("name,axis", SHIPPED)
def test_group_index_interior_agreement(name, axis):
    m = get_material(name)
    lo, hi = m.validity_nm(axis)
    T = 21.0 if name == "LiNbO3" else 40.0
    lam = np.linspace(max(lo, 450.0) + 20, min(hi, 2000.0) - 20, 25)
    h = 0.05
    n = refractive_index(m, axis, lam, T)
    dn = (refractive_index(m, axis, lam + h, T) - refractive_index(m, axis, lam - h, T)) / (2 * h)
    np.testing.assert_allclose(group_index(m, axis, lam, T), n - lam * dn, rtol=1e-5)


def test_constant_thermo_optic():
    m = dispersionless(1.5, dndT=1e-5)
    assert thermo_optic_coefficient(m, "o", 700.0) == pytest.approx(1e-5)
    # n shifts linearly away from the reference temperature
    assert refractive_index(m, "o", 700.0, 30.0) == pytest.approx(1.5 + 1e-4)


def test_bbo_thermo_optic_is_the_stored_polynomial(bbo):
    poly = np.asarray(bbo.dndT_poly("o"))
    lam, T = 0.5236, 20.0
    direct = sum(poly[i, j] * lam**i * T**j for i in range(poly.shape[0]) for j in range(poly.shape[1]))
    assert thermo_optic_coefficient(bbo, "o", 523.6, T) == pytest.approx(direct, rel=1e-15)


def test_missing_thermal_model():
    zelmon = get_material("LiNbO3")
    with pytest.raises(NoThermalModelError):
        thermo_optic_coefficient(zelmon, "o", 1064.0)
    with pytest.raises(NoThermalModelError):
        refractive_index(zelmon, "o", 1064.0, 80.0)
    # at its reference temperature the index itself is still available
    assert refractive_index(zelmon, "o", 1064.0, 21.0) > 2.2
    with pytest.raises(NoThermalModelError):
        thermo_optic_coefficient(dispersionless(1.5), "e", 600.0)


def test_ppln_thermo_optic_from_form(ppln):
    h = 1e-3
    num = (refractive_index(ppln, "e", 1550.0, 100.0 + h) - refractive_index(ppln, "e", 1550.0, 100.0 - h)) / (2 * h)
    assert thermo_optic_coefficient(ppln, "e", 1550.0, 100.0) == pytest.approx(num, rel=1e-4)
    assert 1e-6 < num < 1e-3


@pytest.mark.parametrize("name,axis", SHIPPED)
def test_normal_dispersion(name, axis):
    m = get_material(name)
    lo, hi = m.validity_nm(axis)
    lam = np.linspace(max(lo, 400.0), min(hi, 1700.0), 150)
    T = 21.0 if name == "LiNbO3" else 40.0
    n = refractive_index(m, axis, lam, T)
    assert np.all(np.diff(n) < 0)
    assert np.all(n > 1)


@pytest.mark.parametrize("name", ["alpha-BBO", "calcite"])
def test_negative_uniaxial(name):
    m = get_material(name)
    lam = np.linspace(300.0, 2100.0, 100)
    assert np.all(refractive_index(m, "e", lam) < refractive_index(m, "o", lam))


def test_every_record_has_provenance():
    for rec in load_database().values():
        assert rec.provenance.strip()


def test_database_rejects_unknown_key_and_missing_axis():
    base = """
[[record]]
name = "x"
axis = "o"
form = "constant"
coefficients = [1.5]
validity_min_um = 0.2
validity_max_um = 3.0
source = "test"
"""
    with pytest.raises(DomainError, match="'e' records"):
        parse_database(base)
    with pytest.raises(DomainError, match="unknown key"):
        parse_database(base.replace('source = "test"', 'source = "test"\ncolour = "red"'))
    ok = parse_database(base + base.replace('axis = "o"', 'axis = "e"'))
    assert refractive_index(ok["x"], "e", 1000.0) == 1.5


def test_custom_database_path(tmp_path):
    text = """
[[record]]
name = "glass"
axis = "o"
form = "sellmeier"
coefficients = [1.0, 1.03961212, 0.00600069867, 0.231792344, 0.0200179144, 1.01046945, 103.560653]
validity_min_um = 0.3
validity_max_um = 2.5
dndT_poly = [[2.4e-6]]
source = "BK7-like test glass"
"""
    text += text.replace('axis = "o"', 'axis = "e"')
    p = tmp_path / "glass.toml"
    p.write_text(text)
    glass = get_material("glass", p)
    assert refractive_index(glass, "o", 587.6) == pytest.approx(1.5168, abs=1e-4)


@settings(max_examples=60, deadline=None)
@given(lam=st.floats(520.0, 1900.0), T=st.floats(20.0, 150.0))
def test_ppln_index_is_deterministic_and_physical(lam, T):
    ppln = get_material("MgO:LiNbO3")
    a = refractive_index(ppln, "e", lam, T)
    assert a == refractive_index(ppln, "e", lam, T)
    assert 2.0 < a < 2.4
    assert group_index(ppln, "e", lam, T) > a
