import pytest
from fractions import Fraction
from hypothesis import given, settings, strategies as st

from nmrqc.errors import DuplicateCoupling, DuplicateLabel, MissingCarrier, MissingShift, ParseError, UnknownLabel
from nmrqc.spinsys import (
    COMPOUND_II_DOCUMENT,
    Coupling,
    Isotope,
    Nucleus,
    SpinSystem,
    bundled_compound_II,
    get_isotope,
    offsets_hz,
    parse_spin_system,
    serialize_spin_system,
    subsystem,
    validate,
)

MINIMAL = """\
FIELD proton_mhz=400
NUCLEUS A 1H shift_ppm=1.0
NUCLEUS B 1H   # no shift
COUPLING A B 7.5 bonds=3
"""

# (a, b, J, bonds) as printed in the compound II coupling table
COMPOUND_II_TABLE = [
    ("HA", "HB", 1.22, 2),
    ("HX", "HA", 8.53, 3), ("HX", "HB", 15.5, 3), ("H6", "H7", 15.4, 3),
    ("H3", "H4", 3.6, 3), ("H5", "H4", 2.6, 3), ("Ho", "Hm", 6.9, 3), ("Hm", "Hp", 7.0, 3),
    ("H3", "H5", 1.0, 4), ("Ho", "Hp", 1.8, 4), ("H6", "H3", 0.6, 4),
    ("H7", "H5", 0.3, 6), ("HA", "H3", 0.35, 6),
    ("C3", "H3", 171.2, 1), ("C4", "H4", 174.0, 1), ("C5", "H5", 185.9, 1),
    ("Cx", "HX", 176.5, 1), ("Cab", "HA", 164.3, 1), ("Cab", "HB", 157.8, 1),
    ("C6", "H6", 153.3, 1), ("C7", "H7", 157.0, 1), ("Co", "Ho", 159.6, 1),
    ("Cm", "Hm", 161.1, 1), ("Cp", "Hp", 161.1, 1),
]


def test_parse_minimal():
    s = parse_spin_system(MINIMAL)
    assert len(s.nuclei) == 2 and len(s.couplings) == 1
    assert s.proton_frequency_mhz == 400
    assert s.nucleus("A").shift_ppm == 1.0
    assert s.nucleus("B").shift_ppm is None
    assert s.couplings[0].bonds == 3


def test_unknown_label():
    with pytest.raises(UnknownLabel) as exc:
        parse_spin_system("NUCLEUS A 1H\nCOUPLING A Z9 3.0\n")
    assert exc.value.label == "Z9"


def test_duplicate_label():
    with pytest.raises(DuplicateLabel):
        parse_spin_system("NUCLEUS A 1H\nNUCLEUS A 13C\n")


def test_duplicate_coupling():
    same = parse_spin_system("NUCLEUS A 1H\nNUCLEUS B 1H\nCOUPLING A B 3\nCOUPLING B A 3\n")
    assert len(same.couplings) == 1
    with pytest.raises(DuplicateCoupling):
        parse_spin_system("NUCLEUS A 1H\nNUCLEUS B 1H\nCOUPLING A B 3\nCOUPLING B A 4\n")


@pytest.mark.parametrize(
    "doc, line",
    [
        ("NUCLEUS A 1H\nBOGUS x\n", 2),
        ("NUCLEUS A 1H shift=3\n", 1),
        ("\n\nNUCLEUS A 99Xx\n", 3),
        ("NUCLEUS A 1H\nNUCLEUS B 1H\nCOUPLING A B abc\n", 3),
        ("FIELD proton_mhz=-5\n", 1),
        ("NUCLEUS A 1H\nCOUPLING A A 1\n", 2),
    ],
)
def test_syntax_errors_report_line(doc, line):
    with pytest.raises(ParseError) as exc:
        parse_spin_system(doc)
    assert exc.value.line == line
    assert f"line {line}" in str(exc.value)


def test_symmetric_lookup():
    s = parse_spin_system(MINIMAL)
    assert s.j("A", "B") == s.j("B", "A") == 7.5
    assert s.has_coupling("B", "A")


def test_compound_ii_counts_and_values():
    s = bundled_compound_II()
    assert len(s.nuclei) == 21
    assert len(s.couplings) == 24
    assert sum(n.isotope.name == "1H" for n in s.nuclei) == 11
    assert sum(n.isotope.name == "13C" for n in s.nuclei) == 10
    for a, b, J, bonds in COMPOUND_II_TABLE:
        assert s.j(a, b) == J
        c = next(c for c in s.couplings if c.pair == frozenset((a, b)))
        assert c.bonds == bonds
    assert all(n.shift_ppm is None for n in s.nuclei)


def test_compound_ii_validation():
    rep = validate(bundled_compound_II())
    assert rep.nucleus_count == 21 and rep.coupling_count == 24
    assert rep.ok
    warnings = [m for sev, m in rep.issues if sev == "warning"]
    assert len(warnings) == 21 and all("missing chemical shift" in m for m in warnings)


def test_validate_quadrupolar():
    s = parse_spin_system("NUCLEUS D 2H shift_ppm=1\n")
    rep = validate(s)
    assert any(sev == "error" and "quadrupolar isotope unsupported" in m for sev, m in rep.issues)
    assert not rep.ok


def test_validate_empty():
    rep = validate(SpinSystem())
    assert rep.nucleus_count == 0
    assert [sev for sev, _ in rep.issues] == ["info"]


def test_validate_isolated_nucleus_info():
    s = parse_spin_system("NUCLEUS A 1H shift_ppm=1\nNUCLEUS B 1H shift_ppm=2\n")
    rep = validate(s)
    assert rep.ok
    assert sum(sev == "info" for sev, _ in rep.issues) == 2


def test_offsets():
    s = parse_spin_system("FIELD proton_mhz=500\nNUCLEUS A 1H shift_ppm=1.0\nNUCLEUS C 13C shift_ppm=10\n")
    off = offsets_hz(s, {"1H": 0.0, "13C": 10.0})
    assert off["A"] == pytest.approx(500.0, abs=1e-12)
    assert off["C"] == 0.0
    with pytest.raises(MissingCarrier):
        offsets_hz(s, {"1H": 0.0})
    with pytest.raises(MissingShift):
        offsets_hz(bundled_compound_II(), {"1H": 0.0, "13C": 0.0})


def test_carbon_frequency_scales_with_gyromagnetic_ratio():
    s = SpinSystem(proton_frequency_mhz=500.0)
    assert s.isotope_frequency_mhz("13C") == pytest.approx(125.7, rel=1e-3)


def test_isotope_invariants():
    with pytest.raises(ValueError):
        Isotope("bad", Fraction(1, 2), 0.0)
    assert get_isotope("1H").is_spin_half
    assert not get_isotope("14N").is_spin_half


def test_subsystem_keeps_order_and_internal_couplings():
    s = bundled_compound_II()
    sub = subsystem(s, ["HB", "HX", "HA"])
    assert sub.labels == ["HB", "HX", "HA"]
    assert {c.pair for c in sub.couplings} == {
        frozenset(("HA", "HB")), frozenset(("HX", "HA")), frozenset(("HX", "HB"))
    }


def test_dataset_document_roundtrip():
    s = bundled_compound_II()
    assert parse_spin_system(serialize_spin_system(s)) == s
    assert COMPOUND_II_DOCUMENT.count("\nNUCLEUS ") == 21
    assert COMPOUND_II_DOCUMENT.count("\nCOUPLING ") == 24


labels_st = st.lists(
    st.from_regex(r"[A-Za-z][A-Za-z0-9_]{0,4}", fullmatch=True), min_size=0, max_size=6, unique=True
)
finite = st.floats(allow_nan=False, allow_infinity=False, min_value=-1e4, max_value=1e4)


@st.composite
def spin_systems(draw):
    labels = draw(labels_st)
    nuclei = tuple(
        Nucleus(lab, get_isotope(draw(st.sampled_from(["1H", "13C", "15N", "2H"]))),
                draw(st.one_of(st.none(), finite)))
        for lab in labels
    )
    couplings = []
    for i in range(len(labels)):
        for j in range(i + 1, len(labels)):
            if draw(st.booleans()):
                a, b = (labels[i], labels[j]) if draw(st.booleans()) else (labels[j], labels[i])
                couplings.append(Coupling(a, b, draw(finite), draw(st.one_of(st.none(), st.integers(1, 8)))))
    mhz = draw(st.floats(min_value=1.0, max_value=1500.0))
    return SpinSystem(nuclei, tuple(couplings), mhz)


@settings(max_examples=150, deadline=None)
@given(spin_systems())
def test_roundtrip_property(s):
    assert parse_spin_system(serialize_spin_system(s)) == s


@settings(max_examples=100, deadline=None)
@given(spin_systems())
def test_symmetry_property(s):
    for c in s.couplings:
        assert s.j(c.a, c.b) == s.j(c.b, c.a) == c.j_hz
    for lab in s.labels:
        assert s.j(lab, lab) == 0.0
