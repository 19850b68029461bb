"""Spin-system data model, the line-oriented document format, and the bundled
compound II coupling dataset.

Document format (UTF-8, ``#`` starts a comment)::

    FIELD proton_mhz=500
    NUCLEUS HA 1H shift_ppm=6.71
    NUCLEUS Cab 13C
    COUPLING HA HB 1.22 bonds=2

Couplings are stored once per unordered pair. Hyperfine constants of
paramagnetic systems may be entered as ordinary couplings; nothing beyond
storage is done with them.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Mapping

from .errors import (
    DuplicateCoupling,
    DuplicateLabel,
    MissingCarrier,
    MissingShift,
    ParseError,
    UnknownIsotope,
    UnknownLabel,
)

__all__ = [
    "Isotope",
    "Nucleus",
    "Coupling",
    "SpinSystem",
    "ValidationReport",
    "ISOTOPES",
    "get_isotope",
    "parse_spin_system",
    "serialize_spin_system",
    "validate",
    "offsets_hz",
    "subsystem",
    "bundled_compound_II",
    "COMPOUND_II_DOCUMENT",
]

LABEL_RE = re.compile(r"^[A-Za-z0-9_']+$")


@dataclass(frozen=True)
class Isotope:
    name: str
    spin: Fraction
    base_frequency_per_tesla: float  # MHz/T, magnitude of gamma/2pi

    def __post_init__(self):
        if self.base_frequency_per_tesla <= 0:
            raise ValueError("base_frequency_per_tesla must be positive")

    @property
    def is_spin_half(self) -> bool:
        return self.spin == Fraction(1, 2)

    def __str__(self) -> str:
        return self.name


ISOTOPES: dict[str, Isotope] = {
    iso.name: iso
    for iso in (
        Isotope("1H", Fraction(1, 2), 42.577478),
        Isotope("2H", Fraction(1), 6.535903),
        Isotope("13C", Fraction(1, 2), 10.708395),
        Isotope("14N", Fraction(1), 3.077706),
        Isotope("15N", Fraction(1, 2), 4.316721),
        Isotope("19F", Fraction(1, 2), 40.078),
        Isotope("29Si", Fraction(1, 2), 8.465),
        Isotope("31P", Fraction(1, 2), 17.2351),
    )
}


def get_isotope(name: str | Isotope) -> Isotope:
    if isinstance(name, Isotope):
        return name
    try:
        return ISOTOPES[name]
    except KeyError:
        raise UnknownIsotope(name) from None


@dataclass(frozen=True)
class Nucleus:
    label: str
    isotope: Isotope
    shift_ppm: float | None = None


@dataclass(frozen=True)
class Coupling:
    a: str
    b: str
    j_hz: float
    bonds: int | None = None

    @property
    def pair(self) -> frozenset[str]:
        return frozenset((self.a, self.b))


@dataclass(frozen=True)
class SpinSystem:
    """Nuclei, their pairwise couplings, and the spectrometer field.

    Construction checks referential integrity, so an instance always has
    unique labels, no self-couplings and at most one coupling per pair.
    """

    nuclei: tuple[Nucleus, ...] = ()
    couplings: tuple[Coupling, ...] = ()
    proton_frequency_mhz: float = 500.0

    def __post_init__(self):
        object.__setattr__(self, "nuclei", tuple(self.nuclei))
        object.__setattr__(self, "couplings", tuple(self.couplings))
        if not self.proton_frequency_mhz > 0:
            raise ValueError("proton_frequency_mhz must be positive")
        seen = set()
        for nuc in self.nuclei:
            if nuc.label in seen:
                raise DuplicateLabel(nuc.label)
            seen.add(nuc.label)
        pairs = set()
        for c in self.couplings:
            for lab in (c.a, c.b):
                if lab not in seen:
                    raise UnknownLabel(lab)
            if c.a == c.b:
                raise ParseError(f"self-coupling on {c.a!r}")
            if c.pair in pairs:
                raise DuplicateCoupling(c.a, c.b)
            pairs.add(c.pair)

    @property
    def labels(self) -> list[str]:
        return [n.label for n in self.nuclei]

    def __len__(self) -> int:
        return len(self.nuclei)

    @cached_property
    def _by_label(self) -> dict[str, Nucleus]:
        return {n.label: n for n in self.nuclei}

    @cached_property
    def _j_table(self) -> dict[frozenset, float]:
        return {c.pair: c.j_hz for c in self.couplings}

    def nucleus(self, label: str) -> Nucleus:
        try:
            return self._by_label[label]
        except KeyError:
            raise UnknownLabel(label) from None

    def index(self, label: str) -> int:
        self.nucleus(label)
        return self.labels.index(label)

    def j(self, a: str, b: str) -> float:
        """Coupling between ``a`` and ``b`` in Hz, 0.0 when not listed."""
        self.nucleus(a)
        self.nucleus(b)
        return self._j_table.get(frozenset((a, b)), 0.0)

    def has_coupling(self, a: str, b: str) -> bool:
        return frozenset((a, b)) in self._j_table

    def isotopes(self) -> list[Isotope]:
        out = []
        for n in self.nuclei:
            if n.isotope not in out:
                out.append(n.isotope)
        return out

    def isotope_frequency_mhz(self, isotope: Isotope | str) -> float:
        iso = get_isotope(isotope)
        ratio = iso.base_frequency_per_tesla / ISOTOPES["1H"].base_frequency_per_tesla
        return self.proton_frequency_mhz * ratio

    def with_shifts(self, shifts: Mapping[str, float]) -> SpinSystem:
        for lab in shifts:
            self.nucleus(lab)
        nuclei = [
            replace(n, shift_ppm=float(shifts[n.label])) if n.label in shifts else n
            for n in self.nuclei
        ]
        return replace(self, nuclei=tuple(nuclei))

    def with_couplings(self, values: Mapping[tuple[str, str], float]) -> SpinSystem:
        """Return a copy with the J of existing pairs replaced."""
        wanted = {frozenset(k): float(v) for k, v in values.items()}
        for pair in wanted:
            if pair not in self._j_table:
                raise UnknownLabel("-".join(sorted(pair)))
        couplings = [
            replace(c, j_hz=wanted[c.pair]) if c.pair in wanted else c
            for c in self.couplings
        ]
        return replace(self, couplings=tuple(couplings))


@dataclass(frozen=True)
class ValidationReport:
    nucleus_count: int
    coupling_count: int
    issues: list[tuple[str, str]] = field(default_factory=list)

    @property
    def errors(self) -> list[str]:
        return [msg for sev, msg in self.issues if sev == "error"]

    @property
    def ok(self) -> bool:
        return not self.errors


# -- document format ---------------------------------------------------------


def _kv(token: str, key: str, lineno: int) -> str:
    k, sep, v = token.partition("=")
    if not sep or k != key:
        raise ParseError(f"expected {key}=<value>, got {token!r}", lineno)
    return v


def _num(text: str, kind, lineno: int, what: str):
    try:
        return kind(text)
    except ValueError:
        raise ParseError(f"bad {what} {text!r}", lineno) from None


def _label(text: str, lineno: int) -> str:
    if not LABEL_RE.match(text):
        raise ParseError(f"bad label {text!r}", lineno)
    return text


def parse_spin_system(text: str) -> SpinSystem:
    """Parse a spin-system document.

    A coupling pair repeated with the same J is accepted and stored once;
    repeated with a different J it raises :class:`DuplicateCoupling`.
    """
    proton_mhz = 500.0
    field_seen = False
    nuclei: list[Nucleus] = []
    labels: set[str] = set()
    couplings: dict[frozenset, Coupling] = {}

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        kw = tok[0].upper()
        if kw == "FIELD":
            if len(tok) != 2:
                raise ParseError("FIELD takes exactly proton_mhz=<float>", lineno)
            if field_seen:
                raise ParseError("FIELD given twice", lineno)
            proton_mhz = _num(_kv(tok[1], "proton_mhz", lineno), float, lineno, "field")
            if not proton_mhz > 0:
                raise ParseError("proton_mhz must be positive", lineno)
            field_seen = True
        elif kw == "NUCLEUS":
            if len(tok) not in (3, 4):
                raise ParseError("NUCLEUS <label> <isotope> [shift_ppm=<float>]", lineno)
            label = _label(tok[1], lineno)
            if label in labels:
                raise DuplicateLabel(label)
            try:
                iso = get_isotope(tok[2])
            except UnknownIsotope as exc:
                raise ParseError(str(exc), lineno) from None
            shift = None
            if len(tok) == 4:
                shift = _num(_kv(tok[3], "shift_ppm", lineno), float, lineno, "shift")
            nuclei.append(Nucleus(label, iso, shift))
            labels.add(label)
        elif kw == "COUPLING":
            if len(tok) not in (4, 5):
                raise ParseError("COUPLING <label> <label> <J_hz> [bonds=<int>]", lineno)
            a, b = _label(tok[1], lineno), _label(tok[2], lineno)
            for lab in (a, b):
                if lab not in labels:
                    raise UnknownLabel(lab)
            if a == b:
                raise ParseError(f"self-coupling on {a!r}", lineno)
            j = _num(tok[3], float, lineno, "coupling")
            bonds = None
            if len(tok) == 5:
                bonds = _num(_kv(tok[4], "bonds", lineno), int, lineno, "bond count")
                if bonds < 1:
                    raise ParseError("bonds must be a positive integer", lineno)
            pair = frozenset((a, b))
            if pair in couplings:
                if couplings[pair].j_hz != j:
                    raise DuplicateCoupling(a, b)
                continue
            couplings[pair] = Coupling(a, b, j, bonds)
        else:
            raise ParseError(f"unknown keyword {tok[0]!r}", lineno)

    return SpinSystem(tuple(nuclei), tuple(couplings.values()), proton_mhz)


def serialize_spin_system(sys: SpinSystem) -> str:
    lines = [f"FIELD proton_mhz={sys.proton_frequency_mhz!r}"]
    for n in sys.nuclei:
        line = f"NUCLEUS {n.label} {n.isotope.name}"
        if n.shift_ppm is not None:
            line += f" shift_ppm={n.shift_ppm!r}"
        lines.append(line)
    for c in sys.couplings:
        line = f"COUPLING {c.a} {c.b} {c.j_hz!r}"
        if c.bonds is not None:
            line += f" bonds={c.bonds}"
        lines.append(line)
    return "\n".join(lines) + "\n"


# -- checks ------------------------------------------------------------------


def validate(sys: SpinSystem) -> ValidationReport:
    issues: list[tuple[str, str]] = []
    if not sys.nuclei:
        issues.append(("info", "empty spin system"))
    coupled = {lab for c in sys.couplings for lab in (c.a, c.b)}
    for n in sys.nuclei:
        if not n.isotope.is_spin_half:
            issues.append(
                ("error", f"{n.label}: quadrupolar isotope unsupported ({n.isotope.name}, spin {n.isotope.spin})")
            )
        if n.shift_ppm is None:
            issues.append(("warning", f"{n.label}: missing chemical shift"))
        if n.label not in coupled and len(sys.nuclei) > 1:
            issues.append(("info", f"{n.label}: isolated nucleus (no couplings)"))
    return ValidationReport(len(sys.nuclei), len(sys.couplings), issues)


def offsets_hz(sys: SpinSystem, carrier_ppm: Mapping[str, float]) -> dict[str, float]:
    """Rotating-frame offset of every nucleus, in Hz.

    ``carrier_ppm`` is keyed by isotope name (``"1H"``) or :class:`Isotope`.
    """
    carriers = {get_isotope(k).name: float(v) for k, v in carrier_ppm.items()}
    out = {}
    for n in sys.nuclei:
        if n.shift_ppm is None:
            raise MissingShift(n.label)
        if n.isotope.name not in carriers:
            raise MissingCarrier(n.isotope.name)
        out[n.label] = (n.shift_ppm - carriers[n.isotope.name]) * sys.isotope_frequency_mhz(n.isotope)
    return out


def subsystem(sys: SpinSystem, labels: Iterable[str]) -> SpinSystem:
    """Restrict to ``labels`` (in the given order) and the couplings among them."""
    labels = list(labels)
    keep = set(labels)
    nuclei = tuple(sys.nucleus(lab) for lab in labels)
    couplings = tuple(c for c in sys.couplings if c.a in keep and c.b in keep)
    return SpinSystem(nuclei, couplings, sys.proton_frequency_mhz)


# -- bundled dataset -----------------------------------------------------------

COMPOUND_II_DOCUMENT = """\
# Compound II (vinyl derivative): J couplings in Hz, no chemical shifts given.
# proton_mhz is a synthetic default; the source gives no field.
FIELD proton_mhz=500.0
NUCLEUS HA 1H
NUCLEUS HB 1H
NUCLEUS HX 1H
NUCLEUS H3 1H
NUCLEUS H4 1H
NUCLEUS H5 1H
NUCLEUS H6 1H
NUCLEUS H7 1H
NUCLEUS Ho 1H
NUCLEUS Hm 1H
NUCLEUS Hp 1H
NUCLEUS C3 13C
NUCLEUS C4 13C
NUCLEUS C5 13C
NUCLEUS Cx 13C
NUCLEUS Cab 13C
NUCLEUS C6 13C
NUCLEUS C7 13C
NUCLEUS Co 13C
NUCLEUS Cm 13C
NUCLEUS Cp 13C
# 1H-1H, two bonds
COUPLING HA HB 1.22 bonds=2
# 1H-1H, three bonds
COUPLING HX HA 8.53 bonds=3
COUPLING HX HB 15.5 bonds=3
COUPLING H6 H7 15.4 bonds=3
COUPLING H3 H4 3.6 bonds=3
COUPLING H5 H4 2.6 bonds=3
COUPLING Ho Hm 6.9 bonds=3
COUPLING Hm Hp 7.0 bonds=3
# 1H-1H, four bonds
COUPLING H3 H5 1.0 bonds=4
COUPLING Ho Hp 1.8 bonds=4
COUPLING H6 H3 0.6 bonds=4
# 1H-1H, six bonds
COUPLING H7 H5 0.3 bonds=6
COUPLING HA H3 0.35 bonds=6
# 13C-1H, one bond
COUPLING C3 H3 171.2 bonds=1
COUPLING C4 H4 174.0 bonds=1
COUPLING C5 H5 185.9 bonds=1
COUPLING Cx HX 176.5 bonds=1
COUPLING Cab HA 164.3 bonds=1
COUPLING Cab HB 157.8 bonds=1
COUPLING C6 H6 153.3 bonds=1
COUPLING C7 H7 157.0 bonds=1
COUPLING Co Ho 159.6 bonds=1
COUPLING Cm Hm 161.1 bonds=1
COUPLING Cp Hp 161.1 bonds=1
"""


def bundled_compound_II() -> SpinSystem:
    """The 21-spin, 24-coupling compound II system (shifts absent)."""
    return parse_spin_system(COMPOUND_II_DOCUMENT)
