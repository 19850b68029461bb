"""Idealized pulse sequences, their propagators, and CNOT/Toffoli compilation.

Pulses are instantaneous and perfectly selective. A delay evolves only under
the couplings and offsets it names; everything else is assumed refocused.
Compiled gates equal the ideal gates up to a global phase, which is what
:func:`fidelity` measures.

Sequence text format, one element per line::

    REGISTER HB+HX+HA
    PULSE HA y -1.5707963267948966
    DELAY 0.05 couplings=HX-HA offsets=none
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence, Union

import numpy as np

from .errors import (
    DimensionMismatch,
    NoCoupling,
    NoCouplingPath,
    ParseError,
)
from .hamiltonian import check_size, basis_bits
from .spinsys import SpinSystem, offsets_hz, subsystem

__all__ = [
    "IdealPulse",
    "Delay",
    "PulseSequence",
    "GateReport",
    "element_propagator",
    "sequence_propagator",
    "compile_cnot",
    "compile_toffoli",
    "fidelity",
    "verify",
    "cnot_matrix",
    "toffoli_matrix",
    "parse_sequence",
    "serialize_sequence",
]

_HALF_PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex) / 2,
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex) / 2,
    "z": np.array([[1, 0], [0, -1]], dtype=complex) / 2,
}


@dataclass(frozen=True)
class IdealPulse:
    targets: tuple[str, ...]
    axis: str
    angle: float

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(self.targets))
        if self.axis not in _HALF_PAULI:
            raise ValueError(f"pulse axis must be x, y or z, not {self.axis!r}")


@dataclass(frozen=True)
class Delay:
    t: float
    active_couplings: tuple[tuple[str, str], ...] = ()
    active_offsets: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "active_couplings", tuple(tuple(p) for p in self.active_couplings))
        object.__setattr__(self, "active_offsets", tuple(self.active_offsets))
        if self.t < 0:
            raise ValueError("delay time must be non-negative")


PulseElement = Union[IdealPulse, Delay]


@dataclass(frozen=True)
class PulseSequence:
    elements: tuple[PulseElement, ...] = ()
    register: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "elements", tuple(self.elements))
        object.__setattr__(self, "register", tuple(self.register))

    def __add__(self, other: PulseSequence) -> PulseSequence:
        reg = list(self.register)
        reg += [lab for lab in other.register if lab not in reg]
        return PulseSequence(self.elements + other.elements, tuple(reg))

    @property
    def total_delay_s(self) -> float:
        return float(sum(e.t for e in self.elements if isinstance(e, Delay)))

    def labels(self) -> list[str]:
        seen = list(self.register)
        for e in self.elements:
            labs = e.targets if isinstance(e, IdealPulse) else (
                [x for p in e.active_couplings for x in p] + list(e.active_offsets)
            )
            for lab in labs:
                if lab not in seen:
                    seen.append(lab)
        return seen


@dataclass(frozen=True, eq=False)
class GateReport:
    compiled: np.ndarray
    ideal: np.ndarray
    fidelity: float
    total_delay_s: float


# -- propagators -----------------------------------------------------------------


def _rotation(axis: str, angle: float) -> np.ndarray:
    # exp(-i angle sigma/2) = cos(angle/2) - i sin(angle/2) sigma
    return math.cos(angle / 2) * np.eye(2) - 2j * math.sin(angle / 2) * _HALF_PAULI[axis]


def element_propagator(
    sys: SpinSystem,
    element: PulseElement,
    carrier_ppm: Mapping[str, float] | None = None,
    cap: int | None = None,
) -> np.ndarray:
    """Unitary of a single pulse or delay on the full ``2**N`` space.

    ``carrier_ppm`` is only consulted for delays with active offsets; it
    defaults to 0 ppm for every isotope.
    """
    n = len(sys)
    check_size(n, cap)
    labels = sys.labels
    if isinstance(element, IdealPulse):
        for lab in element.targets:
            sys.nucleus(lab)
        R = _rotation(element.axis, element.angle)
        U = np.ones((1, 1), dtype=complex)
        for lab in labels:
            U = np.kron(U, R if lab in element.targets else np.eye(2))
        return U

    z = 0.5 - basis_bits(n)
    phase = np.zeros(2 ** n)
    for a, b in element.active_couplings:
        if not sys.has_coupling(a, b):
            sys.nucleus(a)
            sys.nucleus(b)
            raise NoCoupling(a, b)
        phase += sys.j(a, b) * z[:, sys.index(a)] * z[:, sys.index(b)]
    if element.active_offsets:
        for lab in element.active_offsets:
            sys.nucleus(lab)
        if carrier_ppm is None:
            carrier_ppm = {iso.name: 0.0 for iso in sys.isotopes()}
        offs = offsets_hz(subsystem(sys, element.active_offsets), carrier_ppm)
        for lab in element.active_offsets:
            phase += offs[lab] * z[:, sys.index(lab)]
    return np.diag(np.exp(-2j * np.pi * element.t * phase))


def sequence_propagator(
    sys: SpinSystem,
    seq: PulseSequence,
    carrier_ppm: Mapping[str, float] | None = None,
    cap: int | None = None,
) -> np.ndarray:
    """Ordered product of element propagators, first element applied first."""
    check_size(len(sys), cap)
    for lab in seq.register:
        sys.nucleus(lab)
    U = np.eye(2 ** len(sys), dtype=complex)
    for e in seq.elements:
        U = element_propagator(sys, e, carrier_ppm, cap) @ U
    return U


def fidelity(U: np.ndarray, V: np.ndarray) -> float:
    """Global-phase-insensitive overlap ``|Tr(U^dag V)| / dim``."""
    U = np.asarray(U)
    V = np.asarray(V)
    if U.shape != V.shape or U.ndim != 2 or U.shape[0] != U.shape[1]:
        raise DimensionMismatch(f"cannot compare {U.shape} with {V.shape}")
    return float(abs(np.vdot(U, V)) / U.shape[0])


# -- ideal gates -----------------------------------------------------------------


def cnot_matrix() -> np.ndarray:
    U = np.eye(4, dtype=complex)
    U[2:, 2:] = [[0, 1], [1, 0]]
    return U


def toffoli_matrix() -> np.ndarray:
    U = np.eye(8, dtype=complex)
    U[6:, 6:] = [[0, 1], [1, 0]]
    return U


# -- compilation -----------------------------------------------------------------


def compile_cnot(sys: SpinSystem, control: str, target: str) -> PulseSequence:
    """CNOT from one J evolution of ``1/(2|J|)`` between selective pulses.

    ``Ry(+pi/2)_t . CZ . Ry(-pi/2)_t`` with the controlled-Z made from the
    IzIz evolution plus z rotations on both spins that cancel the
    sign-dependent part of the phase.
    """
    sys.nucleus(control)
    sys.nucleus(target)
    J = sys.j(control, target)
    if J == 0:
        raise NoCoupling(control, target)
    s = math.copysign(1.0, J)
    return PulseSequence(
        (
            IdealPulse((target,), "y", -math.pi / 2),
            Delay(1 / (2 * abs(J)), ((control, target),)),
            IdealPulse((control, target), "z", -s * math.pi / 2),
            IdealPulse((target,), "y", math.pi / 2),
        ),
        (control, target),
    )


def _cx(sys: SpinSystem, x: str, y: str, trio: Sequence[str]) -> PulseSequence:
    if sys.j(x, y) != 0:
        return compile_cnot(sys, x, y)
    # CX(x->y) = CX(m->y) CX(x->m) CX(m->y) CX(x->m), rightmost first
    (m,) = [lab for lab in trio if lab not in (x, y)]
    if sys.j(x, m) == 0 or sys.j(m, y) == 0:
        raise NoCouplingPath(f"{x} and {y} are uncoupled and cannot be routed through {m}")
    return (
        compile_cnot(sys, x, m)
        + compile_cnot(sys, m, y)
        + compile_cnot(sys, x, m)
        + compile_cnot(sys, m, y)
    )


def _single(label: str, *pulses: tuple[str, float]) -> PulseSequence:
    return PulseSequence(tuple(IdealPulse((label,), ax, ang) for ax, ang in pulses), (label,))


def _hadamard(q: str) -> PulseSequence:
    # H = Ry(pi/2) Z up to phase
    return _single(q, ("z", math.pi), ("y", math.pi / 2))


def _t(q: str, dagger: bool = False) -> PulseSequence:
    return _single(q, ("z", -math.pi / 4 if dagger else math.pi / 4))


def compile_toffoli(sys: SpinSystem, a: str, b: str, c: str) -> PulseSequence:
    """Toffoli with controls ``a``, ``b`` and target ``c``.

    Uses the six-CNOT decomposition with T/T-dagger and Hadamard rotations.
    A CNOT between an uncoupled pair is routed through the third spin with
    four CNOTs, so a chain a-b-c (J_ac = 0) costs 12 CNOTs instead of 6.
    """
    trio = (a, b, c)
    for lab in trio:
        sys.nucleus(lab)
    if len(set(trio)) != 3:
        raise NoCouplingPath("Toffoli needs three distinct spins")
    coupled = [sys.j(p, q) != 0 for p, q in ((a, b), (b, c), (a, c))]
    if sum(coupled) < 2:
        raise NoCouplingPath(f"{a}, {b}, {c} are not connected by couplings")

    steps = [
        _hadamard(c),
        _cx(sys, b, c, trio),
        _t(c, dagger=True),
        _cx(sys, a, c, trio),
        _t(c),
        _cx(sys, b, c, trio),
        _t(c, dagger=True),
        _cx(sys, a, c, trio),
        _t(b),
        _t(c),
        _hadamard(c),
        _cx(sys, a, b, trio),
        _t(a),
        _t(b, dagger=True),
        _cx(sys, a, b, trio),
    ]
    seq = PulseSequence((), trio)
    for s in steps:
        seq = seq + s
    return PulseSequence(seq.elements, trio)


def verify(
    sys: SpinSystem,
    seq: PulseSequence,
    ideal: np.ndarray,
    carrier_ppm: Mapping[str, float] | None = None,
) -> GateReport:
    """Compare a sequence with an ideal gate on the register subspace.

    The propagator is computed on the register spins only (in register
    order), which is exact because delays only act on named couplings.
    """
    register = seq.register or tuple(seq.labels())
    sub = subsystem(sys, register)
    U = sequence_propagator(sub, seq, carrier_ppm)
    return GateReport(U, ideal, fidelity(ideal, U), seq.total_delay_s)


# -- text format -----------------------------------------------------------------


def serialize_sequence(seq: PulseSequence) -> str:
    out = []
    if seq.register:
        out.append("REGISTER " + "+".join(seq.register))
    for e in seq.elements:
        if isinstance(e, IdealPulse):
            out.append(f"PULSE {'+'.join(e.targets)} {e.axis} {e.angle!r}")
        else:
            cpl = ";".join(f"{a}-{b}" for a, b in e.active_couplings) or "none"
            offs = ",".join(e.active_offsets) or "none"
            out.append(f"DELAY {e.t!r} couplings={cpl} offsets={offs}")
    return "\n".join(out) + "\n"


def _field(token: str, key: str, lineno: int) -> str:
    k, sep, v = token.partition("=")
    if not sep or k != key:
        raise ParseError(f"expected {key}=..., got {token!r}", lineno)
    return v


def parse_sequence(text: str) -> PulseSequence:
    register: tuple[str, ...] = ()
    elements: list[PulseElement] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        kw = tok[0].upper()
        try:
            if kw == "REGISTER" and len(tok) == 2:
                register = tuple(tok[1].split("+"))
            elif kw == "PULSE" and len(tok) == 4:
                elements.append(IdealPulse(tuple(tok[1].split("+")), tok[2].lower(), float(tok[3])))
            elif kw == "DELAY" and len(tok) == 4:
                cpl = _field(tok[2], "couplings", lineno)
                offs = _field(tok[3], "offsets", lineno)
                pairs = []
                if cpl != "none":
                    for item in cpl.split(";"):
                        a, sep, b = item.partition("-")
                        if not sep or not a or not b:
                            raise ParseError(f"bad coupling pair {item!r}", lineno)
                        pairs.append((a, b))
                labels = () if offs == "none" else tuple(offs.split(","))
                elements.append(Delay(float(tok[1]), tuple(pairs), labels))
            else:
                raise ParseError(f"cannot parse {line!r}", lineno)
        except ValueError as exc:
            raise ParseError(str(exc), lineno) from None
    return PulseSequence(tuple(elements), register)
