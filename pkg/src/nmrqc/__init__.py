"""Spin-system simulation and screening for liquid-state NMR quantum computing."""

from .errors import NMRQCError
from .hamiltonian import CouplingMode, build_hamiltonian, propagator, spin_half_operators
from .spinsys import (
    SpinSystem,
    bundled_compound_II,
    offsets_hz,
    parse_spin_system,
    serialize_spin_system,
    validate,
)

__version__ = "0.1.0"

__all__ = [
    "NMRQCError",
    "CouplingMode",
    "SpinSystem",
    "build_hamiltonian",
    "bundled_compound_II",
    "offsets_hz",
    "parse_spin_system",
    "propagator",
    "serialize_spin_system",
    "spin_half_operators",
    "validate",
]
