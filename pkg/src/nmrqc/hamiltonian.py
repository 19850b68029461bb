"""Spin-1/2 operator algebra and the Zeeman + J-coupling Hamiltonian.

Conventions
-----------
- Matrices are in Hz; ``2*pi`` only appears in :func:`propagator`.
- Product basis in lexicographic order with spin 0 as the most significant
  bit. Bit value 0 is |alpha> (Iz = +1/2), 1 is |beta> (Iz = -1/2).
- Each isotope has its own rotating frame (carrier). Heteronuclear couplings
  are always truncated to J Iz Iz.
"""

from __future__ import annotations

import enum
import os
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import QuadrupolarUnsupported, SizeCapExceeded
from .spinsys import SpinSystem, offsets_hz

__all__ = [
    "DEFAULT_CAP",
    "size_cap",
    "check_size",
    "CouplingMode",
    "Hamiltonian",
    "spin_half_operators",
    "total_fz",
    "basis_bits",
    "magnetization",
    "build_hamiltonian",
    "hamiltonian_matrix",
    "propagator",
    "unitary_from_hermitian",
]

DEFAULT_CAP = 12

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def size_cap() -> int:
    """Largest spin count allowed for dense matrices (``NMRQC_CAP`` overrides)."""
    env = os.environ.get("NMRQC_CAP")
    if env:
        try:
            return int(env)
        except ValueError:
            pass
    return DEFAULT_CAP


def check_size(n: int, cap: int | None = None) -> None:
    cap = size_cap() if cap is None else cap
    if n > cap:
        raise SizeCapExceeded(n, cap)


class CouplingMode(enum.Enum):
    ISOTROPIC = "isotropic"
    WEAKZZ = "weakzz"

    @classmethod
    def parse(cls, value: str | CouplingMode) -> CouplingMode:
        if isinstance(value, cls):
            return value
        return cls(value.lower())


@dataclass(frozen=True, eq=False)
class Hamiltonian:
    matrix: np.ndarray
    basis: tuple[str, ...]
    frame: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def n(self) -> int:
        return len(self.basis)


def _embed(op: np.ndarray, n: int, k: int) -> np.ndarray:
    left = np.eye(2 ** k)
    right = np.eye(2 ** (n - k - 1))
    return np.kron(np.kron(left, op), right)


def spin_half_operators(n: int, k: int, cap: int | None = None):
    """Return ``(Ix, Iy, Iz)`` for spin ``k`` of an ``n``-spin system."""
    check_size(n, cap)
    if not 0 <= k < n:
        raise IndexError(f"spin index {k} out of range for {n} spins")
    return tuple(_embed(s / 2, n, k) for s in (SIGMA_X, SIGMA_Y, SIGMA_Z))


def basis_bits(n: int) -> np.ndarray:
    """``(2**n, n)`` array of bit values; column k belongs to spin k."""
    states = np.arange(2 ** n)
    shifts = np.arange(n - 1, -1, -1)
    return (states[:, None] >> shifts[None, :]) & 1


def _iz_diagonals(n: int) -> np.ndarray:
    # (2**n, n) array of Iz eigenvalues, +1/2 for bit 0
    return 0.5 - basis_bits(n)


def magnetization(n: int) -> np.ndarray:
    """Total Fz quantum number of every basis state."""
    return _iz_diagonals(n).sum(axis=1)


def total_fz(n: int) -> np.ndarray:
    return np.diag(magnetization(n)).astype(complex)


def hamiltonian_matrix(
    offsets: Sequence[float],
    couplings: Mapping[tuple[int, int], float],
    isotropic_pairs: set[tuple[int, int]] | None = None,
    cap: int | None = None,
) -> np.ndarray:
    """Dense Hamiltonian from per-spin offsets and index-pair couplings (Hz).

    Pairs listed in ``isotropic_pairs`` get the full J I.I form; the rest
    only J IzIz.
    """
    n = len(offsets)
    check_size(n, cap)
    dim = 2 ** n
    z = _iz_diagonals(n)
    diag = z @ np.asarray(offsets, dtype=float)
    H = np.zeros((dim, dim), dtype=complex)
    states = np.arange(dim)
    isotropic_pairs = isotropic_pairs or set()
    for (i, j), J in couplings.items():
        diag = diag + J * z[:, i] * z[:, j]
        if (i, j) in isotropic_pairs or (j, i) in isotropic_pairs:
            # flip-flop: (I+I- + I-I+)/2 connects states differing in bits i and j
            bi = 1 << (n - 1 - i)
            bj = 1 << (n - 1 - j)
            differ = ((states & bi) > 0) != ((states & bj) > 0)
            src = states[differ]
            H[src ^ (bi | bj), src] += J / 2
    H[states, states] += diag
    return H


def build_hamiltonian(
    sys: SpinSystem,
    carrier_ppm: Mapping[str, float],
    mode: CouplingMode | str = CouplingMode.ISOTROPIC,
    cap: int | None = None,
) -> Hamiltonian:
    mode = CouplingMode.parse(mode)
    check_size(len(sys), cap)
    for nuc in sys.nuclei:
        if not nuc.isotope.is_spin_half:
            raise QuadrupolarUnsupported(nuc.label, nuc.isotope.name)
    offs = offsets_hz(sys, carrier_ppm)
    labels = sys.labels
    index = {lab: i for i, lab in enumerate(labels)}
    couplings = {}
    isotropic = set()
    for c in sys.couplings:
        pair = (index[c.a], index[c.b])
        couplings[pair] = c.j_hz
        homo = sys.nucleus(c.a).isotope == sys.nucleus(c.b).isotope
        if mode is CouplingMode.ISOTROPIC and homo:
            isotropic.add(pair)
    H = hamiltonian_matrix([offs[lab] for lab in labels], couplings, isotropic, cap=cap)
    frame = {str(k): float(v) for k, v in carrier_ppm.items()}
    return Hamiltonian(H, tuple(labels), frame)


def unitary_from_hermitian(H: np.ndarray, phase: float) -> np.ndarray:
    """``exp(-i * phase * H)`` for Hermitian ``H`` via eigendecomposition."""
    if phase == 0:
        return np.eye(H.shape[0], dtype=complex)
    w, V = np.linalg.eigh(H)
    return (V * np.exp(-1j * phase * w)) @ V.conj().T


def propagator(H: Hamiltonian | np.ndarray, t: float) -> np.ndarray:
    """Free-evolution unitary ``exp(-i 2 pi H t)`` for ``t`` in seconds."""
    if t < 0:
        raise ValueError("evolution time must be non-negative")
    M = H.matrix if isinstance(H, Hamiltonian) else np.asarray(H)
    return unitary_from_hermitian(M, 2 * np.pi * t)
