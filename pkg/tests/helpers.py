"""Independent reference constructions used as test oracles.

Nothing here imports the package's numerical code; operators are built from
explicit Pauli matrices and diagonalized with the general (non-Hermitian)
eigen solver.
"""

import itertools

import numpy as np

from nmrqc.spinsys import Coupling, Nucleus, SpinSystem, get_isotope

PX = np.array([[0, 1], [1, 0]], dtype=complex) / 2
PY = np.array([[0, -1j], [1j, 0]], dtype=complex) / 2
PZ = np.array([[1, 0], [0, -1]], dtype=complex) / 2


def embed(op, n, k):
    mats = [op if i == k else np.eye(2) for i in range(n)]
    out = mats[0]
    for m in mats[1:]:
        out = np.kron(out, m)
    return out


def brute_hamiltonian(offsets, couplings, isotropic=True):
    """offsets: list of Hz; couplings: {(i, j): J}."""
    n = len(offsets)
    H = np.zeros((2 ** n, 2 ** n), dtype=complex)
    for i, nu in enumerate(offsets):
        H = H + nu * embed(PZ, n, i)
    for (i, j), J in couplings.items():
        ops = (PX, PY, PZ) if isotropic else (PZ,)
        for P in ops:
            H = H + J * embed(P, n, i) @ embed(P, n, j)
    return H


def brute_lines(H, n, members, tol=1e-6):
    """Transitions |<f|F+|i>|^2 with frequency E_f - E_i, degenerate ones summed."""
    w, V = np.linalg.eig(H)
    w = w.real
    # orthonormalize within degenerate blocks via QR of each block
    order = np.argsort(w)
    w, V = w[order], V[:, order]
    blocks = []
    start = 0
    for k in range(1, len(w) + 1):
        if k == len(w) or w[k] - w[start] > 1e-9:
            blocks.append(range(start, k))
            start = k
    for b in blocks:
        q, _ = np.linalg.qr(V[:, list(b)])
        V[:, list(b)] = q
    Fp = sum(embed(PX, n, k) + 1j * embed(PY, n, k) for k in members)
    T = V.conj().T @ Fp @ V
    raw = []
    for f, i in itertools.product(range(len(w)), repeat=2):
        inten = abs(T[f, i]) ** 2
        if inten > 1e-12:
            raw.append((w[f] - w[i], inten))
    raw.sort()
    merged = []
    for f, inten in raw:
        if merged and abs(f - merged[-1][0]) < tol:
            merged[-1][1] += inten
        else:
            merged.append([f, inten])
    mx = max(i for _, i in merged)
    return [(f, i) for f, i in merged if i >= 1e-9 * mx]


def make_system(offsets_hz, couplings, isotope="1H", proton_mhz=500.0, labels=None):
    """Protons at given offsets (carrier 0 ppm) with {(i, j): J} couplings."""
    iso = get_isotope(isotope)
    mhz = proton_mhz * iso.base_frequency_per_tesla / get_isotope("1H").base_frequency_per_tesla
    labels = labels or [f"S{i}" for i in range(len(offsets_hz))]
    nuclei = [Nucleus(lab, iso, nu / mhz) for lab, nu in zip(labels, offsets_hz)]
    cpl = [Coupling(labels[i], labels[j], J) for (i, j), J in couplings.items()]
    return SpinSystem(tuple(nuclei), tuple(cpl), proton_mhz)


def random_system(rng, n, p_couple=0.7, isotopes=("1H",)):
    offsets = list(rng.uniform(-200, 200, n))
    couplings = {}
    for i, j in itertools.combinations(range(n), 2):
        if rng.random() < p_couple:
            couplings[(i, j)] = float(rng.uniform(-20, 20))
    iso = [isotopes[rng.integers(len(isotopes))] for _ in range(n)]
    nuclei = []
    labels = [f"S{i}" for i in range(n)]
    for lab, nu, name in zip(labels, offsets, iso):
        I = get_isotope(name)
        mhz = 500.0 * I.base_frequency_per_tesla / get_isotope("1H").base_frequency_per_tesla
        nuclei.append(Nucleus(lab, I, nu / mhz))
    cpl = [Coupling(labels[i], labels[j], J) for (i, j), J in couplings.items()]
    return SpinSystem(tuple(nuclei), tuple(cpl), 500.0)
