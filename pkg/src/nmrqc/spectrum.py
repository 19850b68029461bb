"""Exact and first-order spectra, the first-order validity check, coupling
graph pruning, and Lorentzian rendering.

Intensities are high-temperature transition moments ``|<f|F+|i>|^2`` with
no Boltzmann weighting, so an isolated spin gives one line of intensity 1.
Line frequencies are ``E_f - E_i`` in the rotating frame of the channel.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import EmptyChannel, InvalidGrid, MissingCarrier, MissingShift, ParseError
from .hamiltonian import CouplingMode, build_hamiltonian, check_size, magnetization
from .spinsys import Isotope, SpinSystem, get_isotope, subsystem

__all__ = [
    "Line",
    "LineList",
    "PairCheck",
    "FirstOrderReport",
    "SpectrumTrace",
    "exact_lines",
    "exact_lines_pruned",
    "first_order_lines",
    "first_order_report",
    "prune",
    "render_lineshape",
    "lorentzian",
    "match_lines",
]

# lines closer than this are one (degenerate) transition
MERGE_TOL_HZ = 1e-7
REL_INTENSITY_FLOOR = 1e-9


@dataclass(frozen=True)
class Line:
    frequency_hz: float
    intensity: float
    assignment: object = None

    def __post_init__(self):
        if self.intensity < 0:
            raise ValueError("line intensity must be non-negative")


@dataclass(frozen=True)
class LineList:
    channel: Isotope
    lines: tuple[Line, ...] = ()

    def __post_init__(self):
        ordered = tuple(sorted(self.lines, key=lambda ln: ln.frequency_hz))
        object.__setattr__(self, "lines", ordered)

    def __len__(self):
        return len(self.lines)

    def __iter__(self):
        return iter(self.lines)

    @property
    def frequencies(self) -> np.ndarray:
        return np.array([ln.frequency_hz for ln in self.lines], dtype=float)

    @property
    def intensities(self) -> np.ndarray:
        return np.array([ln.intensity for ln in self.lines], dtype=float)

    @property
    def total_intensity(self) -> float:
        return float(self.intensities.sum())

    def to_csv(self) -> str:
        out = ["frequency_hz,intensity"]
        out += [f"{ln.frequency_hz:.6f},{ln.intensity:.6f}" for ln in self.lines]
        return "\n".join(out) + "\n"

    @classmethod
    def from_csv(cls, text: str, channel: Isotope | str = "1H") -> LineList:
        rows = _read_csv(text, ("frequency_hz", "intensity"))
        return cls(get_isotope(channel), tuple(Line(f, i) for f, i in rows))


@dataclass(frozen=True)
class PairCheck:
    a: str
    b: str
    j_hz: float
    ratio: float | None  # None when shifts are missing
    passed: bool | None

    @property
    def status(self) -> str:
        if self.passed is None:
            return "indeterminate"
        return "pass" if self.passed else "fail"


@dataclass(frozen=True)
class FirstOrderReport:
    threshold: float
    pairs: tuple[PairCheck, ...]

    def get(self, a: str, b: str) -> PairCheck:
        for p in self.pairs:
            if {p.a, p.b} == {a, b}:
                return p
        raise KeyError((a, b))

    @property
    def all_pass(self) -> bool | None:
        """True/False overall verdict, None if any pair is indeterminate."""
        if any(p.passed is None for p in self.pairs):
            return None
        return all(p.passed for p in self.pairs)

    def to_csv(self) -> str:
        out = ["a,b,j_hz,ratio,status"]
        for p in self.pairs:
            ratio = "" if p.ratio is None else ("inf" if math.isinf(p.ratio) else f"{p.ratio:.6f}")
            out.append(f"{p.a},{p.b},{p.j_hz:.6f},{ratio},{p.status}")
        return "\n".join(out) + "\n"


@dataclass(frozen=True, eq=False)
class SpectrumTrace:
    grid: np.ndarray
    amplitude: np.ndarray
    fwhm_hz: float

    def __post_init__(self):
        if len(self.grid) != len(self.amplitude):
            raise InvalidGrid("grid and amplitude lengths differ")
        if not self.fwhm_hz > 0:
            raise InvalidGrid("fwhm must be positive")

    def to_csv(self) -> str:
        out = ["frequency_hz,amplitude"]
        out += [f"{f:.9f},{a:.12e}" for f, a in zip(self.grid, self.amplitude)]
        return "\n".join(out) + "\n"

    @classmethod
    def from_csv(cls, text: str, fwhm_hz: float = 1.0) -> SpectrumTrace:
        rows = _read_csv(text, ("frequency_hz", "amplitude"))
        if len(rows) < 2:
            raise InvalidGrid("trace needs at least two points")
        grid = np.array([r[0] for r in rows])
        amp = np.array([r[1] for r in rows])
        return cls(grid, amp, fwhm_hz)


def _read_csv(text: str, header: tuple[str, str]) -> list[tuple[float, float]]:
    reader = csv.reader(io.StringIO(text))
    rows = [r for r in reader if r and not r[0].startswith("#")]
    if not rows or tuple(c.strip() for c in rows[0]) != header:
        raise ParseError(f"expected CSV header {','.join(header)}")
    out = []
    for lineno, r in enumerate(rows[1:], start=2):
        try:
            out.append((float(r[0]), float(r[1])))
        except (ValueError, IndexError):
            raise ParseError(f"bad CSV row {r!r}", lineno) from None
    return out


# -- exact spectrum ------------------------------------------------------------


def _channel_members(sys: SpinSystem, channel) -> tuple[Isotope, list[int]]:
    iso = get_isotope(channel)
    members = [i for i, n in enumerate(sys.nuclei) if n.isotope == iso]
    if not members:
        raise EmptyChannel(iso.name)
    return iso, members


def _merge(freqs: np.ndarray, ints: np.ndarray, assign: list) -> list[Line]:
    order = np.argsort(freqs, kind="stable")
    lines: list[Line] = []
    group_f, group_i, group_a = [], [], []

    def flush():
        if group_f:
            w = np.asarray(group_i)
            f = float(np.dot(group_f, w) / w.sum()) if w.sum() > 0 else float(np.mean(group_f))
            best = group_a[int(np.argmax(w))]
            lines.append(Line(f, float(w.sum()), best))

    for k in order:
        if group_f and freqs[k] - group_f[0] > MERGE_TOL_HZ:
            flush()
            group_f, group_i, group_a = [], [], []
        group_f.append(freqs[k])
        group_i.append(ints[k])
        group_a.append(assign[k])
    flush()
    return lines


def exact_lines(
    sys: SpinSystem,
    carrier_ppm: Mapping[str, float],
    channel: Isotope | str,
    mode: CouplingMode | str = CouplingMode.ISOTROPIC,
    cap: int | None = None,
) -> LineList:
    """Diagonalize the Hamiltonian and list transitions observed on ``channel``.

    The Hamiltonian conserves total Fz, so each magnetization sector is
    diagonalized separately and F+ only connects sector M to M+1.
    Degenerate transitions are merged and lines weaker than 1e-9 of the
    strongest are dropped.
    """
    check_size(len(sys), cap)
    iso, members = _channel_members(sys, channel)
    H = build_hamiltonian(sys, carrier_ppm, mode, cap=cap).matrix
    n = len(sys)
    dim = 2 ** n
    M = magnetization(n)
    levels = np.unique(M)
    sectors = {m: np.flatnonzero(M == m) for m in levels}
    eig = {}
    for m, idx in sectors.items():
        w, V = np.linalg.eigh(H[np.ix_(idx, idx)])
        eig[m] = (w, V)

    states = np.arange(dim)
    Fp = np.zeros((dim, dim))
    for k in members:
        bk = 1 << (n - 1 - k)
        src = states[(states & bk) > 0]
        Fp[src ^ bk, src] += 1.0

    # global eigenstate numbering follows sector order
    offsets, pos = {}, 0
    for m in levels:
        offsets[m] = pos
        pos += len(sectors[m])

    freqs, ints, assign = [], [], []
    for m_lo, m_hi in zip(levels[:-1], levels[1:]):
        w_i, V_i = eig[m_lo]
        w_f, V_f = eig[m_hi]
        T = V_f.conj().T @ Fp[np.ix_(sectors[m_hi], sectors[m_lo])] @ V_i
        inten = np.abs(T) ** 2
        f_idx, i_idx = np.nonzero(inten > 0)
        freqs.append(w_f[f_idx] - w_i[i_idx])
        ints.append(inten[f_idx, i_idx])
        assign += [(offsets[m_lo] + i, offsets[m_hi] + f) for f, i in zip(f_idx, i_idx)]
    if not assign:
        return LineList(iso, ())
    freqs = np.concatenate(freqs)
    ints = np.concatenate(ints)
    floor = REL_INTENSITY_FLOOR * ints.max()
    keep = ints >= floor
    lines = _merge(freqs[keep], ints[keep], [a for a, k in zip(assign, keep) if k])
    floor = REL_INTENSITY_FLOOR * max(ln.intensity for ln in lines)
    return LineList(iso, tuple(ln for ln in lines if ln.intensity >= floor))


def exact_lines_pruned(
    sys: SpinSystem,
    carrier_ppm: Mapping[str, float],
    channel: Isotope | str,
    j_min_hz: float,
    mode: CouplingMode | str = CouplingMode.ISOTROPIC,
    cap: int | None = None,
) -> LineList:
    """Exact lines of every connected component left after :func:`prune`."""
    iso = get_isotope(channel)
    _, components = prune(sys, j_min_hz)
    lines: list[Line] = []
    found = False
    for comp in components:
        if not any(n.isotope == iso for n in comp.nuclei):
            continue
        found = True
        lines += exact_lines(comp, carrier_ppm, iso, mode, cap=cap).lines
    if not found:
        raise EmptyChannel(iso.name)
    return LineList(iso, tuple(lines))


# -- first-order spectrum --------------------------------------------------------


def _offset(sys: SpinSystem, label: str, carrier_ppm: Mapping[str, float]) -> float:
    nuc = sys.nucleus(label)
    if nuc.shift_ppm is None:
        raise MissingShift(label)
    carriers = {get_isotope(k).name: v for k, v in carrier_ppm.items()}
    if nuc.isotope.name not in carriers:
        raise MissingCarrier(nuc.isotope.name)
    return (nuc.shift_ppm - carriers[nuc.isotope.name]) * sys.isotope_frequency_mhz(nuc.isotope)


def first_order_lines(
    sys: SpinSystem, carrier_ppm: Mapping[str, float], channel: Isotope | str
) -> LineList:
    """Multiplet-rule spectrum: each coupling partner splits a line by +-J/2.

    No diagonalization is done, so this works at any system size.
    """
    iso, members = _channel_members(sys, channel)
    lines: list[Line] = []
    for k in members:
        label = sys.nuclei[k].label
        freqs = np.array([_offset(sys, label, carrier_ppm)])
        for c in sys.couplings:
            if label not in (c.a, c.b) or c.j_hz == 0:
                continue
            half = c.j_hz / 2
            freqs = np.concatenate([freqs - half, freqs + half])
        share = 1.0 / len(freqs)
        lines += [Line(float(f), share, label) for f in freqs]
    return LineList(iso, tuple(lines))


def first_order_report(
    sys: SpinSystem,
    carrier_ppm: Mapping[str, float] | None = None,
    threshold: float = 0.1,
) -> FirstOrderReport:
    """Ratio |J| / |nu_i - nu_j| for every coupled pair.

    Shift differences are converted to Hz at the system's field, so the
    carrier does not matter. Heteronuclear pairs always pass.
    """
    checks = []
    for c in sys.couplings:
        na, nb = sys.nucleus(c.a), sys.nucleus(c.b)
        if na.isotope != nb.isotope:
            checks.append(PairCheck(c.a, c.b, c.j_hz, 0.0, True))
            continue
        if na.shift_ppm is None or nb.shift_ppm is None:
            checks.append(PairCheck(c.a, c.b, c.j_hz, None, None))
            continue
        dnu = abs(na.shift_ppm - nb.shift_ppm) * sys.isotope_frequency_mhz(na.isotope)
        J = abs(c.j_hz)
        if dnu == 0:
            ratio = math.inf if J > 0 else 0.0
        else:
            ratio = J / dnu
        checks.append(PairCheck(c.a, c.b, c.j_hz, ratio, ratio <= threshold))
    return FirstOrderReport(threshold, tuple(checks))


# -- coupling graph --------------------------------------------------------------


def prune(sys: SpinSystem, j_min_hz: float) -> tuple[SpinSystem, list[SpinSystem]]:
    """Drop couplings with |J| < ``j_min_hz`` and split into connected components.

    Components are ordered by their first nucleus in ``sys``; nuclei keep their
    original relative order.
    """
    if j_min_hz < 0:
        raise ValueError("j_min_hz must be non-negative")
    kept = tuple(c for c in sys.couplings if abs(c.j_hz) >= j_min_hz)
    pruned = SpinSystem(sys.nuclei, kept, sys.proton_frequency_mhz)

    adj: dict[str, set[str]] = {lab: set() for lab in sys.labels}
    for c in kept:
        adj[c.a].add(c.b)
        adj[c.b].add(c.a)
    seen: set[str] = set()
    components = []
    for lab in sys.labels:
        if lab in seen:
            continue
        stack, comp = [lab], {lab}
        while stack:
            for nxt in adj[stack.pop()]:
                if nxt not in comp:
                    comp.add(nxt)
                    stack.append(nxt)
        seen |= comp
        components.append(subsystem(pruned, [x for x in sys.labels if x in comp]))
    return pruned, components


# -- lineshape -------------------------------------------------------------------


def lorentzian(x, x0: float, fwhm: float):
    """Unit-area Lorentzian."""
    gamma = fwhm / 2
    return (gamma / np.pi) / ((np.asarray(x) - x0) ** 2 + gamma ** 2)


def render_lineshape(
    lines: LineList | Iterable[Line],
    fwhm_hz: float,
    grid_min: float | None = None,
    grid_max: float | None = None,
    points: int | None = None,
    grid: Sequence[float] | None = None,
) -> SpectrumTrace:
    """Sum of unit-area Lorentzians weighted by line intensity.

    Either pass ``grid_min, grid_max, points`` or an explicit uniform ``grid``.
    """
    if not fwhm_hz > 0:
        raise InvalidGrid("fwhm must be positive")
    if grid is None:
        if points is None or points < 2 or not grid_min < grid_max:
            raise InvalidGrid("need points >= 2 and grid_min < grid_max")
        grid = np.linspace(grid_min, grid_max, int(points))
    else:
        grid = np.asarray(grid, dtype=float)
        if grid.ndim != 1 or len(grid) < 2:
            raise InvalidGrid("grid must be one-dimensional with >= 2 points")
    lines = list(lines)
    if lines:
        f0 = np.array([ln.frequency_hz for ln in lines])
        w = np.array([ln.intensity for ln in lines])
        amp = lorentzian(grid[:, None], f0[None, :], fwhm_hz) @ w
    else:
        amp = np.zeros_like(grid)
    return SpectrumTrace(grid, amp, float(fwhm_hz))


def match_lines(a: Sequence[float], b: Sequence[float]) -> list[tuple[int, int]]:
    """Greedy nearest-frequency pairing of two line position lists.

    Repeatedly takes the globally closest unpaired pair; deterministic under
    ties (lowest indices first).
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if not len(a) or not len(b):
        return []
    dist = np.abs(a[:, None] - b[None, :])
    order = np.argsort(dist, axis=None, kind="stable")
    used_a, used_b, pairs = set(), set(), []
    for flat in order:
        i, j = divmod(int(flat), len(b))
        if i in used_a or j in used_b:
            continue
        pairs.append((i, j))
        used_a.add(i)
        used_b.add(j)
        if len(pairs) == min(len(a), len(b)):
            break
    return sorted(pairs)
