"""Qubit-register screening over a coupling network.

A Toffoli triple is three spins A-B-C where two couplings are large enough to
drive conditional evolution and the third is small enough to count as absent.
Chains generalize this to k spins: a simple path of strong couplings whose
non-adjacent members are all (nearly) uncoupled.

"Nonzero" and "zero" are thresholds (``j_chain_min_hz``, ``j_cross_max_hz``)
because measured couplings are never exactly zero.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

from .errors import CombinationCapExceeded
from .spinsys import SpinSystem

__all__ = [
    "RegisterCriteria",
    "RegisterCandidate",
    "score_register",
    "find_toffoli_triples",
    "find_chain_registers",
    "candidates_to_csv",
    "DEFAULT_COMBINATION_CAP",
]

DEFAULT_COMBINATION_CAP = 5_000_000
EPS = 1e-9


@dataclass(frozen=True)
class RegisterCriteria:
    j_chain_min_hz: float = 5.0
    j_cross_max_hz: float = 1.5
    min_resolvability: float = 3.0
    strict_order: bool = False  # require the first chain coupling to exceed the second

    def __post_init__(self):
        if not self.j_chain_min_hz > 0:
            raise ValueError("j_chain_min_hz must be positive")
        if self.j_cross_max_hz < 0:
            raise ValueError("j_cross_max_hz must be non-negative")
        if not self.j_cross_max_hz < self.j_chain_min_hz:
            raise ValueError("j_cross_max_hz must be below j_chain_min_hz")
        if not self.min_resolvability > 1:
            raise ValueError("min_resolvability must exceed 1")

    def scaled(self, factor: float) -> RegisterCriteria:
        return RegisterCriteria(
            self.j_chain_min_hz * factor,
            self.j_cross_max_hz * factor,
            self.min_resolvability,
            self.strict_order,
        )


@dataclass(frozen=True)
class RegisterCandidate:
    labels: tuple[str, ...]
    chain_js: tuple[float, ...]
    cross_js: tuple[float, ...]
    resolvability_margins: tuple[float, ...] | None  # None: shifts missing
    score: float

    @property
    def label_set(self) -> frozenset[str]:
        return frozenset(self.labels)

    @property
    def indeterminate(self) -> bool:
        return self.resolvability_margins is None


def score_register(candidate: RegisterCandidate, criteria: RegisterCriteria) -> float:
    """Smallest normalized margin over all clauses; 1.0 means exactly on a threshold."""
    terms = [min(candidate.chain_js) / criteria.j_chain_min_hz]
    if candidate.cross_js:
        safe = max(criteria.j_cross_max_hz, EPS)
        terms.append(safe / max(max(candidate.cross_js), EPS))
    if candidate.resolvability_margins:
        terms.append(min(candidate.resolvability_margins) / criteria.min_resolvability)
    return min(terms)


def _margins(sys: SpinSystem, labels, chain_js) -> tuple[float, ...] | None:
    nuclei = [sys.nucleus(lab) for lab in labels]
    if any(n.shift_ppm is None for n in nuclei):
        return None
    jmax = max(chain_js)
    out = []
    for na, nb in itertools.combinations(nuclei, 2):
        if na.isotope != nb.isotope:
            out.append(math.inf)
            continue
        dnu = abs(na.shift_ppm - nb.shift_ppm) * sys.isotope_frequency_mhz(na.isotope)
        out.append(dnu / jmax)
    return tuple(out)


def _orient(labels: tuple[str, ...], chain_js: tuple[float, ...]):
    """Canonical direction: larger end coupling first, ties lexicographic."""
    rev = labels[::-1]
    rjs = chain_js[::-1]
    if (chain_js[0], chain_js[-1]) != (rjs[0], rjs[-1]):
        if chain_js[0] > rjs[0]:
            return labels, chain_js
        return rev, rjs
    return (labels, chain_js) if labels <= rev else (rev, rjs)


def _evaluate_path(sys: SpinSystem, path, criteria: RegisterCriteria):
    """Check one ordered path against every clause; None if it fails."""
    chain = tuple(abs(sys.j(a, b)) for a, b in zip(path, path[1:]))
    if any(j < criteria.j_chain_min_hz for j in chain):
        return None
    cross = tuple(
        abs(sys.j(path[i], path[k]))
        for i in range(len(path))
        for k in range(i + 2, len(path))
    )
    if any(j > criteria.j_cross_max_hz for j in cross):
        return None
    labels, chain = _orient(tuple(path), chain)
    if criteria.strict_order and len(chain) >= 2 and not chain[0] > chain[1]:
        return None
    # recompute cross in canonical order
    cross = tuple(
        abs(sys.j(labels[i], labels[k]))
        for i in range(len(labels))
        for k in range(i + 2, len(labels))
    )
    margins = _margins(sys, labels, chain)
    if margins is not None and min(margins) < criteria.min_resolvability:
        return None
    cand = RegisterCandidate(labels, chain, cross, margins, 0.0)
    return RegisterCandidate(labels, chain, cross, margins, score_register(cand, criteria))


def _rank(cands) -> list[RegisterCandidate]:
    return sorted(cands, key=lambda c: (-c.score, c.labels))


def find_toffoli_triples(sys: SpinSystem, criteria: RegisterCriteria | None = None) -> list[RegisterCandidate]:
    """All spin triples whose couplings form a two-edge chain, best score first."""
    criteria = criteria or RegisterCriteria()
    out = []
    for trio in itertools.combinations(sys.labels, 3):
        strong = [
            frozenset(p) for p in itertools.combinations(trio, 2)
            if abs(sys.j(*p)) >= criteria.j_chain_min_hz
        ]
        if len(strong) != 2:
            continue
        (middle,) = strong[0] & strong[1]
        ends = [lab for lab in trio if lab != middle]
        cand = _evaluate_path(sys, (ends[0], middle, ends[1]), criteria)
        if cand is not None:
            out.append(cand)
    return _rank(out)


def find_chain_registers(
    sys: SpinSystem,
    k: int,
    criteria: RegisterCriteria | None = None,
    combination_cap: int = DEFAULT_COMBINATION_CAP,
) -> list[RegisterCandidate]:
    """Simple k-spin paths over strong couplings with weak cross couplings."""
    criteria = criteria or RegisterCriteria()
    if k < 2:
        raise ValueError("k must be at least 2")
    n = len(sys)
    if k > n:
        return []
    needed = math.comb(n, k)
    if needed > combination_cap:
        raise CombinationCapExceeded(needed, combination_cap)

    adj: dict[str, list[str]] = {lab: [] for lab in sys.labels}
    for c in sys.couplings:
        if abs(c.j_hz) >= criteria.j_chain_min_hz:
            adj[c.a].append(c.b)
            adj[c.b].append(c.a)

    found: dict[tuple[str, ...], RegisterCandidate] = {}

    def extend(path: list[str], members: set[str]):
        if len(path) == k:
            cand = _evaluate_path(sys, path, criteria)
            if cand is not None:
                found.setdefault(cand.labels, cand)
            return
        for nxt in adj[path[-1]]:
            if nxt in members:
                continue
            # any earlier member strongly coupled to nxt would violate the cross clause
            if any(abs(sys.j(p, nxt)) > criteria.j_cross_max_hz for p in path[:-1]):
                continue
            path.append(nxt)
            members.add(nxt)
            extend(path, members)
            members.discard(nxt)
            path.pop()

    for start in sys.labels:
        extend([start], {start})
    return _rank(found.values())


def candidates_to_csv(cands) -> str:
    out = ["labels,chain_js,cross_js,score"]
    for c in cands:
        chain = ";".join(f"{j:g}" for j in c.chain_js)
        cross = ";".join(f"{j:g}" for j in c.cross_js)
        out.append(f"{'+'.join(c.labels)},{chain},{cross},{c.score:.6f}")
    return "\n".join(out) + "\n"
