import itertools
import math

import numpy as np
import pytest

from helpers import make_system
from nmrqc.errors import CombinationCapExceeded
from nmrqc.registers import (
    RegisterCandidate,
    RegisterCriteria,
    candidates_to_csv,
    find_chain_registers,
    find_toffoli_triples,
    score_register,
)
from nmrqc.spinsys import Coupling, Nucleus, SpinSystem, bundled_compound_II, get_isotope

VINYL_CRIT = RegisterCriteria(j_chain_min_hz=5.0, j_cross_max_hz=1.5)


def oracle(sys, k, crit):
    """Every ordered k-subset checked clause by clause; returns label sets."""
    found = set()
    for perm in itertools.permutations(sys.labels, k):
        chain = [abs(sys.j(a, b)) for a, b in zip(perm, perm[1:])]
        cross = [abs(sys.j(perm[i], perm[j])) for i in range(k) for j in range(i + 2, k)]
        if min(chain) < crit.j_chain_min_hz or any(c > crit.j_cross_max_hz for c in cross):
            continue
        nuclei = [sys.nucleus(l) for l in perm]
        if all(n.shift_ppm is not None for n in nuclei):
            jmax = max(chain)
            ok = True
            for a, b in itertools.combinations(nuclei, 2):
                if a.isotope == b.isotope:
                    dnu = abs(a.shift_ppm - b.shift_ppm) * sys.isotope_frequency_mhz(a.isotope)
                    ok &= dnu / jmax >= crit.min_resolvability
            if not ok:
                continue
        found.add(frozenset(perm))
    return found


def random_graph(rng, n, with_shifts):
    labels = [f"N{i}" for i in range(n)]
    nuclei = []
    for lab in labels:
        iso = get_isotope("1H" if rng.random() < 0.7 else "13C")
        shift = float(rng.uniform(0, 10)) if with_shifts else None
        nuclei.append(Nucleus(lab, iso, shift))
    couplings = []
    for a, b in itertools.combinations(labels, 2):
        r = rng.random()
        if r < 0.35:
            couplings.append(Coupling(a, b, float(rng.choice([-1, 1]) * rng.uniform(5, 20))))
        elif r < 0.5:
            couplings.append(Coupling(a, b, float(rng.uniform(0, 3))))
    return SpinSystem(tuple(nuclei), tuple(couplings), 500.0)


def test_compound_ii_contains_vinyl_chain():
    cands = find_toffoli_triples(bundled_compound_II(), VINYL_CRIT)
    match = [c for c in cands if c.labels == ("HB", "HX", "HA")]
    assert len(match) == 1
    c = match[0]
    assert c.chain_js == (15.5, 8.53)
    assert c.cross_js == (1.22,)
    assert c.indeterminate
    assert c.score == pytest.approx(min(8.53 / 5, 1.5 / 1.22))


def test_triangle_has_no_candidates():
    s = make_system([0, 300, 600], {(0, 1): 10, (1, 2): 10, (0, 2): 10})
    assert find_toffoli_triples(s, VINYL_CRIT) == []


def test_constructed_chain():
    s = make_system([0, 300, 600], {(0, 1): 10, (1, 2): 7}, labels=["1", "2", "3"])
    crit = RegisterCriteria(5.0, 1.5, min_resolvability=3)
    cands = find_toffoli_triples(s, crit)
    assert [c.labels for c in cands] == [("1", "2", "3")]
    assert cands[0].resolvability_margins == pytest.approx((30, 60, 30))


def test_resolvability_rejects_crowded_shifts():
    s = make_system([0, 20, 40], {(0, 1): 10, (1, 2): 7})
    assert find_toffoli_triples(s, RegisterCriteria(5.0, 1.5, 3.0)) == []


def test_strict_order_flag():
    s = make_system([0, 300, 600], {(0, 1): 8, (1, 2): 8})
    assert len(find_toffoli_triples(s, VINYL_CRIT)) == 1
    strict = RegisterCriteria(5.0, 1.5, 3.0, strict_order=True)
    assert find_toffoli_triples(s, strict) == []


def test_pair_register():
    s = make_system([0, 500], {(0, 1): 10})
    cands = find_chain_registers(s, 2, RegisterCriteria(5, 1))
    assert len(cands) == 1 and cands[0].cross_js == ()


def test_k_larger_than_system():
    assert find_chain_registers(make_system([0, 1], {}), 3, VINYL_CRIT) == []


def test_combination_cap():
    with pytest.raises(CombinationCapExceeded) as exc:
        find_chain_registers(bundled_compound_II(), 4, VINYL_CRIT, combination_cap=100)
    assert exc.value.needed == math.comb(21, 4) and exc.value.cap == 100


def test_chain_k3_equals_triples_on_compound():
    s = bundled_compound_II()
    a = {c.label_set for c in find_toffoli_triples(s, VINYL_CRIT)}
    b = {c.label_set for c in find_chain_registers(s, 3, VINYL_CRIT)}
    assert a == b and a


@pytest.mark.parametrize("seed", range(20))
def test_completeness_against_bruteforce(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(3, 9))
    s = random_graph(rng, n, with_shifts=bool(seed % 2))
    for k in (2, 3, 4):
        if k > n:
            continue
        got = find_chain_registers(s, k, VINYL_CRIT)
        assert {c.label_set for c in got} == oracle(s, k, VINYL_CRIT)
        assert len(got) == len({c.label_set for c in got})
    triples = find_toffoli_triples(s, VINYL_CRIT)
    assert {c.label_set for c in triples} == oracle(s, 3, VINYL_CRIT)


@pytest.mark.parametrize("seed", range(10))
def test_soundness(seed):
    rng = np.random.default_rng(500 + seed)
    s = random_graph(rng, 7, with_shifts=True)
    for c in find_chain_registers(s, 3, VINYL_CRIT):
        labels = c.labels
        for (a, b), j in zip(zip(labels, labels[1:]), c.chain_js):
            assert abs(s.j(a, b)) == j >= VINYL_CRIT.j_chain_min_hz
        assert all(x <= VINYL_CRIT.j_cross_max_hz for x in c.cross_js)
        if c.resolvability_margins is not None:
            assert min(c.resolvability_margins) >= VINYL_CRIT.min_resolvability
        assert c.score == score_register(c, VINYL_CRIT)


@pytest.mark.parametrize("factor", [0.1, 3.0, 17.0])
def test_scale_invariance(factor):
    s = bundled_compound_II()
    scaled = SpinSystem(s.nuclei, tuple(Coupling(c.a, c.b, c.j_hz * factor, c.bonds) for c in s.couplings))
    base = [c.labels for c in find_toffoli_triples(s, VINYL_CRIT)]
    other = [c.labels for c in find_toffoli_triples(scaled, VINYL_CRIT.scaled(factor))]
    assert base == other


def test_determinism_and_ranking():
    s = bundled_compound_II()
    first = find_chain_registers(s, 3, VINYL_CRIT)
    assert first == find_chain_registers(s, 3, VINYL_CRIT)
    keys = [(-c.score, c.labels) for c in first]
    assert keys == sorted(keys)


def test_score_examples():
    crit = RegisterCriteria(5.0, 1.5)
    c = RegisterCandidate(("HB", "HX", "HA"), (15.5, 8.53), (1.22,), None, 0.0)
    # min(8.53/5 = 1.706, 1.5/1.22 = 1.22950819672...)
    assert score_register(c, crit) == pytest.approx(1.2295081967213115, rel=1e-12)
    edge = RegisterCandidate(("a", "b", "c"), (5.0, 5.0), (1.5,), (3.0, 4.0, 3.0), 0.0)
    assert score_register(edge, RegisterCriteria(5.0, 1.5, 3.0)) == 1.0
    pair = RegisterCandidate(("a", "b"), (7.5,), (), None, 0.0)
    assert score_register(pair, crit) == 1.5


def test_score_monotone_in_chain_coupling():
    crit = RegisterCriteria(5.0, 1.5)
    scores = [
        score_register(RegisterCandidate(("a", "b", "c"), (j, 9.0), (0.5,), None, 0.0), crit)
        for j in np.linspace(5, 30, 26)
    ]
    assert all(b >= a for a, b in zip(scores, scores[1:]))


def test_criteria_validation():
    with pytest.raises(ValueError):
        RegisterCriteria(1.0, 2.0)
    with pytest.raises(ValueError):
        RegisterCriteria(5.0, 1.0, min_resolvability=1.0)


def test_csv():
    cands = find_toffoli_triples(bundled_compound_II(), VINYL_CRIT)
    text = candidates_to_csv(cands)
    assert text.splitlines()[0] == "labels,chain_js,cross_js,score"
    assert "HB+HX+HA,15.5;8.53,1.22,1.229508" in text.splitlines()
