"""Transitivity, mixing, periodic and sensitivity witnesses, spine quotients."""

import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mahavier_lab.chaos_diagnostics import (
    SPINE,
    PreconditionError,
    WitnessError,
    certify_mixing,
    connecting_word,
    diagonal_collapse,
    diagonal_expand,
    mixing_pad,
    non_transitivity_witness,
    pad_word,
    periodic_point_from_witness,
    periodic_witness_devaney5,
    periodic_witness_search,
    quotient_canonical,
    quotient_compatibility_check,
    random_cylinder,
    sensitivity_witness,
    sensitivity_witness_robinson3,
    spine_lower_bound,
    spine_violation,
    transitivity_certificate,
)
from mahavier_lab.mahavier_words import (
    Cylinder,
    ForwardWord,
    TwoSidedWord,
    forward_impression,
    shift_forward,
    validate_word,
)
from mahavier_lab.space_relation import (
    SPINES,
    BranchMap,
    ClosedRelation,
    DomainError,
    IntervalUnion,
    builtin_relation,
)

D = builtin_relation("devaney_5")
R = builtin_relation("robinson_3")
K = builtin_relation("knudsen_3")
DIAG = ClosedRelation(IntervalUnion(((0, 1),)), (), True, "diag")


def random_pair(rel, rng):
    lo, hi = rel.space.intervals[rng.integers(len(rel.space))]
    x = lo + (hi - lo) * rng.random()
    img = rel.image(x)
    return x, img[rng.integers(len(img))]


# -- transitivity ---------------------------------------------------------------------

def test_transitivity_devaney_passes():
    rep = transitivity_certificate(D.without_diagonal(), samples=20, seed=3)
    assert rep.passed and rep.worst_delta <= 0.05
    assert json.loads(json.dumps(rep.to_json()))["passed"] is True


def test_transitivity_knudsen_fails():
    rep = transitivity_certificate(K.without_diagonal(), samples=6)
    assert not rep.passed


def test_transitivity_diagonal_only_fails():
    assert not transitivity_certificate(DIAG, samples=5, depth=4).passed


def test_transitivity_precondition():
    partial = ClosedRelation(IntervalUnion(((0, 1), (2, 3))), (BranchMap.affine(0, 1, 1, 0),))
    with pytest.raises(PreconditionError):
        transitivity_certificate(partial)


def test_transitivity_threads_agree():
    a = transitivity_certificate(D, samples=8, seed=1)
    b = transitivity_certificate(D, samples=8, seed=1, workers=4)
    assert a.samples == b.samples


def test_non_transitivity_witness_examples():
    lo, hi = non_transitivity_witness(K, 2.0)
    assert 0 <= lo < hi <= 1 and hi - lo >= 0.1
    assert not any(lo < p < hi for p in forward_impression(K, 2.0))
    lo, hi = non_transitivity_witness(K, 0.5)
    assert hi - lo >= 0.1
    assert not any(lo < p < hi for p in forward_impression(K, 0.5))
    assert non_transitivity_witness(D, 0.5) is None


# -- connecting words and mixing ---------------------------------------------------------

def test_connecting_word_devaney():
    rng = np.random.default_rng(4)
    for _ in range(5):
        U, V = random_cylinder(D, rng), random_cylinder(D, rng)
        cw = connecting_word(D, U, V)
        assert cw is not None and cw.verify()
        assert cw.m > U.max_index


def test_connecting_word_knudsen_unreachable():
    U, V = Cylinder(((1, 0.30, 0.31),)), Cylinder(((1, 0.50, 0.51),))
    assert connecting_word(K, U, V) is None


def _instance(rng):
    U, V = random_cylinder(D, rng), random_cylinder(D, rng)
    cw = connecting_word(D, U, V)
    return cw.base, U, V, cw.m


def test_mixing_pad_examples():
    base, U, V, m = _instance(np.random.default_rng(8))
    cert = mixing_pad(D, base, U, V, m, 5)
    assert cert.verified
    assert cert.padded_words[0].coords == base.coords
    w1 = cert.padded_words[1].coords
    assert len(w1) == len(base) + 1 and w1[m - 1] == w1[m] == base.coords[m - 1]
    assert len(cert.padded_words[-1]) == len(base) + 5 and cert.verified_range == (m, m + 5)
    for k, w in enumerate(cert.padded_words):
        assert shift_forward(w, m + k).coords == shift_forward(base, m).coords
    assert json.loads(json.dumps(cert.to_json()))["verified"] is True


def test_mixing_pad_errors():
    base, U, V, m = _instance(np.random.default_rng(9))
    with pytest.raises(PreconditionError):
        mixing_pad(D.without_diagonal(), base, U, V, m, 3)
    with pytest.raises(PreconditionError):
        mixing_pad(D, base, U, V, U.max_index, 3)
    far = Cylinder(((1, base.coords[0] + 0.5, base.coords[0] + 0.6),))
    with pytest.raises(WitnessError):
        mixing_pad(D, base, far, V, m, 3)


def test_certify_pipeline_reports():
    rep = certify_mixing(D, samples=10, pairs=3)
    assert rep["status"] == "PASS"
    assert all(m["verified"] and m["collapsed_base_valid_for_G"] for m in rep["mixing"])
    rep = certify_mixing(K, samples=6, pairs=1)
    assert rep["status"] == "FAIL" and rep["non_transitivity_witness"]["gap"] is not None


# -- collapse / expand ---------------------------------------------------------------------------

def test_collapse_examples():
    a, b, c = 0.1, 0.2, 0.3
    w, runs = diagonal_collapse((a, a, b, b, b, c))
    assert w.coords == (a, b, c) and runs == [2, 3, 1]
    w, runs = diagonal_collapse((a, b, c))
    assert w.coords == (a, b, c) and runs == [1, 1, 1]
    w, runs = diagonal_collapse((a,) * 4)
    assert w.coords == (a,) and runs == [4]


def test_expand_examples():
    assert diagonal_expand((0.1, 0.2), [1, 1]).coords == (0.1, 0.2)
    assert diagonal_expand((0.1, 0.2), [3, 1]).coords == (0.1, 0.1, 0.1, 0.2)
    with pytest.raises(DomainError):
        diagonal_expand((0.1, 0.2), [1])
    with pytest.raises(DomainError):
        diagonal_expand((0.1, 0.2), [1, 0])


@settings(max_examples=200, deadline=None)
@given(seed=st.integers(0, 10 ** 6), n=st.integers(1, 10), data=st.data())
def test_collapse_expand_round_trip(seed, n, data):
    G = D.without_diagonal()
    rng = np.random.default_rng(seed)
    # a G-word with no two equal neighbours, so runs are recovered exactly
    coords = [float(rng.random())]
    for _ in range(n - 1):
        img = [v for v in G.image(coords[-1]) if v != coords[-1]]
        coords.append(img[rng.integers(len(img))])
    w = ForwardWord(tuple(coords), G)
    pattern = data.draw(st.lists(st.integers(1, 4), min_size=n, max_size=n))
    e = diagonal_expand(w, pattern)
    assert validate_word(e, relation=D)
    back, runs = diagonal_collapse(e)
    assert back.coords == w.coords and runs == pattern
    assert validate_word(back, relation=G)


# -- periodic points ---------------------------------------------------------------------------------

def test_periodic_case_table_examples():
    w = periodic_witness_devaney5(2.25, 0.0625)
    assert w.n == 3 and w.z.coords == (0.0625, 2.0625, 4.0625, 2.25)
    w = periodic_witness_devaney5(0.7, 0.7)
    assert w.n == 1 and w.z.coords == (0.7, 0.7)
    # y = x + 2 from [0,1]: the one-step return (2.5, 0.5) is not in F, the loop goes round
    w = periodic_witness_devaney5(0.5, 2.5)
    assert w.n == 3 and w.verify()
    assert not D.contains(2.5, 0.5)
    with pytest.raises(DomainError):
        periodic_witness_devaney5(0.5, 3.5)


def test_periodic_every_case():
    rng = np.random.default_rng(0)
    seen = set()
    for _ in range(400):
        x, y = random_pair(D, rng)
        w = periodic_witness_devaney5(x, y)
        assert w.verify() and w.n <= 3
        assert w.z.coords[0] == y and w.z.coords[-1] == x
        seen.add((D.space.locate(x), round(y - x, 6) == 0))
    assert len(seen) == 10  # five intervals, diagonal and non-diagonal


def test_periodic_search_agrees_with_table():
    rng = np.random.default_rng(1)
    for _ in range(100):
        x, y = random_pair(D, rng)
        s = periodic_witness_search(D, x, y)
        assert s is not None and s.verify()
        assert s.n <= periodic_witness_devaney5(x, y).n


def test_periodic_search_knudsen():
    s = periodic_witness_search(K, 2.5, 0.25)
    assert s is not None and s.verify() and s.n == 3
    assert periodic_witness_search(K, 0.4, 0.4).n == 1
    with pytest.raises(DomainError):
        periodic_witness_search(K, 0.5, 0.25)  # (0.5, 0.25) is not in F


def test_periodic_point_from_witness():
    w = periodic_witness_devaney5(0.3, 0.3)
    p = periodic_point_from_witness(w, 3)
    assert p.coords == (0.3,) * 3
    w = periodic_witness_devaney5(2.25, 0.0625)
    p = periodic_point_from_witness(w, 2)
    assert len(p) == 8 and validate_word(p) and w.period == 4
    assert shift_forward(p, 4).coords == p.coords[:4]
    with pytest.raises(DomainError):
        periodic_point_from_witness(w, 0)


# -- sensitivity -------------------------------------------------------------------------------------

def test_sensitivity_examples():
    U = Cylinder(((1, 0.0, 1.0), (2, 0.0, 1.0)))
    w = sensitivity_witness_robinson3(U)
    assert w.verify()
    assert w.separation >= 1 and w.spine_distance >= 9 / 20 and w.epsilon == 0.25
    assert U.contains(w.x) and U.contains(w.y)
    assert w.x.coords[:2] == w.y.coords[:2]
    # z_n in (0, 1): x continues with the constant z_n
    assert set(w.x.coords[2:]) == {w.x.coords[1]}


@pytest.mark.parametrize("rel", [R, K])
def test_sensitivity_random_cylinders(rel):
    rng = np.random.default_rng(7)
    for _ in range(10):
        U = random_cylinder(rel, rng, 3, 0.05)
        w = sensitivity_witness(rel, U)
        assert w.verify() and w.separation >= 1 and w.spine_distance >= 9 / 20
        assert w.k0_steps < 10 ** 4


def test_sensitivity_errors():
    with pytest.raises(WitnessError):
        sensitivity_witness_robinson3(Cylinder(((1, 0.0, 1.0), (2, 4.0, 5.0))))
    with pytest.raises(WitnessError):
        sensitivity_witness_robinson3(Cylinder(((1, 0.2, 0.3),)), max_steps=1)


def test_spine_lower_bound():
    assert spine_lower_bound((4.9,), (0, 2, 4)) == pytest.approx(0.45)
    assert spine_lower_bound((0, 2, 4), (0, 2, 4)) == 0


# -- quotients ------------------------------------------------------------------------------------

def test_quotient_canonical_examples():
    spine = (0, 2, 4)
    assert quotient_canonical(ForwardWord((0, 2, 4, 2)), spine) is SPINE
    w = ForwardWord((0, 2, 0.5))
    assert quotient_canonical(w, spine) is w
    assert quotient_canonical(ForwardWord((0.0,) * 5), spine) is SPINE
    assert SPINE.representative(w).coords == (0.0, 0.0, 0.0)
    t = TwoSidedWord((0, 2, 4), 1)
    assert quotient_canonical(t, spine) is SPINE and SPINE.representative(t).origin == 1


def test_quotient_compatibility_examples():
    assert quotient_compatibility_check(R, (0, 2, 4), samples=300)
    assert quotient_compatibility_check(D, SPINES["devaney_5"], samples=300)
    assert not quotient_compatibility_check(D, (0, 2), samples=300)
    bad = spine_violation(D, (0, 2), samples=300)
    assert bad is not None and quotient_canonical(shift_forward(bad), (0, 2)) is SPINE


def test_quotient_structural_oracle():
    # exact check: preimages of a spine value are spine values iff compatible
    for name, spine in SPINES.items():
        rel = builtin_relation(name)
        assert all(any(abs(p - s) < 1e-12 for s in spine) for v in spine for p in rel.preimage(v))
    assert any(all(abs(p - s) > 1e-12 for s in (0, 2)) for v in (0, 2) for p in D.preimage(v))
