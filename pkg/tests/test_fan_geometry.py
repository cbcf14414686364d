"""Lelek fan legs, endpoint extensions, Cantor quotients and SVG output."""

import itertools
import json
import re
from fractions import Fraction

import pytest
from hypothesis import assume, given, settings, strategies as st

from mahavier_lab.chaos_diagnostics import PreconditionError
from mahavier_lab.fan_geometry import (
    CantorQuotientFan,
    ExtensionError,
    FanApproximation,
    LegAddress,
    address_fraction,
    cantor_quotient_embed,
    endpoint_density_probe,
    endpoint_extension,
    endpoint_sup,
    forward_part,
    leg_angle,
    leg_point,
    legs_json,
    lelek_approximation,
    render_fan,
    t_max,
    tail_start,
)
from mahavier_lab.mahavier_words import ForwardWord, TwoSidedWord, validate_word
from mahavier_lab.space_relation import (
    BranchMap,
    ClosedRelation,
    DomainError,
    IntervalUnion,
    NCPair,
    builtin_relation,
    lelek_relation,
)

PAIR = NCPair("1/2", "3")
L = lelek_relation(PAIR)
F = lelek_relation(PAIR, diagonal=True)


def count_lines(svg):
    return len(re.findall(r"<line ", svg))


# -- legs ---------------------------------------------------------------------------

def test_leg_point_examples():
    top = leg_point(LegAddress(("r", "rho", "1"), ("1/r",)), 0)
    assert set(top.coords) == {0.0}
    p = leg_point(LegAddress(("rho",)), 1 / 3)
    assert p.origin == 0 and p.coords == (1 / 3, 1.0)
    c = leg_point(LegAddress(("1",) * 4, ("1",) * 2), 0.6)
    assert c.coords == (0.6,) * 7 and c.origin == 2
    assert validate_word(c)
    with pytest.raises(DomainError):
        leg_point(LegAddress(("rho",)), 0.5)
    with pytest.raises(DomainError):
        LegAddress(("x",))
    with pytest.raises(DomainError):
        LegAddress((), ("r",))


def test_t_max_examples():
    assert t_max(LegAddress(("r",))) == 1
    assert t_max(LegAddress(("rho",))) == Fraction(1, 3)
    assert t_max(LegAddress(("rho", "rho", "r"))) == Fraction(1, 9)
    assert t_max(LegAddress(("r", "rho"), ("1/r",))) == Fraction(1, 2)
    assert t_max(LegAddress(())) == 1


def test_endpoint_sup_examples():
    addr = LegAddress(("rho", "r", "rho"))
    assert endpoint_sup(leg_point(addr, float(t_max(addr)))) == pytest.approx(1.0, abs=1e-15)
    assert endpoint_sup(TwoSidedWord((0.0,) * 5, 2)) == 0
    assert endpoint_sup(ForwardWord((0.37,) * 4)) == 0.37


_ADDR = st.builds(LegAddress,
                  st.lists(st.sampled_from(["1", "r", "rho"]), max_size=8).map(tuple),
                  st.lists(st.sampled_from(["1", "1/r", "1/rho"]), max_size=4).map(tuple))


@settings(max_examples=200, deadline=None)
@given(addr=_ADDR, frac=st.floats(0, 1))
def test_leg_points_validate_and_sup_arithmetic(addr, frac):
    t = float(t_max(addr)) * frac
    p = leg_point(addr, t)
    assert validate_word(p)
    prods = [float(q) for q in addr.products("forward") + addr.products("backward")]
    assert endpoint_sup(p) == pytest.approx(t * max([1.0] + prods), rel=1e-12, abs=1e-300)


@settings(max_examples=200, deadline=None)
@given(addr=_ADDR, delta=st.floats(1e-6, 1))
def test_t_max_is_tight(addr, delta):
    tm = t_max(addr)
    t = float(tm) + delta
    prods = addr.products("forward") + addr.products("backward")
    # above t_max either t itself or some running product pushes a coordinate past 1
    assert t > 1 or any(float(p) * t > 1 for p in prods)
    with pytest.raises(DomainError):
        leg_point(addr, t)


@settings(max_examples=200, deadline=None)
@given(a=_ADDR, b=_ADDR, f1=st.floats(0.01, 1), f2=st.floats(0.01, 1))
def test_distinct_legs_meet_only_at_top(a, b, f1, f2):
    n = max(len(a.forward), len(b.forward))
    m = max(len(a.backward), len(b.backward))
    # pad with the identity symbol so both legs live on the same window
    a = LegAddress(a.forward + ("1",) * (n - len(a.forward)), a.backward + ("1",) * (m - len(a.backward)))
    b = LegAddress(b.forward + ("1",) * (n - len(b.forward)), b.backward + ("1",) * (m - len(b.backward)))
    assume(a.products("forward") != b.products("forward") or a.products("backward") != b.products("backward"))
    p = leg_point(a, float(t_max(a)) * f1)
    q = leg_point(b, float(t_max(b)) * f2)
    assert p.coords != q.coords
    assert leg_point(a, 0).coords == leg_point(b, 0).coords


# -- endpoint extension -----------------------------------------------------------------

def test_extension_immediate_returns():
    w = ForwardWord((0.2, 1.0), L)
    assert endpoint_extension(w, PAIR, 0.05).coords == w.coords
    w = ForwardWord((0.6,), L)
    assert endpoint_extension(w, PAIR, 0.5).coords == w.coords
    with pytest.raises(DomainError):
        endpoint_extension(ForwardWord((0.0,), L), PAIR)
    with pytest.raises(DomainError):
        endpoint_extension(w, PAIR, 0)


def _exhaustive_best(start, n):
    """Best sup over all {r, rho}-strings of length <= n keeping every value <= 1."""
    best = start
    for length in range(1, n + 1):
        for syms in itertools.product((0.5, 3.0), repeat=length):
            v, ok, top = start, True, start
            for s in syms:
                v *= s
                if v > 1:
                    ok = False
                    break
                top = max(top, v)
            if ok:
                best = max(best, top)
    return best


def test_extension_against_exhaustive_oracle():
    e = endpoint_extension(ForwardWord((0.3,), L), PAIR, eps=0.01)
    assert endpoint_sup(e) > 0.99 and max(e.coords) <= 1
    assert validate_word(e)
    # nothing of the same length does better than 1, so greedy is within eps
    n = len(e) - 1
    best = _exhaustive_best(0.3, min(n, 14))
    assert best <= 1 and 1 - endpoint_sup(e) < 0.01
    assert endpoint_sup(e) >= best - 0.01


def test_extension_budget_error():
    with pytest.raises(ExtensionError) as err:
        endpoint_extension(ForwardWord((0.3,), L), PAIR, eps=1e-9, max_steps=5)
    assert 0.3 <= err.value.best_sup <= 1


@settings(max_examples=100, deadline=None)
@given(x=st.floats(1e-3, 1), eps=st.floats(0.01, 0.5))
def test_greedy_monotone_and_bounded(x, eps):
    e = endpoint_extension(ForwardWord((x,), L), PAIR, eps)
    assert max(e.coords) <= 1 and endpoint_sup(e) > 1 - eps
    sups = [max(e.coords[:k]) for k in range(1, len(e) + 1)]
    assert sups == sorted(sups)
    assert validate_word(e)


# -- approximations ---------------------------------------------------------------------

def test_lelek_depth_one():
    fan = lelek_approximation(PAIR, 1)
    got = {a.forward: t for a, t in fan.legs}
    assert got == {("r",): Fraction(1), ("rho",): Fraction(1, 3)}
    assert count_lines(render_fan(fan)) == 2
    with pytest.raises(DomainError):
        lelek_approximation(PAIR, 0)
    with pytest.raises(DomainError):
        lelek_approximation(("1/2", "4"), 2)


@pytest.mark.parametrize("depth", [1, 2, 5, 8])
def test_lelek_leg_count_and_validity(depth):
    fan = lelek_approximation(PAIR, depth)
    assert 0 < len(fan.legs) <= 2 ** depth
    for addr, tm in fan.legs:
        assert tm > 0
        assert validate_word(leg_point(addr, float(tm)), relation=F)
        assert validate_word(forward_part(leg_point(addr, float(tm))), relation=L)


def test_two_sided_backward_flag():
    fan = lelek_approximation(PAIR, 2, backward=("1/rho",))
    assert all(a.backward == ("1/rho",) for a, _ in fan.legs)
    assert all(validate_word(leg_point(a, float(t))) for a, t in fan.legs)


def test_legs_json_format():
    data = json.loads(legs_json(lelek_approximation(PAIR, 1)))
    assert data[1] == {"address": {"forward": ["rho"], "backward": []}, "t_max": "1/3"}


# -- probe ------------------------------------------------------------------------------

def test_tail_start():
    for eps in (0.5, 0.1, 0.05, 0.01):
        k0 = tail_start(eps)
        assert 2.0 ** (1 - k0) < eps <= 2.0 ** (2 - k0) or k0 == 1


def test_probe_examples():
    rep = endpoint_density_probe(PAIR, depth=4, eps=0.1, trials=30)
    assert rep.fraction == 1.0 and rep.max_distance < 0.1
    rep = endpoint_density_probe(PAIR, depth=8, eps=0.05, trials=100)
    assert rep.successes == 100 and rep.min_sup >= 0.95 and rep.max_coordinate <= 1
    assert json.loads(json.dumps(rep.to_json()))["fraction"] == 1.0


def test_probe_point_already_endpoint():
    addr = LegAddress(("rho", "rho"))
    w = forward_part(leg_point(addr, float(t_max(addr))))
    for eps in (0.5, 0.01, 1e-6):
        assert endpoint_extension(w, PAIR, eps).coords == w.coords


# -- Cantor quotients ------------------------------------------------------------------

def test_cantor_robinson_depth3():
    R = builtin_relation("robinson_3")
    fan = cantor_quotient_embed(R, (0, 2, 4), depth=3)
    assert 0 < len(fan.legs) <= 27
    svg = render_fan(fan)
    ends = set(re.findall(r'x1="([^"]+)" y1="([^"]+)"', svg))
    assert len(ends) == 1  # every leg hangs from the one collapsed class
    angles = [leg_angle(d, b) for d, b, _ in fan.labels()]
    assert len(set(angles)) == len(angles)


def test_cantor_itineraries_are_realisable():
    R = builtin_relation("robinson_3")
    fan = cantor_quotient_embed(R, (0, 2, 4), depth=3)
    its = {it for it, _ in fan.legs}
    assert (0, 0, 0) in its and (0, 1, 0) in its
    assert (0, 2, 0) not in its  # [0,1] never reaches [4,5] in one step


def test_cantor_spine_only_and_incompatible():
    X = IntervalUnion(((0, 0), (2, 2)))
    rel = ClosedRelation(X, (BranchMap.affine(0, 0, 1, 2),), True)
    fan = cantor_quotient_embed(rel, (0, 2))
    assert fan.legs == [] and count_lines(render_fan(fan)) == 0
    with pytest.raises(PreconditionError):
        cantor_quotient_embed(builtin_relation("devaney_5"), (0, 2), samples=300)


# -- rendering -------------------------------------------------------------------------

def test_render_determinism_and_file(tmp_path):
    fan = lelek_approximation(PAIR, 8)
    a, b = render_fan(fan), render_fan(lelek_approximation(PAIR, 8))
    assert a == b and count_lines(a) == len(fan.legs)
    out = tmp_path / "fan.svg"
    render_fan(fan, out)
    assert out.read_bytes() == a.encode()
    assert a.startswith("<?xml") and 'viewBox="0 0 400 220"' in a


def test_render_empty_fan():
    svg = render_fan(FanApproximation([], 1, PAIR))
    assert count_lines(svg) == 0 and svg.count("<circle") == 1
    svg = render_fan(CantorQuotientFan([], 1, 3, (0.0,)))
    assert count_lines(svg) == 0 and svg.count("<circle") == 1


def test_render_io_error(tmp_path):
    with pytest.raises(OSError):
        render_fan(lelek_approximation(PAIR, 1), tmp_path / "missing" / "fan.svg")


@settings(max_examples=200, deadline=None)
@given(a=st.lists(st.integers(1, 2), min_size=1, max_size=10),
       b=st.lists(st.integers(1, 2), min_size=1, max_size=10))
def test_angle_encoding_injective(a, b):
    # no zero digit, so every finite string is a distinct terminating expansion
    assume(a != b)
    assert address_fraction(a, 3) != address_fraction(b, 3)
    lo, hi = leg_angle(a, 3), leg_angle(b, 3)
    assert 15 <= min(lo, hi) and max(lo, hi) <= 165
