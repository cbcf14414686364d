"""Legs, endpoints and planar pictures of the Lelek fan and of Cantor-fan quotients.

A leg of the Lelek fan is addressed by forward symbols ``a(k)`` in
``{1, r, rho}`` (and optionally backward symbols in ``{1, 1/r, 1/rho}``); the
leg is the arc ``t -> (..., b2 b1 t, b1 t, t; a1 t, a2 a1 t, ...)`` for
``0 <= t <= t_max``.  Rendering draws each leg as a segment from the top at an
angle read off its address.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np

from .chaos_diagnostics import PreconditionError, spine_violation
from .mahavier_words import ForwardWord, TwoSidedWord, forward_metric, validate_word
from .space_relation import (
    ClosedRelation,
    DEFAULT_PAIR,
    DomainError,
    NCPair,
    fraction_str,
    intersect,
    lelek_relation,
)

FORWARD_SYMBOLS = ("1", "r", "rho")
BACKWARD_SYMBOLS = ("1", "1/r", "1/rho")
ANGLE_RANGE = (15.0, 165.0)  # degrees
VIEW_W, VIEW_H = 400, 220
ORIGIN = (200.0, 210.0)
SCALE = 190.0


class ExtensionError(RuntimeError):
    """The endpoint extension ran out of steps; ``best_sup`` is the closest it got."""

    def __init__(self, msg: str, best_sup: float):
        super().__init__(msg)
        self.best_sup = best_sup


def _default_pair() -> NCPair:
    return NCPair(*DEFAULT_PAIR)


@dataclass(frozen=True)
class LegAddress:
    forward: tuple[str, ...]
    backward: tuple[str, ...] = ()
    pair: NCPair | None = None

    def __post_init__(self):
        object.__setattr__(self, "forward", tuple(self.forward))
        object.__setattr__(self, "backward", tuple(self.backward))
        if self.pair is None:
            object.__setattr__(self, "pair", _default_pair())
        for s in self.forward:
            if s not in FORWARD_SYMBOLS:
                raise DomainError(f"forward symbol {s!r} not in {FORWARD_SYMBOLS}")
        for s in self.backward:
            if s not in BACKWARD_SYMBOLS:
                raise DomainError(f"backward symbol {s!r} not in {BACKWARD_SYMBOLS}")

    def products(self, side: str = "forward") -> list[Fraction]:
        """Exact running products ``a1, a2 a1, ...`` (or the backward ones)."""
        out, p = [], Fraction(1)
        for s in (self.forward if side == "forward" else self.backward):
            p *= self.pair.factor(s)
            out.append(p)
        return out

    def to_json(self) -> dict:
        return {"forward": list(self.forward), "backward": list(self.backward)}


def t_max(addr: LegAddress) -> Fraction:
    """Largest ``t`` keeping every coordinate of the leg in ``[0, 1]``."""
    best = Fraction(1)
    for p in addr.products("forward") + addr.products("backward"):
        best = min(best, 1 / p)
    return best


def leg_point(addr: LegAddress, t: float) -> TwoSidedWord:
    """The point of leg ``addr`` at parameter ``t``, origin coordinate ``t``."""
    bound = t_max(addr)
    if not 0 <= t <= float(bound) + 1e-15:
        raise DomainError(f"t={t} outside [0, {fraction_str(bound)}]")
    t = float(t)
    fwd = [min(float(p) * t, 1.0) for p in addr.products("forward")]
    bwd = [min(float(p) * t, 1.0) for p in addr.products("backward")]
    rel = lelek_relation(addr.pair, diagonal=True)
    return TwoSidedWord(tuple(bwd[::-1]) + (t,) + tuple(fwd), len(bwd), rel)


def forward_part(w: TwoSidedWord) -> ForwardWord:
    """Coordinates ``x(0), x(1), ...`` as a one-sided word."""
    return ForwardWord(w.coords[w.origin:], w.relation)


def endpoint_sup(w: TwoSidedWord | ForwardWord) -> float:
    """Largest coordinate in the window; a leg point is an endpoint when it is 1."""
    return max(w.coords) if len(w.coords) else 0.0


def endpoint_extension(w: ForwardWord, pair: NCPair | None = None, eps: float = 0.05,
                       max_steps: int = 1000) -> ForwardWord:
    """Append ``rho`` while the value stays <= 1, else ``r``, until the sup passes ``1 - eps``.

    Only coordinates after the current end change, so a word truncated at
    index ``k0 - 1`` moves by at most ``2**-k0`` in the forward metric.
    """
    pair = pair or _default_pair()
    if eps <= 0:
        raise DomainError("eps must be positive")
    if not len(w) or w.coords[-1] <= 0:
        raise DomainError("last coordinate must be positive")
    rho, r = float(pair.rho), float(pair.r)
    coords = list(w.coords)
    best = max(coords)
    steps = 0
    while best <= 1 - eps:
        if steps >= max_steps:
            raise ExtensionError(f"sup {best:.6f} after {max_steps} steps", best)
        v = coords[-1]
        v = v * rho if v * rho <= 1 else v * r
        coords.append(v)
        best = max(best, v)
        steps += 1
    return ForwardWord(tuple(coords), w.relation or lelek_relation(pair))


@dataclass
class FanApproximation:
    legs: list[tuple[LegAddress, Fraction]]
    depth: int
    pair: NCPair

    def labels(self) -> list[tuple[tuple[int, ...], int, float]]:
        """(digits, base, radius) per leg, the input of :func:`render_fan`."""
        digit = {"r": 1, "rho": 2, "1": 3, "1/r": 4, "1/rho": 5}
        base = 3 if all(set(a.forward) <= {"r", "rho"} and not a.backward for a, _ in self.legs) else 6
        return [(tuple(digit[s] for s in a.forward + a.backward), base, float(t)) for a, t in self.legs]

    def to_json(self) -> list[dict]:
        return [{"address": a.to_json(), "t_max": fraction_str(t)} for a, t in self.legs]


def lelek_approximation(pair: NCPair | tuple | None = None, depth: int = 8,
                        backward: Sequence[str] = ()) -> FanApproximation:
    """All forward addresses over ``{r, rho}`` of length ``depth`` with their ``t_max``.

    ``backward`` is one fixed backward address shared by every leg (empty by
    default, giving the one-sided fan).
    """
    if pair is None:
        pair = _default_pair()
    elif not isinstance(pair, NCPair):
        pair = NCPair(*pair)
    if depth < 1:
        raise DomainError("depth must be >= 1")
    legs = []
    for syms in itertools.product(("r", "rho"), repeat=depth):
        addr = LegAddress(syms, tuple(backward), pair)
        tm = t_max(addr)
        if tm > 0:
            legs.append((addr, tm))
    return FanApproximation(legs, depth, pair)


@dataclass
class ProbeReport:
    trials: int
    successes: int
    max_distance: float
    min_sup: float
    max_coordinate: float
    max_steps_used: int

    @property
    def fraction(self) -> float:
        return self.successes / self.trials if self.trials else 1.0

    def to_json(self) -> dict:
        return {"trials": self.trials, "successes": self.successes, "fraction": self.fraction,
                "max_distance": self.max_distance, "min_sup": self.min_sup,
                "max_coordinate": self.max_coordinate, "max_steps_used": self.max_steps_used}


def tail_start(eps: float) -> int:
    """Smallest ``k0`` with ``sum_{k >= k0} 2**-k = 2**(1-k0) < eps``."""
    return max(1, math.floor(1 - math.log2(eps)) + 1)


def endpoint_density_probe(pair: NCPair | None = None, depth: int = 8, eps: float = 0.05,
                           trials: int = 100, seed: int = 0, max_steps: int = 1000) -> ProbeReport:
    """Random leg points, each moved to an approximate endpoint by greedy extension.

    A trial succeeds when the extension is a valid word, its sup exceeds
    ``1 - eps``, no coordinate exceeds 1 and it is within ``eps`` of the
    original point on their common window.
    """
    pair = pair or _default_pair()
    rel = lelek_relation(pair)
    rng = np.random.default_rng(seed)
    k0 = tail_start(eps)
    ok, worst_d, min_sup, max_c, used = 0, 0.0, 1.0, 0.0, 0
    for _ in range(trials):
        syms = tuple(("r", "rho")[i] for i in rng.integers(0, 2, size=depth))
        addr = LegAddress(syms, (), pair)
        t = float(t_max(addr)) * (1.0 - rng.random())  # in (0, t_max]
        w = forward_part(leg_point(addr, t))
        prefix = ForwardWord(w.coords[:max(k0 - 1, 1)], rel)
        try:
            e = endpoint_extension(prefix, pair, eps, max_steps)
        except ExtensionError as exc:
            min_sup = min(min_sup, exc.best_sup)
            continue
        used = max(used, len(e) - len(prefix))
        n = min(len(w), len(e))
        d = forward_metric(w.coords[:n], e.coords[:n])
        s = endpoint_sup(e)
        c = max(e.coords)
        worst_d, min_sup, max_c = max(worst_d, d), min(min_sup, s), max(max_c, c)
        if d < eps and s > 1 - eps and c <= 1 and validate_word(e, relation=rel):
            ok += 1
    return ProbeReport(trials, ok, worst_d, min_sup, max_c, used)


# -- Cantor-fan quotients ------------------------------------------------------

@dataclass
class CantorQuotientFan:
    """Realisable interval itineraries of non-spine words, all hanging from the SPINE class."""

    legs: list[tuple[tuple[int, ...], float]]
    depth: int
    n_intervals: int
    spine: tuple[float, ...]

    def labels(self) -> list[tuple[tuple[int, ...], int, float]]:
        return [(tuple(i + 1 for i in it), self.n_intervals + 1, r) for it, r in self.legs]

    def to_json(self) -> list[dict]:
        return [{"address": list(it), "t_max": r} for it, r in self.legs]


def itinerary_feasible(rel: ClosedRelation, itinerary: Sequence[int]) -> bool:
    """Whether a positive-length set of first coordinates follows the interval itinerary."""
    ivs = rel.space.intervals
    cur = [ivs[itinerary[-1]]]
    for i in reversed(itinerary[:-1]):
        cur = intersect([ivs[i]], rel.pull_back(cur))
        if not cur:
            return False
    return bool(intersect(cur, [ivs[itinerary[0]]]))


def cantor_quotient_embed(rel: ClosedRelation, spine: Sequence[float], depth: int = 3,
                          samples: int = 1000, seed: int = 0) -> CantorQuotientFan:
    """Legs of the quotient collapsing the spine, one per realisable itinerary."""
    bad = spine_violation(rel, spine, samples, seed)
    if bad is not None:
        raise PreconditionError(f"spine is not shift-compatible: {list(bad.coords)}")
    if depth < 1:
        raise DomainError("depth must be >= 1")
    n = len(rel.space)
    legs = [(it, 1.0) for it in itertools.product(range(n), repeat=depth)
            if itinerary_feasible(rel, it)]
    return CantorQuotientFan(legs, depth, n, tuple(float(s) for s in spine))


# -- rendering -----------------------------------------------------------------

def address_fraction(digits: Sequence[int], base: int) -> float:
    """``sum d_i base**-i`` with digits ``1..base-1``; injective on finite strings."""
    return sum(d * float(base) ** -(i + 1) for i, d in enumerate(digits))


def leg_angle(digits: Sequence[int], base: int) -> float:
    lo, hi = ANGLE_RANGE
    return lo + (hi - lo) * address_fraction(digits, base)


def render_fan(fan: FanApproximation | CantorQuotientFan, out: str | Path | None = None) -> str:
    """SVG 1.1 picture with one segment per leg from the top; written to ``out`` if given."""
    ox, oy = ORIGIN
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{VIEW_W}" '
        f'height="{VIEW_H}" viewBox="0 0 {VIEW_W} {VIEW_H}">',
        f'<g stroke="black" stroke-width="0.500000" fill="none">',
    ]
    for digits, base, radius in fan.labels():
        th = math.radians(leg_angle(digits, base))
        x = ox + SCALE * radius * math.cos(th)
        y = oy - SCALE * radius * math.sin(th)
        lines.append(f'<line x1="{ox:.6f}" y1="{oy:.6f}" x2="{x:.6f}" y2="{y:.6f}"/>')
    lines.append("</g>")
    lines.append(f'<circle cx="{ox:.6f}" cy="{oy:.6f}" r="2.000000" fill="black"/>')
    lines.append("</svg>")
    svg = "\n".join(lines) + "\n"
    if out is not None:
        Path(out).write_text(svg, encoding="utf-8")
    return svg


def legs_json(fan: FanApproximation | CantorQuotientFan) -> str:
    return json.dumps(fan.to_json(), indent=2)
