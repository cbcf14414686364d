"""Finite certificates and witnesses for transitivity, mixing, periodicity and sensitivity.

Nothing here proves a topological property.  Each builder returns concrete
words, indices and bounds that :func:`~mahavier_lab.mahavier_words.validate_word`
and cylinder membership can re-check, and each ``to_json`` carries enough data
for an outside tool to repeat the check.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .mahavier_words import (
    IMPRESSION_DEPTH,
    IMPRESSION_GRID,
    Cylinder,
    ForwardWord,
    TwoSidedWord,
    delta_density,
    _GridSet,
    feasible_sets,
    forward_impression,
    path_to,
    random_word,
    shift_forward,
    validate_word,
    word_in_cylinder,
)
from .space_relation import TOL, ClosedRelation, DomainError, builtin_relation, dedup

SENSITIVITY_EPS = 0.25
K0_BUDGET = 10_000


class PreconditionError(DomainError):
    """The relation or inputs do not satisfy a builder's hypotheses."""


class WitnessError(RuntimeError):
    """No witness could be built from the given data."""


def _word_json(w: ForwardWord) -> list[float]:
    return [float(c) for c in w.coords]


# -- transitivity ----------------------------------------------------------

@dataclass
class TransitivityReport:
    relation: str
    depth: int
    delta: float
    samples: list[tuple[float, float]]  # (start, delta of its impression)
    worst_delta: float
    passed: bool

    def to_json(self) -> dict:
        return {
            "relation": self.relation,
            "depth": self.depth,
            "delta": self.delta,
            "worst_delta": self.worst_delta,
            "passed": self.passed,
            "samples": [{"start": s, "delta": d} for s, d in self.samples],
        }


def interior_samples(rel: ClosedRelation, count: int, rng: np.random.Generator) -> list[float]:
    """Uniform points of the open intervals, cycling through the intervals in order."""
    pts = []
    ivs = rel.space.intervals
    for i in range(count):
        lo, hi = ivs[i % len(ivs)]
        u = rng.random()
        while u == 0.0:
            u = rng.random()
        pts.append(lo + (hi - lo) * u)
    return pts


def transitivity_certificate(rel: ClosedRelation, samples: int = 50, depth: int = IMPRESSION_DEPTH,
                             delta: float = 0.05, seed: int = 0, grid: float = IMPRESSION_GRID,
                             workers: int | None = None) -> TransitivityReport:
    """Worst impression density over sampled interior starts; PASS iff it is <= ``delta``.

    Dense impressions from a dense set of starts is the sufficient condition
    for transitivity when ``F`` and ``F^{-1}`` are unions of graphs of maps;
    here both "dense" are replaced by finite budgets.
    """
    if not rel.is_structural():
        raise PreconditionError("relation branches must be non-degenerate monotone maps")
    if not rel.projections_are_full():
        raise PreconditionError("both projections of the relation must be the whole space")
    starts = interior_samples(rel, samples, np.random.default_rng(seed))

    def one(s: float) -> float:
        return delta_density(forward_impression(rel, s, depth, grid), rel.space)

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            deltas = list(pool.map(one, starts))
    else:
        deltas = [one(s) for s in starts]
    worst = max(deltas)
    return TransitivityReport(rel.name, depth, delta, list(zip(starts, deltas)), worst, worst <= delta)


def largest_gap(points: Sequence[float], rel: ClosedRelation) -> tuple[float, float]:
    """Widest open subinterval of the space that avoids ``points``."""
    pts = sorted(points)
    best = (0.0, 0.0)
    for lo, hi in rel.space:
        inside = [p for p in pts if lo <= p <= hi]
        edges = [lo] + inside + [hi]
        for a, b in zip(edges, edges[1:]):
            if b - a > best[1] - best[0]:
                best = (a, b)
    return best


def non_transitivity_witness(rel: ClosedRelation, x: float, depth: int = IMPRESSION_DEPTH,
                             delta: float = 0.05, grid: float = IMPRESSION_GRID,
                             margin: float = 0.1) -> tuple[float, float] | None:
    """An open interval missed by the impression of ``x``, or None if it is ``delta``-dense.

    The widest gap is returned shrunk by ``margin`` of its width at both ends.
    """
    imp = forward_impression(rel, x, depth, grid)
    if delta_density(imp, rel.space) <= delta:
        return None
    a, b = largest_gap(imp, rel)
    pad = margin * (b - a)
    return a + pad, b - pad


@dataclass
class ConnectingWord:
    """A word in ``U`` whose ``m``-th shift lies in ``V``."""

    base: ForwardWord
    U: Cylinder
    V: Cylinder
    m: int

    def verify(self) -> bool:
        return (validate_word(self.base) and self.U.contains(self.base)
                and self.m > self.U.max_index
                and self.V.contains(shift_forward(self.base, self.m)))

    def to_json(self) -> dict:
        return {"base": _word_json(self.base), "U": self.U.to_json(), "V": self.V.to_json(),
                "m": self.m, "verified": self.verify()}


def connecting_word(rel: ClosedRelation, U: Cylinder, V: Cylinder, depth: int = IMPRESSION_DEPTH,
                    grid: float = IMPRESSION_GRID, starts: int = 16) -> ConnectingWord | None:
    """Search for ``x`` in ``U`` and ``m > max index of U`` with the ``m``-th shift in ``V``.

    Several feasible words in ``U`` are tried; their last constrained
    coordinates seed one breadth-first impression and the search stops at the
    first value that can be completed into ``V``.
    """
    a = max(U.max_index, 1)
    su = feasible_sets(rel, U, a)
    target = feasible_sets(rel, V)[0]
    if not su[0] or not target:
        return None
    prefixes: dict[float, ForwardWord] = {}
    fracs = [(j + 0.5) / starts for j in range(starts)]
    for lo, hi in su[0]:
        for f in fracs:
            w = word_in_cylinder(rel, U, a, start=lo + f * (hi - lo))
            if w is not None:
                prefixes.setdefault(w.coords[-1], w)
    if not prefixes:
        return None
    # breadth-first from all roots at once, stopping at the first completable hit
    seen = _GridSet(grid)
    values: list[float] = []
    parents: list[int] = []
    frontier = []
    for v in prefixes:
        if seen.add(v):
            values.append(v)
            parents.append(-1)
            frontier.append(len(values) - 1)
    for level in range(1, depth + 1):
        nxt = []
        for node in frontier:
            for v in rel.image(values[node]):
                # one step is too early for m > a unless a stutter can delay it
                if any(lo < v < hi for lo, hi in target) and (level > 1 or rel.include_diagonal):
                    path = path_to(values, parents, node) + [v]
                    if level == 1:
                        path = [path[0], path[0], path[1]]
                    tail = word_in_cylinder(rel, V, max(V.max_index, 1), start=v)
                    if tail is not None:
                        coords = prefixes[path[0]].coords + tuple(path[1:]) + tail.coords[1:]
                        cw = ConnectingWord(ForwardWord(coords, rel), U, V, a + len(path) - 2)
                        if cw.verify():
                            return cw
                if seen.add(v):
                    values.append(v)
                    parents.append(node)
                    nxt.append(len(values) - 1)
        if not nxt:
            break
        frontier = nxt
    return None


# -- mixing via stutter padding ---------------------------------------------

@dataclass
class MixingPadCertificate:
    base_word: ForwardWord
    U: Cylinder
    V: Cylinder
    entry_depth: int
    hit_time: int
    padded_words: list[ForwardWord]
    verified_range: tuple[int, int]
    verified: bool = False

    def check(self) -> bool:
        m = self.hit_time
        target = shift_forward(self.base_word, m).coords
        for k, w in enumerate(self.padded_words):
            if not (validate_word(w) and self.U.contains(w)):
                return False
            shifted = shift_forward(w, m + k)
            if shifted.coords != target or not self.V.contains(shifted):
                return False
        return True

    def to_json(self) -> dict:
        return {
            "base_word": _word_json(self.base_word),
            "U": self.U.to_json(),
            "V": self.V.to_json(),
            "entry_depth": self.entry_depth,
            "hit_time": self.hit_time,
            "verified_range": list(self.verified_range),
            "padded_words": [_word_json(w) for w in self.padded_words],
            "verified": self.verified,
        }


def pad_word(w: ForwardWord, m: int, k: int) -> ForwardWord:
    """Repeat coordinate ``m`` (1-based) ``k`` extra times."""
    c = w.coords
    return w.replace(c[:m - 1] + (c[m - 1],) * (k + 1) + c[m:])


def mixing_pad(rel_with_diag: ClosedRelation, base: ForwardWord, U: Cylinder, V: Cylinder,
               m: int, k_max: int) -> MixingPadCertificate:
    """Stutter-pad ``base`` so that every shift time ``n`` in ``[m, m + k_max]`` hits ``V``.

    Repeating ``x(m)`` leaves the first ``m`` coordinates untouched, so the
    padded word stays in ``U``, and it delays the tail by one step per copy.
    """
    rel = rel_with_diag
    if not rel.include_diagonal:
        raise PreconditionError("stutter padding needs the diagonal in the relation")
    if m <= U.max_index:
        raise PreconditionError(f"hit time m={m} must exceed U's last index {U.max_index}")
    base = ForwardWord(base.coords, rel)
    if not validate_word(base):
        raise WitnessError("base word is not in the product")
    if not U.contains(base):
        raise WitnessError("base word is not in U")
    if len(base) <= m or not V.contains(shift_forward(base, m)):
        raise WitnessError(f"shift^{m} of the base word is not in V")
    padded = [pad_word(base, m, k) for k in range(k_max + 1)]
    cert = MixingPadCertificate(base, U, V, U.max_index, m, padded, (m, m + k_max))
    cert.verified = cert.check()
    return cert


# -- adding and removing the diagonal -----------------------------------------

def diagonal_collapse(w: ForwardWord | Sequence[float]) -> tuple[ForwardWord, list[int]]:
    """Run-length encode consecutive repeats: ``(a,a,b,b,b,c) -> ((a,b,c), [2,3,1])``."""
    coords = tuple(w)
    rel = w.relation if isinstance(w, ForwardWord) else None
    out: list[float] = []
    runs: list[int] = []
    for c in coords:
        if out and c == out[-1]:
            runs[-1] += 1
        else:
            out.append(c)
            runs.append(1)
    return ForwardWord(tuple(out), rel), runs


def diagonal_expand(w: ForwardWord | Sequence[float], pattern: Sequence[int]) -> ForwardWord:
    coords = tuple(w)
    if len(pattern) != len(coords):
        raise DomainError("pattern length must equal word length")
    if any(k < 1 for k in pattern):
        raise DomainError("run lengths must be >= 1")
    rel = w.relation if isinstance(w, ForwardWord) else None
    out: list[float] = []
    for c, k in zip(coords, pattern):
        out.extend([c] * k)
    return ForwardWord(tuple(out), rel)


# -- periodic points ---------------------------------------------------------

@dataclass
class PeriodicWitness:
    """A path ``z`` with ``z(1) = y`` and ``z(n+1) = x`` for a pair ``(x, y)`` of ``F``.

    Following ``z`` and then the step ``x -> y`` is a loop of ``n + 1`` steps.
    """

    x: float
    y: float
    n: int
    z: ForwardWord

    @property
    def period(self) -> int:
        """Loop length: ``n`` when ``x == y`` (``z(n+1)`` is ``z(1)`` again), else ``n + 1``."""
        return self.n if self.x == self.y else self.n + 1

    def verify(self, tol: float = TOL) -> bool:
        rel = self.z.relation
        return (len(self.z) == self.n + 1 and self.z.coords[0] == self.y
                and self.z.coords[-1] == self.x and validate_word(self.z, tol)
                and rel.contains(self.x, self.y, tol))

    def to_json(self) -> dict:
        return {"kind": "periodic", "x": self.x, "y": self.y, "n": self.n, "period": self.period,
                "z": _word_json(self.z), "verified": self.verify()}


def _cbrt(u: float) -> float:
    return float(np.cbrt(u))


def periodic_witness_devaney5(x: float, y: float, tol: float = TOL) -> PeriodicWitness:
    """Closed-form return path from ``y`` to ``x`` in the five-interval system, ``n <= 3``."""
    rel = builtin_relation("devaney_5")
    if not rel.contains(x, y, tol):
        raise DomainError(f"({x}, {y}) is not in the relation")
    x, y = float(x), float(y)
    if abs(y - x) <= tol:
        return PeriodicWitness(x, y, 1, ForwardWord((y, x), rel))
    j = rel.space.locate(x, tol)
    sq = math.sqrt
    # (formula for y, middle of the path) per interval; the path is (y, *middle, x)
    cases = {
        0: [(x + 2, lambda: (x + 4, sq(x) + 2))],
        1: [((x - 2) ** 2, lambda: ((x - 2) ** 2 + 2, (x - 2) ** 2 + 4)),
            (x + 2, lambda: (sq(x - 2) + 2, x - 2))],
        2: [(sq(max(x - 4, 0.0)) + 2, lambda: (x - 4, x - 2)),
            (x + 2, lambda: (x + 4, _cbrt(x - 4) + 6))],
        3: [((x - 6) ** 3 + 4, lambda: ((x - 6) ** 3 + 6, (x - 6) ** 3 + 8)),
            (x + 2, lambda: (_cbrt(x - 6) + 6, x - 2))],
        4: [(_cbrt(x - 8) + 6, lambda: (x - 4, x - 2))],
    }
    for value, middle in cases[j]:
        if abs(y - value) <= tol:
            z = ForwardWord((y, *middle(), x), rel)
            return PeriodicWitness(x, y, 3, z)
    raise DomainError(f"({x}, {y}) matches no branch")  # unreachable when contains() holds


def periodic_witness_search(rel: ClosedRelation, x: float, y: float, n_max: int = 8,
                            tol: float = TOL, grid: float = IMPRESSION_GRID) -> PeriodicWitness | None:
    """Shortest return path from ``y`` to ``x`` found breadth-first within ``n_max`` steps."""
    if not rel.contains(x, y, tol):
        raise DomainError(f"({x}, {y}) is not in the relation")
    x, y = float(x), float(y)
    if abs(x - y) <= tol:
        return PeriodicWitness(x, y, 1, ForwardWord((y, x), rel))
    values, parents, levels = [y], [-1], [0]
    frontier = [0]
    seen = dedup([y], grid)
    for level in range(1, n_max + 1):
        nxt = []
        for node in frontier:
            for v in rel.image(values[node]):
                if abs(v - x) <= tol:
                    path = path_to(values, parents, node) + [x]
                    return PeriodicWitness(x, y, level, ForwardWord(tuple(path), rel))
                if all(abs(v - s) >= grid for s in seen):
                    seen.append(v)
                    values.append(v)
                    parents.append(node)
                    levels.append(level)
                    nxt.append(len(values) - 1)
        frontier = nxt
        if not frontier:
            break
    return None


def periodic_point_from_witness(w: PeriodicWitness, copies: int) -> ForwardWord:
    """Repeat the loop ``y -> ... -> x -> y`` ``copies`` times; see :attr:`PeriodicWitness.period`."""
    if copies < 1:
        raise DomainError("copies must be >= 1")
    if not w.verify():
        raise WitnessError("invalid periodic witness")
    return w.z.replace(w.z.coords[:w.period] * copies)


# -- sensitive dependence ------------------------------------------------------

@dataclass
class SensitivityWitness:
    x: ForwardWord
    y: ForwardWord
    m: int
    separation: float
    spine_distance: float
    epsilon: float
    k0_steps: int
    spine: tuple[float, ...] = field(default=())
    U: Cylinder | None = None

    def verify(self) -> bool:
        ok = validate_word(self.x) and validate_word(self.y)
        if self.U is not None:
            ok = ok and self.U.contains(self.x) and self.U.contains(self.y)
        sep, sd = _separations(self.x, self.y, self.m, self.spine)
        return (ok and math.isclose(sep, self.separation) and math.isclose(sd, self.spine_distance)
                and sep > self.epsilon and sd > self.epsilon)

    def to_json(self) -> dict:
        return {"kind": "sensitivity", "x": _word_json(self.x), "y": _word_json(self.y),
                "m": self.m, "separation": self.separation, "spine_distance": self.spine_distance,
                "epsilon": self.epsilon, "k0_steps": self.k0_steps, "spine": list(self.spine),
                "U": self.U.to_json() if self.U is not None else None, "verified": self.verify()}


def spine_lower_bound(w: Sequence[float], spine: Sequence[float]) -> float:
    """``max_k dist(w_k, spine) / 2**k``, a lower bound on the distance to any spine word."""
    best = 0.0
    for k, c in enumerate(w, start=1):
        best = max(best, min(abs(c - s) for s in spine) / 2 ** k)
    return best


def _separations(x: ForwardWord, y: ForwardWord, m: int, spine) -> tuple[float, float]:
    sx, sy = shift_forward(x, m).coords, shift_forward(y, m).coords
    n = min(len(sx), len(sy))
    sep = max(abs(a - b) / 2 ** k for k, (a, b) in enumerate(zip(sx[:n], sy[:n]), start=1))
    return sep, spine_lower_bound(sy, spine)


def _step_to(rel: ClosedRelation, v: float, target: int) -> float | None:
    # the unique image of v landing in interval ``target``, preferring a move over a stay
    cands = [u for u in rel.image(v) if rel.space.locate(u, TOL) == target]
    moved = [u for u in cands if abs(u - v) > TOL]
    return (moved or cands or [None])[0]


def sensitivity_witness(rel: ClosedRelation, U: Cylinder, spine: Sequence[float] = (0.0, 2.0, 4.0),
                        epsilon: float = SENSITIVITY_EPS, closeness: float = 0.1,
                        max_steps: int = K0_BUDGET, tail: int = 16) -> SensitivityWitness:
    """Two words of ``U`` whose ``m``-th shifts separate and stay away from the spine.

    For the three-interval systems with a root branch ``[4,5] -> [2,3]``:
    ``x`` descends to ``[0,1]`` and stutters there, ``y`` climbs ``[0,1] ->
    [2,3] -> [4,5]`` and re-enters ``[2,3]`` through the root branch, so its
    ``[4,5]`` visits increase towards 5.  ``m`` is chosen so the shifted ``y``
    starts at the first visit within ``closeness`` of 5 whose predecessor is
    within ``closeness`` of 3.
    """
    ivs = rel.space.intervals
    top = len(ivs) - 1
    if top < 2:
        raise PreconditionError("needs at least three intervals")
    n = max(U.max_index, 1)
    ends = sorted({e for iv in ivs for e in iv})
    z = word_in_cylinder(rel, U, n, avoid_last=ends)
    if z is None or any(abs(z.coords[-1] - e) <= TOL for e in ends):
        raise WitnessError("cylinder admits no word with an interior last coordinate")
    z = ForwardWord(z.coords, rel)

    ycoords = list(z.coords)
    p = None
    for step in range(1, max_steps + 1):
        v = ycoords[-1]
        j = rel.space.locate(v, TOL)
        nxt = _step_to(rel, v, j + 1) if j < top else _step_to(rel, v, j - 1)
        if nxt is None:
            raise WitnessError(f"no escalating branch from {v}")
        ycoords.append(nxt)
        prev = ycoords[-2]
        if (rel.space.locate(nxt, TOL) == top and ivs[top][1] - nxt < closeness
                and rel.space.locate(prev, TOL) == top - 1 and ivs[top - 1][1] - prev < closeness):
            p = len(ycoords)
            break
    if p is None:
        raise WitnessError(f"no k0 within {max_steps} steps")
    k0 = p - n
    m = p - 1
    for _ in range(tail):
        v = ycoords[-1]
        j = rel.space.locate(v, TOL)
        ycoords.append(_step_to(rel, v, j + 1) if j < top else _step_to(rel, v, j - 1))

    xcoords = list(z.coords)
    while len(xcoords) < len(ycoords):
        v = xcoords[-1]
        j = rel.space.locate(v, TOL)
        xcoords.append(_step_to(rel, v, j - 1) if j > 0 else v)
    x, y = ForwardWord(tuple(xcoords), rel), ForwardWord(tuple(ycoords), rel)
    sep, sd = _separations(x, y, m, spine)
    return SensitivityWitness(x, y, m, sep, sd, epsilon, k0, tuple(spine), U)


def sensitivity_witness_robinson3(U: Cylinder, **kw) -> SensitivityWitness:
    return sensitivity_witness(builtin_relation("robinson_3"), U, (0.0, 2.0, 4.0), **kw)


# -- quotients collapsing the spine -----------------------------------------------

class _SpineClass:
    """The single collapsed class of all-spine words."""

    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self):
        return "SPINE"

    def representative(self, like: ForwardWord | TwoSidedWord):
        """The canonical all-zero word with the same shape."""
        if isinstance(like, TwoSidedWord):
            return TwoSidedWord((0.0,) * len(like), like.origin, like.relation)
        return ForwardWord((0.0,) * len(like), like.relation)


SPINE = _SpineClass()


def on_spine(w, spine: Sequence[float], tol: float = TOL) -> bool:
    return all(any(abs(c - s) <= tol for s in spine) for c in w.coords)


def quotient_canonical(w: ForwardWord | TwoSidedWord, spine: Sequence[float], tol: float = TOL):
    return SPINE if on_spine(w, spine, tol) else w


def spine_violation(rel: ClosedRelation, spine: Sequence[float], samples: int = 1000,
                    seed: int = 0, length: int = 8):
    """A sampled word breaking spine preservation under the shift, or None.

    Samples mix uniformly random words with words that start at a preimage of
    a spine value, which is where a violation has to live.
    """
    rng = np.random.default_rng(seed)
    starts: list[float] = []
    for s in spine:
        for p in rel.preimage(s):
            starts.append(p)
    for i in range(samples):
        start = starts[i] if i < len(starts) else (
            starts[rng.integers(len(starts))] if starts and rng.random() < 0.5 else None)
        w = random_word(rel, length, rng, start)
        a = quotient_canonical(w, spine) is SPINE
        b = quotient_canonical(shift_forward(w), spine) is SPINE
        if a != b:
            return w
    return None


def quotient_compatibility_check(rel: ClosedRelation, spine: Sequence[float], samples: int = 1000,
                                 seed: int = 0) -> bool:
    """Sampled check that the shift maps spine words to spine words and the rest to the rest."""
    return spine_violation(rel, spine, samples, seed) is None


# -- the add-diagonal pipeline -----------------------------------------------------

def random_cylinder(rel: ClosedRelation, rng: np.random.Generator, max_len: int = 2,
                    radius: float = 0.05) -> Cylinder:
    w = random_word(rel, int(rng.integers(1, max_len + 1)), rng)
    return Cylinder(tuple((i, c - radius, c + radius) for i, c in enumerate(w.coords, start=1)))


def certify_mixing(base_rel: ClosedRelation, samples: int = 50, depth: int = IMPRESSION_DEPTH,
                   delta: float = 0.05, k_max: int = 16, pairs: int = 10, seed: int = 0,
                   workers: int | None = None) -> dict:
    """Transitivity of ``G`` at budget, then stutter-padded mixing witnesses on ``G + diagonal``.

    Returns a JSON-ready report with ``status`` ``PASS``, ``FAIL`` (with a
    gap witness) or ``BUDGET`` (no connecting word found for some pair).
    """
    G = base_rel.without_diagonal()
    F = base_rel.with_diagonal()
    tr = transitivity_certificate(G, samples, depth, delta, seed, workers=workers)
    report: dict = {"relation": base_rel.name, "transitivity": tr.to_json()}
    if not tr.passed:
        worst_start = max(tr.samples, key=lambda sd: sd[1])[0]
        gap = non_transitivity_witness(G, worst_start, depth, delta)
        report["non_transitivity_witness"] = {"start": worst_start,
                                              "gap": list(gap) if gap else None}
        report["status"] = "FAIL"
        return report
    rng = np.random.default_rng(seed + 1)
    certs = []
    status = "PASS"
    for _ in range(pairs):
        U, V = random_cylinder(F, rng), random_cylinder(F, rng)
        cw = connecting_word(F, U, V, depth)
        if cw is None:
            certs.append({"U": U.to_json(), "V": V.to_json(), "found": False})
            status = "BUDGET"
            continue
        cert = mixing_pad(F, cw.base, U, V, cw.m, k_max)
        collapsed, runs = diagonal_collapse(cw.base)
        entry = cert.to_json()
        entry["collapsed_base_valid_for_G"] = validate_word(collapsed, relation=G)
        entry["stutter_pattern"] = runs
        entry["found"] = True
        if not cert.verified:
            status = "FAIL"
        certs.append(entry)
    report["mixing"] = certs
    report["status"] = status
    return report
