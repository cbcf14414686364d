"""Finite windows of Mahavier products, their shifts, metrics and impressions.

Infinite words are represented by finite prefixes (one-sided) or finite index
windows around a marked origin (two-sided).  Every topological statement the
library makes is a statement about finitely many coordinates, which is all a
basic open cylinder constrains.

Coordinates are numbered from 1 in one-sided words, matching ``x(1), x(2), ...``;
``ForwardWord.coords`` itself is an ordinary 0-based tuple.
"""

from __future__ import annotations

import bisect
import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .space_relation import TOL, ClosedRelation, DomainError, IntervalUnion, dedup, intersect

IMPRESSION_GRID = 1e-6
IMPRESSION_DEPTH = 24
MAX_NODES = 1_000_000
KEY_SCALE = 1 << 30


class UnderflowError(DomainError):
    """Shifting would leave an empty word."""


@dataclass(frozen=True)
class ForwardWord:
    """A prefix ``(x_1, ..., x_n)`` of a point of the one-sided product."""

    coords: tuple[float, ...]
    relation: ClosedRelation | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "coords", tuple(float(c) for c in self.coords))

    def __len__(self):
        return len(self.coords)

    def __iter__(self):
        return iter(self.coords)

    def at(self, i: int) -> float:
        """Coordinate ``x(i)``, 1-based."""
        if i < 1:
            raise IndexError(i)
        return self.coords[i - 1]

    def replace(self, coords: Iterable[float]) -> ForwardWord:
        return ForwardWord(tuple(coords), self.relation)


@dataclass(frozen=True)
class TwoSidedWord:
    """A window ``x_{-m}, ..., x_n`` of a point of the two-sided product.

    ``origin`` is the position inside ``coords`` of index 0.  Shifting only
    moves that mark, so the window is never truncated.
    """

    coords: tuple[float, ...]
    origin: int = 0
    relation: ClosedRelation | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "coords", tuple(float(c) for c in self.coords))

    def __len__(self):
        return len(self.coords)

    @property
    def indices(self) -> range:
        return range(-self.origin, len(self.coords) - self.origin)

    def at(self, k: int) -> float:
        pos = self.origin + k
        if not 0 <= pos < len(self.coords):
            raise IndexError(k)
        return self.coords[pos]

    def items(self):
        return zip(self.indices, self.coords)


def validate_word(w: ForwardWord | TwoSidedWord, tol: float = TOL,
                  relation: ClosedRelation | None = None) -> bool:
    """All coordinates lie in the space and consecutive pairs lie in the relation."""
    rel = relation if relation is not None else w.relation
    if rel is None:
        raise DomainError("word carries no relation to validate against")
    if len(w.coords) == 0:
        raise DomainError("empty word")
    space = rel.space
    if not all(space.contains(c, tol) for c in w.coords):
        return False
    return all(rel.contains(a, b, tol) for a, b in zip(w.coords, w.coords[1:]))


def shift_forward(w: ForwardWord, n: int = 1) -> ForwardWord:
    if n < 0:
        raise DomainError("shift power must be non-negative")
    if len(w) < n + 1:
        raise UnderflowError(f"cannot shift a word of length {len(w)} by {n}")
    return w.replace(w.coords[n:])


def shift_two_sided(w: TwoSidedWord, direction: int = 1) -> TwoSidedWord:
    return TwoSidedWord(w.coords, w.origin + direction, w.relation)


def extensions(w: ForwardWord) -> list[ForwardWord]:
    if w.relation is None:
        raise DomainError("word carries no relation")
    return [w.replace(w.coords + (y,)) for y in w.relation.image(w.coords[-1])]


def forward_metric(u: ForwardWord | Sequence[float], v: ForwardWord | Sequence[float]) -> float:
    """``max_k |u_k - v_k| / 2**k`` over the common 1-based window."""
    a = np.asarray(tuple(u), dtype=float)
    b = np.asarray(tuple(v), dtype=float)
    if a.shape != b.shape:
        raise DomainError(f"length mismatch {a.shape[0]} != {b.shape[0]}")
    if a.size == 0:
        return 0.0
    k = np.arange(1, a.size + 1)
    return float(np.max(np.abs(a - b) / 2.0 ** k))


def two_sided_metric(u: TwoSidedWord, v: TwoSidedWord) -> float:
    """``max_k |u_k - v_k| / 2**(|k|+1)`` over a common index window."""
    if u.indices != v.indices:
        raise DomainError("two-sided words must share the same index window")
    a, b = np.asarray(u.coords), np.asarray(v.coords)
    if a.size == 0:
        return 0.0
    k = np.abs(np.asarray(u.indices))
    return float(np.max(np.abs(a - b) / 2.0 ** (k + 1)))


@dataclass(frozen=True)
class Cylinder:
    """Basic open set ``U_1 x ... x U_k x X x ...`` given by open-interval constraints.

    Indices are 1-based coordinates for one-sided words and signed indices
    around the origin for two-sided ones.  Membership is strict, with no
    tolerance, and a word too short to show a constrained coordinate fails.
    """

    constraints: tuple[tuple[int, float, float], ...]

    def __post_init__(self):
        cons = tuple(sorted((int(i), float(lo), float(hi)) for i, lo, hi in self.constraints))
        for i, lo, hi in cons:
            if not lo < hi:
                raise DomainError(f"empty constraint interval ({lo}, {hi}) at index {i}")
        if len({i for i, _, _ in cons}) != len(cons):
            raise DomainError("duplicate cylinder index")
        object.__setattr__(self, "constraints", cons)

    @property
    def max_index(self) -> int:
        return max((i for i, _, _ in self.constraints), default=0)

    def bounds(self, i: int) -> tuple[float, float]:
        for j, lo, hi in self.constraints:
            if j == i:
                return lo, hi
        return -np.inf, np.inf

    def contains(self, w: ForwardWord | TwoSidedWord) -> bool:
        for i, lo, hi in self.constraints:
            try:
                x = w.at(i)
            except IndexError:
                return False
            if not lo < x < hi:
                return False
        return True

    def to_json(self) -> list[dict]:
        return [{"index": i, "lo": lo, "hi": hi} for i, lo, hi in self.constraints]

    @classmethod
    def from_json(cls, data) -> Cylinder:
        if isinstance(data, str):
            data = json.loads(data)
        try:
            return cls(tuple((d["index"], d["lo"], d["hi"]) for d in data))
        except (KeyError, TypeError) as exc:
            raise DomainError(f"malformed cylinder spec: {exc}") from exc


def feasible_sets(rel: ClosedRelation, cyl: Cylinder, length: int | None = None
                  ) -> list[list[tuple[float, float]]]:
    """For ``i = 1..length``, the open sets of ``x_i`` that continue to a valid word in ``cyl``.

    Computed backwards by pulling each constraint through ``F^{-1}``; each
    entry is a list of intervals whose interiors are exactly the admissible
    values (the last entry is just ``U_length`` intersected with the space).
    """
    n = max(cyl.max_index, 1) if length is None else length
    space = list(rel.space.intervals)
    sets: list[list[tuple[float, float]]] = [[] for _ in range(n)]
    nxt = None
    for i in range(n, 0, -1):
        cur = intersect(space, [cyl.bounds(i)])
        if nxt is not None:
            cur = intersect(cur, rel.pull_back(nxt))
        sets[i - 1] = cur
        nxt = cur
    return sets


def _interior_point(pieces: Sequence[tuple[float, float]], avoid: Sequence[float] = ()) -> float | None:
    for lo, hi in pieces:
        for frac in (0.5, 0.381966, 0.618034, 0.25, 0.75):
            x = lo + frac * (hi - lo)
            if lo < x < hi and all(abs(x - a) > TOL for a in avoid):
                return x
    return None


def _inside(x: float, pieces: Sequence[tuple[float, float]]) -> bool:
    return any(lo < x < hi for lo, hi in pieces)


def word_in_cylinder(rel: ClosedRelation, cyl: Cylinder, length: int | None = None,
                     start: float | None = None, avoid_last: Sequence[float] = ()
                     ) -> ForwardWord | None:
    """A valid word lying in ``cyl``, or None if the cylinder misses the product.

    ``start`` pins ``x_1`` (it must be feasible); otherwise an interior point of
    the feasible set is used.  ``avoid_last`` lists values the last
    *constrained* coordinate must avoid; it is honoured when that coordinate is free.
    """
    n = max(cyl.max_index, 1) if length is None else length
    sets = feasible_sets(rel, cyl, n)
    if not sets[0]:
        return None
    if start is None:
        x = _interior_point(sets[0], avoid_last if cyl.max_index <= 1 else ())
        if x is None:
            return None
    else:
        if not _inside(start, sets[0]):
            return None
        x = float(start)
    coords = [x]
    for i in range(1, n):
        cands = [y for y in rel.image(coords[-1]) if _inside(y, sets[i])]
        if not cands:
            return None
        if i + 1 == cyl.max_index and avoid_last:
            good = [y for y in cands if all(abs(y - a) > TOL for a in avoid_last)]
            cands = good or cands
        coords.append(cands[0])
    return ForwardWord(tuple(coords), rel)


def random_word(rel: ClosedRelation, length: int, rng: np.random.Generator,
                start: float | None = None) -> ForwardWord:
    """A valid word of the given length built by uniform random branch choices."""
    if start is None:
        lo, hi = rel.space.intervals[rng.integers(len(rel.space))]
        start = lo + (hi - lo) * rng.random()
    coords = [float(start)]
    for _ in range(length - 1):
        img = rel.image(coords[-1])
        coords.append(img[rng.integers(len(img))])
    return ForwardWord(tuple(coords), rel)


class _GridSet:
    """Sorted value set that refuses values closer than ``grid`` to a member."""

    def __init__(self, grid: float):
        self.grid = grid
        self.values: list[float] = []

    def add(self, v: float) -> bool:
        i = bisect.bisect_left(self.values, v)
        if i < len(self.values) and self.values[i] - v < self.grid:
            return False
        if i > 0 and v - self.values[i - 1] < self.grid:
            return False
        self.values.insert(i, v)
        return True


def _state_key(k: int, u: float) -> tuple[int, int, int]:
    # equal keys <=> same interval and offsets agreeing to ~1e-9 relative
    if u == 0.0:
        return k, 0, 0
    m, e = math.frexp(u)
    return k, e, round(m * KEY_SCALE)


def impression_tree(rel: ClosedRelation, starts: Sequence[float], depth: int,
                    max_nodes: int = MAX_NODES) -> tuple[list[float], list[int], list[int]]:
    """Breadth-first closure under ``F`` with parent pointers.

    Returns ``(values, parents, levels)``; roots have parent ``-1`` and level 0.
    States are held as (interval, offset from its left end) and merged only
    when the offsets agree to about 1e-9 relative.  Snapping to a coarse
    absolute grid here would lose reachable points: two nearly equal values
    just above an interval end are pulled far apart by a later root branch.
    """
    seen: set = set()
    values: list[float] = []
    parents: list[int] = []
    levels: list[int] = []
    states: list[tuple[int, float]] = []
    lows = [lo for lo, _ in rel.space]
    frontier = []
    for s in starts:
        s = rel.space.check(s)
        k = rel.space.locate(s, TOL)
        st = (k, min(max(s - lows[k], 0.0), rel.space.intervals[k][1] - lows[k]))
        key = _state_key(*st)
        if key not in seen:
            seen.add(key)
            states.append(st)
            values.append(s)
            parents.append(-1)
            levels.append(0)
            frontier.append(len(values) - 1)
    for level in range(1, depth + 1):
        nxt = []
        for node in frontier:
            for k, u in rel.image_offsets(*states[node]):
                key = _state_key(k, u)
                if key in seen:
                    continue
                if len(values) >= max_nodes:
                    raise OverflowError(f"impression exceeds {max_nodes} states")
                seen.add(key)
                states.append((k, u))
                values.append(lows[k] + u)
                parents.append(node)
                levels.append(level)
                nxt.append(len(values) - 1)
        if not nxt:
            break
        frontier = nxt
    return values, parents, levels


def path_to(values: list[float], parents: list[int], node: int) -> list[float]:
    out = []
    while node != -1:
        out.append(values[node])
        node = parents[node]
    return out[::-1]


def forward_impression(rel: ClosedRelation, x: float, depth: int = IMPRESSION_DEPTH,
                       grid: float = IMPRESSION_GRID) -> list[float]:
    """Values reachable from ``x`` in at most ``depth`` steps, sorted and grid-deduplicated."""
    if depth < 1:
        raise DomainError("depth must be >= 1")
    values, _, _ = impression_tree(rel, [x], depth)
    return dedup(values, grid)


def _nearest(sorted_pts: Sequence[float], x: float) -> float:
    i = bisect.bisect_left(sorted_pts, x)
    best = np.inf
    if i < len(sorted_pts):
        best = sorted_pts[i] - x
    if i > 0:
        best = min(best, x - sorted_pts[i - 1])
    return best


def delta_density(points: Iterable[float], space: IntervalUnion) -> float:
    """Least ``delta`` such that every point of ``space`` is within ``delta`` of ``points``.

    The distance-to-set function is piecewise linear, so its maximum over each
    interval is attained at an interval end or at a midpoint between
    consecutive samples.
    """
    pts = sorted(float(p) for p in points)
    if not pts:
        raise DomainError("delta_density needs at least one point")
    for p in pts:
        space.check(p)
    worst = 0.0
    for lo, hi in space:
        cands = [lo, hi]
        cands += [(a + b) / 2 for a, b in zip(pts, pts[1:]) if lo <= (a + b) / 2 <= hi]
        worst = max(worst, max(_nearest(pts, c) for c in cands))
    return worst


# -- orbit dumps ------------------------------------------------------------

def extension_tree(rel: ClosedRelation, x: float, depth: int, max_nodes: int = 100_000
                   ) -> list[tuple[int, int, int, float]]:
    """Rows ``(node, parent, index, value)`` of the tree of all continuations of ``(x)``.

    Raises ``OverflowError`` when the tree would exceed ``max_nodes``.
    """
    rel.space.check(x)
    rows = [(0, -1, 1, float(x))]
    frontier = [0]
    for index in range(2, depth + 2):
        nxt = []
        for node in frontier:
            for y in rel.image(rows[node][3]):
                if len(rows) >= max_nodes:
                    raise OverflowError(f"extension tree exceeds {max_nodes} nodes")
                rows.append((len(rows), node, index, y))
                nxt.append(len(rows) - 1)
        frontier = nxt
    return rows


def orbit_csv(rows: Iterable[tuple[int, int, int, float]]) -> str:
    buf = io.StringIO()
    out = csv.writer(buf, lineterminator="\n")
    out.writerow(["node", "parent", "index", "value"])
    for node, parent, index, value in rows:
        out.writerow([node, parent, index, repr(float(value))])
    return buf.getvalue()
