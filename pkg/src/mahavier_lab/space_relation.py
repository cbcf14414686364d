"""Spaces, monotone branches and closed relations on finite unions of intervals.

A relation ``F`` on ``X`` is stored symbolically as a list of branch graphs
(closed-form monotone homeomorphisms between closed intervals) plus an
optional diagonal.  Branch parameters are exact rationals so inverses are
closed-form and relations round-trip through JSON without loss; the dynamics
themselves are evaluated in binary64.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

TOL = 1e-9
NC_BOUND = 64


class DomainError(ValueError):
    """A point, parameter or spec lies outside the admissible domain."""


def as_fraction(value) -> Fraction:
    """Parse an int, a ``"p/q"`` / decimal string, or a float into a Fraction."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise DomainError(f"not a rational: {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise DomainError(f"not a rational: {value!r}")
        return Fraction(str(value))
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise DomainError(f"not a rational: {value!r}") from exc
    raise DomainError(f"not a rational: {value!r}")


def fraction_str(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def dedup(values: Iterable[float], tol: float = TOL) -> list[float]:
    """Sorted values with runs closer than ``tol`` merged onto their first member."""
    out: list[float] = []
    for v in sorted(values):
        if not out or v - out[-1] > tol:
            out.append(v)
    return out


def _root(u: float, q: int) -> float:
    if q == 1:
        return u
    if q == 2:
        return math.sqrt(u)
    if q == 3:
        return float(np.cbrt(u))
    return u ** (1.0 / q)


def _rpow(u: float, e: Fraction) -> float:
    # u >= 0 is guaranteed by the caller's clamp
    r = _root(u, e.denominator)
    return r ** e.numerator if e.numerator != 1 else r


def _merge(intervals: Iterable[tuple[float, float]], tol: float) -> list[tuple[float, float]]:
    merged: list[list[float]] = []
    for lo, hi in sorted(intervals):
        if merged and lo <= merged[-1][1] + tol:
            merged[-1][1] = max(merged[-1][1], hi)
        else:
            merged.append([lo, hi])
    return [(lo, hi) for lo, hi in merged]


@dataclass(frozen=True)
class IntervalUnion:
    """A finite union of pairwise disjoint closed intervals, sorted ascending."""

    intervals: tuple[tuple[float, float], ...]

    def __post_init__(self):
        ivs = tuple((float(lo), float(hi)) for lo, hi in self.intervals)
        if not ivs:
            raise DomainError("space must contain at least one interval")
        for lo, hi in ivs:
            if not lo <= hi:
                raise DomainError(f"interval [{lo}, {hi}] has lo > hi")
        for (_, h0), (l1, _) in zip(ivs, ivs[1:]):
            if not h0 < l1:
                raise DomainError("intervals must be sorted and disjoint")
        object.__setattr__(self, "intervals", ivs)

    def __len__(self):
        return len(self.intervals)

    def __iter__(self):
        return iter(self.intervals)

    def locate(self, x: float, tol: float = 0.0) -> int | None:
        """Index of the interval containing ``x`` (inclusive, with slack ``tol``)."""
        for i, (lo, hi) in enumerate(self.intervals):
            if lo - tol <= x <= hi + tol:
                return i
        return None

    def contains(self, x: float, tol: float = 0.0) -> bool:
        return self.locate(x, tol) is not None

    def check(self, x: float, tol: float = TOL) -> float:
        if not self.contains(x, tol):
            raise DomainError(f"{x!r} is not in the space {list(self.intervals)}")
        return float(x)

    @property
    def lo(self) -> float:
        return self.intervals[0][0]

    @property
    def hi(self) -> float:
        return self.intervals[-1][1]

    def covered_by(self, pieces: Iterable[tuple[float, float]], tol: float = TOL) -> bool:
        merged = _merge(pieces, tol)
        for lo, hi in self.intervals:
            if not any(a <= lo + tol and hi - tol <= b for a, b in merged):
                return False
        return True


@dataclass(frozen=True)
class BranchMap:
    """A monotone closed-form homeomorphism ``[lo, hi] -> image``.

    ``form`` is ``"affine"`` with ``coef = (slope, offset)`` evaluating
    ``slope*x + offset``, or ``"power"`` with ``coef = (shift_in, exponent,
    offset_out)`` evaluating ``(x - shift_in)**exponent + offset_out``.
    """

    lo: Fraction
    hi: Fraction
    form: str
    coef: tuple[Fraction, ...]

    def __post_init__(self):
        object.__setattr__(self, "lo", as_fraction(self.lo))
        object.__setattr__(self, "hi", as_fraction(self.hi))
        object.__setattr__(self, "coef", tuple(as_fraction(c) for c in self.coef))
        if self.lo > self.hi:
            raise DomainError(f"branch domain [{self.lo}, {self.hi}] is reversed")
        if self.form == "affine":
            if len(self.coef) != 2 or self.coef[0] == 0:
                raise DomainError("affine branch needs (slope != 0, offset)")
        elif self.form == "power":
            if len(self.coef) != 3 or self.coef[1] <= 0:
                raise DomainError("power branch needs (shift_in, exponent > 0, offset_out)")
            if self.lo < self.coef[0]:
                raise DomainError("power branch needs x - shift_in >= 0 on its domain")
        else:
            raise DomainError(f"unknown branch form {self.form!r}")

    @classmethod
    def affine(cls, lo, hi, slope, offset=0) -> BranchMap:
        return cls(lo, hi, "affine", (slope, offset))

    @classmethod
    def power(cls, lo, hi, shift_in, exponent, offset_out=0) -> BranchMap:
        return cls(lo, hi, "power", (shift_in, exponent, offset_out))

    @property
    def domain(self) -> tuple[float, float]:
        return float(self.lo), float(self.hi)

    @property
    def increasing(self) -> bool:
        return self.form == "power" or self.coef[0] > 0

    def in_domain(self, x: float, tol: float = TOL) -> bool:
        lo, hi = self.domain
        return lo - tol <= x <= hi + tol

    def __call__(self, x: float) -> float:
        lo, hi = self.domain
        x = min(max(x, lo), hi)
        if self.form == "affine":
            slope, offset = self.coef
            return float(slope) * x + float(offset)
        s, e, c = self.coef
        return _rpow(max(x - float(s), 0.0), e) + float(c)

    @property
    def image(self) -> tuple[float, float]:
        a, b = self(float(self.lo)), self(float(self.hi))
        return (a, b) if a <= b else (b, a)

    def inverse(self, y: float) -> float:
        """Closed-form inverse on the image (``y`` is clamped into it)."""
        ilo, ihi = self.image
        y = min(max(y, ilo), ihi)
        if self.form == "affine":
            slope, offset = self.coef
            x = (y - float(offset)) / float(slope)
        else:
            s, e, c = self.coef
            x = _rpow(max(y - float(c), 0.0), 1 / e) + float(s)
        lo, hi = self.domain
        return min(max(x, lo), hi)

    def pull_back(self, a: float, b: float) -> tuple[float, float] | None:
        """Sub-interval of the domain mapped into ``[a, b]``; None if it has no length."""
        ilo, ihi = self.image
        ya, yb = max(a, ilo), min(b, ihi)
        if not ya < yb:
            return None
        xa, xb = self.inverse(ya), self.inverse(yb)
        xa, xb = min(xa, xb), max(xa, xb)
        return (xa, xb) if xa < xb else None

    def to_json(self) -> dict:
        d: dict = {"domain": [fraction_str(self.lo), fraction_str(self.hi)], "form": self.form}
        if self.form == "affine":
            d["slope"], d["offset"] = (fraction_str(c) for c in self.coef)
        else:
            d["shift_in"], d["exponent"], d["offset_out"] = (fraction_str(c) for c in self.coef)
        return d

    @classmethod
    def from_json(cls, d: dict) -> BranchMap:
        try:
            lo, hi = d["domain"]
            form = d["form"]
            if form == "affine":
                return cls.affine(lo, hi, d["slope"], d.get("offset", 0))
            if form == "power":
                return cls.power(lo, hi, d.get("shift_in", 0), d["exponent"], d.get("offset_out", 0))
        except (KeyError, TypeError, ValueError) as exc:
            raise DomainError(f"malformed branch spec {d!r}: {exc}") from exc
        raise DomainError(f"unknown branch form {form!r}")


@dataclass(frozen=True)
class ClosedRelation:
    """``F`` as a union of branch graphs, optionally together with the diagonal."""

    space: IntervalUnion
    branches: tuple[BranchMap, ...]
    include_diagonal: bool = False
    name: str = field(default="custom", compare=False)

    def __post_init__(self):
        if not isinstance(self.space, IntervalUnion):
            object.__setattr__(self, "space", IntervalUnion(tuple(self.space)))
        object.__setattr__(self, "branches", tuple(self.branches))
        if not self.branches and not self.include_diagonal:
            raise DomainError("relation is empty")
        for g in self.branches:
            lo, hi = g.domain
            for pair in (g.domain, g.image):
                i = self.space.locate(pair[0], TOL)
                if i is None or self.space.locate(pair[1], TOL) != i:
                    raise DomainError(f"branch {g.to_json()} leaves the space")

        object.__setattr__(self, "_plan", self._offset_plan())

    def _offset_plan(self):
        # per branch: (domain interval, target interval, offset-domain bounds, exact constants)
        lows = [Fraction(lo) for lo, _ in self.space]
        plan = []
        for g in self.branches:
            k = self.space.locate(g.domain[0], TOL)
            k2 = self.space.locate(g.image[0], TOL)
            ulo, uhi = float(g.lo - lows[k]), float(g.hi - lows[k])
            if g.form == "affine":
                slope, offset = g.coef
                consts = (float(slope), float(slope * lows[k] + offset - lows[k2]))
            else:
                s, e, c = g.coef
                consts = (float(lows[k] - s), e, float(c - lows[k2]))
            plan.append((g.form, k, k2, ulo, uhi, consts))
        return tuple(plan)

    def image_offsets(self, k: int, u: float, tol: float = TOL) -> list[tuple[int, float]]:
        """Images of ``lo_k + u`` as ``(interval, offset from its left end)`` pairs.

        The interval ends are never added back in, so a tiny offset keeps its
        full relative precision through root branches (``sqrt(4 + 1e-15 - 4)``
        in plain floats is off by a few percent).
        """
        out = []
        lens = [hi - lo for lo, hi in self.space]
        for form, kk, k2, ulo, uhi, consts in self._plan:
            if kk != k or not ulo - tol <= u <= uhi + tol:
                continue
            v = min(max(u, ulo), uhi)
            if form == "affine":
                w = consts[0] * v + consts[1]
            else:
                w = _rpow(max(v + consts[0], 0.0), consts[1]) + consts[2]
            out.append((k2, min(max(w, 0.0), lens[k2])))
        if self.include_diagonal:
            out.append((k, u))
        return sorted(set(out))

    def with_diagonal(self) -> ClosedRelation:
        return ClosedRelation(self.space, self.branches, True, self.name)

    def without_diagonal(self) -> ClosedRelation:
        return ClosedRelation(self.space, self.branches, False, self.name)

    def contains(self, x: float, y: float, tol: float = TOL) -> bool:
        self.space.check(x)
        self.space.check(y)
        if self.include_diagonal and abs(y - x) <= tol:
            return True
        return any(g.in_domain(x, tol) and abs(y - g(x)) <= tol for g in self.branches)

    def image(self, x: float, tol: float = TOL) -> list[float]:
        self.space.check(x)
        vals = [g(x) for g in self.branches if g.in_domain(x, tol)]
        if self.include_diagonal:
            vals.append(float(x))
        return dedup(vals, tol)

    def preimage(self, y: float, tol: float = TOL) -> list[float]:
        self.space.check(y)
        vals = []
        for g in self.branches:
            ilo, ihi = g.image
            if ilo - tol <= y <= ihi + tol:
                vals.append(g.inverse(y))
        if self.include_diagonal:
            vals.append(float(y))
        return dedup(vals, tol)

    def pull_back(self, pieces: Sequence[tuple[float, float]]) -> list[tuple[float, float]]:
        """``F^{-1}`` of a union of intervals, as merged positive-length intervals."""
        out = []
        for a, b in pieces:
            for g in self.branches:
                p = g.pull_back(a, b)
                if p is not None:
                    out.append(p)
            if self.include_diagonal:
                out.extend(intersect(self.space.intervals, [(a, b)]))
        return _merge(out, 0.0)

    def projections_are_full(self, tol: float = TOL) -> bool:
        if self.include_diagonal:
            return True
        doms = [g.domain for g in self.branches]
        imgs = [g.image for g in self.branches]
        return self.space.covered_by(doms, tol) and self.space.covered_by(imgs, tol)

    def is_structural(self) -> bool:
        """Both ``F`` and ``F^{-1}`` are unions of graphs of monotone homeomorphisms."""
        return all(g.lo < g.hi for g in self.branches)

    def to_json(self) -> dict:
        return {
            "space": [[_num(lo), _num(hi)] for lo, hi in self.space],
            "diagonal": self.include_diagonal,
            "branches": [g.to_json() for g in self.branches],
        }

    @classmethod
    def from_json(cls, d: dict, name: str = "custom") -> ClosedRelation:
        if not isinstance(d, dict) or "space" not in d:
            raise DomainError("relation spec must be an object with a 'space' key")
        try:
            space = IntervalUnion(tuple((float(as_fraction(lo)), float(as_fraction(hi)))
                                        for lo, hi in d["space"]))
            branches = [BranchMap.from_json(b) for b in d.get("branches", [])]
        except (TypeError, ValueError) as exc:
            raise DomainError(f"malformed relation spec: {exc}") from exc
        return cls(space, tuple(branches), bool(d.get("diagonal", False)), name)


def _num(v: float):
    return int(v) if float(v).is_integer() else v


def intersect(a: Sequence[tuple[float, float]], b: Sequence[tuple[float, float]]) -> list[tuple[float, float]]:
    """Positive-length intersections of two interval lists."""
    out = []
    for lo1, hi1 in a:
        for lo2, hi2 in b:
            lo, hi = max(lo1, lo2), min(hi1, hi2)
            if lo < hi:
                out.append((lo, hi))
    return sorted(out)


def load_relation(path: str | Path) -> ClosedRelation:
    p = Path(path)
    try:
        data = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise DomainError(f"{p}: invalid JSON ({exc})") from exc
    return ClosedRelation.from_json(data, name=p.stem)


# -- never-connect slope pairs ------------------------------------------------

def is_never_connect(r, rho, bound: int = NC_BOUND) -> bool:
    """Exact check that ``r < 1 < rho`` and ``r**k != rho**l`` for ``0 < |k|, |l| <= bound``.

    Since ``r < 1 < rho`` only ``r**-k == rho**l`` with ``k, l > 0`` can hold, and the
    symmetric ``(-k, -l)`` case is the same equation inverted.
    """
    r, rho = as_fraction(r), as_fraction(rho)
    if r <= 0 or rho <= 0:
        raise DomainError("r and rho must be positive")
    if bound < 1:
        raise DomainError("bound must be >= 1")
    if not (r < 1 < rho):
        return False
    inv = 1 / r
    rho_pows = {}
    p = Fraction(1)
    for l in range(1, bound + 1):
        p *= rho
        rho_pows[p] = l
    q = Fraction(1)
    for _ in range(1, bound + 1):
        q *= inv
        if q in rho_pows:
            return False
    return True


@dataclass(frozen=True)
class NCPair:
    """A slope pair ``(r, rho)`` verified never-connecting up to ``verified_bound``."""

    r: Fraction
    rho: Fraction
    verified_bound: int = NC_BOUND

    def __post_init__(self):
        object.__setattr__(self, "r", as_fraction(self.r))
        object.__setattr__(self, "rho", as_fraction(self.rho))
        if not is_never_connect(self.r, self.rho, self.verified_bound):
            raise DomainError(f"({self.r}, {self.rho}) is not a never-connect pair "
                              f"up to bound {self.verified_bound}")

    def factor(self, symbol: str) -> Fraction:
        """Exact multiplier for an address symbol ``1, r, rho, 1/r, 1/rho``."""
        table = {"1": Fraction(1), "r": self.r, "rho": self.rho,
                 "1/r": 1 / self.r, "1/rho": 1 / self.rho}
        try:
            return table[symbol]
        except KeyError:
            raise DomainError(f"unknown address symbol {symbol!r}") from None


DEFAULT_PAIR = (Fraction(1, 2), Fraction(3))


# -- builtin relations -------------------------------------------------------

def _devaney_5() -> ClosedRelation:
    A, P = BranchMap.affine, BranchMap.power
    f2 = [A(8, 9, 1, 0), A(0, 1, 1, 2), A(4, 5, 1, 2), P(2, 3, 2, 2, 0), P(6, 7, 6, 3, 4)]
    f3 = [A(0, 1, 1, 0), A(2, 3, 1, 2), A(6, 7, 1, 2),
          P(4, 5, 4, Fraction(1, 2), 2), P(8, 9, 8, Fraction(1, 3), 6)]
    space = IntervalUnion(((0, 1), (2, 3), (4, 5), (6, 7), (8, 9)))
    return ClosedRelation(space, tuple(f2 + f3), True, "devaney_5")


def _three_interval(root: Fraction, name: str) -> ClosedRelation:
    A, P = BranchMap.affine, BranchMap.power
    f2 = [A(0, 1, 1, 2), P(2, 3, 2, 2, 0), A(4, 5, 1, 0)]
    f3 = [A(0, 1, 1, 0), A(2, 3, 1, 2), P(4, 5, 4, root, 2)]
    space = IntervalUnion(((0, 1), (2, 3), (4, 5)))
    return ClosedRelation(space, tuple(f2 + f3), True, name)


def lelek_relation(pair: NCPair, diagonal: bool = False) -> ClosedRelation:
    """``L_{r,rho}`` on ``[0, 1]``, or ``F_{r,rho} = L_{r,rho} + diagonal``."""
    branches = (BranchMap.affine(0, 1, pair.r, 0), BranchMap.affine(0, 1 / pair.rho, pair.rho, 0))
    return ClosedRelation(IntervalUnion(((0, 1),)), branches, diagonal,
                          "lelek_diag" if diagonal else "lelek")


BUILTINS = ("devaney_5", "robinson_3", "knudsen_3", "lelek", "lelek_diag")

SPINES = {
    "devaney_5": (0.0, 2.0, 4.0, 6.0, 8.0),
    "robinson_3": (0.0, 2.0, 4.0),
    "knudsen_3": (0.0, 2.0, 4.0),
}


def builtin_relation(name: str, pair: NCPair | None = None) -> ClosedRelation:
    """One of ``devaney_5``, ``robinson_3``, ``knudsen_3``, ``lelek``, ``lelek_diag``.

    The three Cantor-fan systems carry their identity branch ``f_1`` as the
    diagonal flag; drop it with :meth:`ClosedRelation.without_diagonal` to get
    the base relation ``G`` with ``F = G + diagonal``.
    """
    if name == "devaney_5":
        return _devaney_5()
    if name == "robinson_3":
        return _three_interval(Fraction(1, 3), name)
    if name == "knudsen_3":
        return _three_interval(Fraction(1, 2), name)
    if name in ("lelek", "lelek_diag"):
        if pair is None:
            pair = NCPair(*DEFAULT_PAIR)
        elif not isinstance(pair, NCPair):
            pair = NCPair(*pair)
        return lelek_relation(pair, diagonal=name == "lelek_diag")
    raise DomainError(f"unknown builtin relation {name!r}; choose from {BUILTINS}")
