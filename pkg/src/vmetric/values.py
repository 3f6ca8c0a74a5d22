"""Value sets: the four-values condition, residuation and the distance d_V.

All arithmetic is exact (``fractions.Fraction``); floats are rejected at the
boundary.
"""

from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Iterable, Optional

from .errors import (
    InputNotInValueSet,
    InvalidRational,
    InvalidValueSet,
    OrderViolation,
    TriangleFailure,
)

ZERO = Fraction(0)


def rational(x) -> Fraction:
    """Parse ``x`` (int, Fraction, or a string ``"n"`` / ``"p/q"``) as a nonnegative rational."""
    if isinstance(x, bool) or isinstance(x, float):
        raise InvalidRational(f"floats are not accepted: {x!r}", value=repr(x))
    if isinstance(x, Fraction):
        q = x
    elif isinstance(x, int):
        q = Fraction(x)
    elif isinstance(x, str):
        s = x.strip()
        if not s or "." in s or "e" in s.lower():
            raise InvalidRational(f"not a rational literal: {x!r}", value=x)
        try:
            q = Fraction(s)
        except (ValueError, ZeroDivisionError):
            raise InvalidRational(f"not a rational literal: {x!r}", value=x) from None
    else:
        raise InvalidRational(f"cannot read a rational from {type(x).__name__}", value=repr(x))
    if q < 0:
        raise InvalidRational(f"negative value {q}", value=str(q))
    return q


def fmt(q: Fraction) -> str:
    return str(q)


class ValueSet:
    """A finite set V of nonnegative rationals containing 0, kept sorted."""

    __slots__ = ("values", "_members")

    def __init__(self, values: Iterable):
        vals = sorted({rational(v) for v in values})
        if not vals or vals[0] != 0:
            raise InvalidValueSet("a value set must contain 0")
        self.values = tuple(vals)
        self._members = frozenset(vals)

    def __contains__(self, x):
        return x in self._members

    def __iter__(self):
        return iter(self.values)

    def __len__(self):
        return len(self.values)

    def __eq__(self, other):
        return isinstance(other, ValueSet) and self.values == other.values

    def __hash__(self):
        return hash(self.values)

    def __repr__(self):
        return "ValueSet({" + ", ".join(map(str, self.values)) + "})"

    @property
    def positive(self):
        return self.values[1:]

    @property
    def sup(self):
        return self.values[-1]

    def require(self, *xs):
        for x in xs:
            if x not in self._members:
                raise InputNotInValueSet(f"{x} is not in {self!r}", value=x)

    def to_json(self):
        return {"values": [fmt(v) for v in self.values]}

    @classmethod
    def from_json(cls, obj):
        if not isinstance(obj, dict) or "values" not in obj:
            raise InvalidValueSet('expected {"values": [...]}')
        return cls(obj["values"])


@dataclass(frozen=True)
class Interval:
    lo: Fraction
    hi: Fraction

    @property
    def empty(self):
        return self.lo > self.hi

    def __contains__(self, x):
        return self.lo <= x <= self.hi

    def meet(self, V: ValueSet):
        """Elements of V inside the interval, ascending."""
        return [v for v in V if self.lo <= v <= self.hi]


def phi_interval(u1, u2, u1p, u2p) -> Interval:
    """Range of admissible values for the distance closing a 4-cycle u1, u2 | u1p, u2p."""
    return Interval(max(abs(u1 - u2), abs(u1p - u2p)), min(u1 + u2, u1p + u2p))


def _rho(values, u1, u2, u1p, u2p):
    lo = max(abs(u1 - u2), abs(u1p - u2p))
    hi = min(u1 + u2, u1p + u2p)
    if lo > hi:
        return False
    return any(lo <= v <= hi for v in values)


def rho(V: ValueSet, u1, u2, u1p, u2p) -> bool:
    V.require(u1, u2, u1p, u2p)
    return _rho(V.values, u1, u2, u1p, u2p)


@dataclass(frozen=True)
class CounterExample:
    """A quadruple with rho(u1, u2, u1p, u2p) true but rho(u1, u1p, u2, u2p) false.

    Read as two triangles over a common pair {y, y'}: d(x1,y)=u1,
    d(x1,y')=u2, d(x2,y)=u1p, d(x2,y')=u2p.  Some value of V fits d(y,y'),
    none fits d(x1,x2).
    """

    u1: Fraction
    u2: Fraction
    u1p: Fraction
    u2p: Fraction

    @property
    def quad(self):
        return (self.u1, self.u2, self.u1p, self.u2p)

    def witness(self, V: ValueSet):
        return phi_interval(*self.quad).meet(V)


def four_values_check(V: ValueSet) -> Optional[CounterExample]:
    """Return None if V satisfies the four-values condition, else the first counterexample.

    Only nonzero quadruples are scanned (zero arguments never break the
    condition).  Each configuration is visited in one orientation only, with
    the (u1, u2) pair lexicographically at least (u1p, u2p); the swapped
    orientation describes the same pair of triangles.
    """
    nz = V.positive
    vals = V.values
    for u1, u2, u1p, u2p in product(nz, repeat=4):
        if (u1, u2) < (u1p, u2p):
            continue
        if _rho(vals, u1, u2, u1p, u2p) and not _rho(vals, u1, u1p, u2, u2p):
            return CounterExample(u1, u2, u1p, u2p)
    return None


def sufficient_condition_check(V: ValueSet) -> bool:
    """Whether every difference/sum window [u1 - u1', u2 + u2'] that is nonempty meets V.

    This implies the four-values condition (the closing distance of any
    amalgam is bounded below by a difference and above by a sum of values).
    """
    vals = V.values
    for u1, u1p in product(vals, repeat=2):
        lo = u1 - u1p
        if lo <= 0:
            continue  # 0 is always a witness
        for u2, u2p in product(vals, repeat=2):
            hi = u2 + u2p
            if lo <= hi and not any(lo <= v <= hi for v in vals):
                return False
    return True


def residuation(V: ValueSet, x, y) -> Fraction:
    """Least r in V with y <= x + r (written y \\ x)."""
    V.require(x, y)
    if x > y:
        raise OrderViolation(f"residuation needs x <= y, got {x} > {y}", x=x, y=y)
    for r in V:
        if y <= x + r:
            return r
    raise AssertionError("unreachable: y <= x + y with y in V")


def _dv(vals, x, y):
    gap = abs(x - y)
    for r in vals:
        if gap <= r:
            return r
    raise AssertionError("unreachable")


def dv_distance(V: ValueSet) -> dict:
    """The canonical distance d_V(x, y) = min{r in V : |x - y| <= r} on V.

    Returns ``{(x, y): d_V(x, y)}`` for all ordered pairs.  Raises
    TriangleFailure(x, z, y) for the first triple (in lexicographic order of
    (x, z, y)) with d_V(x, y) > d_V(x, z) + d_V(z, y); this happens exactly
    when V fails the four-values condition.
    """
    vals = V.values
    table = {(x, y): _dv(vals, x, y) for x, y in product(vals, repeat=2)}
    for x, z, y in product(vals, repeat=3):
        if table[x, y] > table[x, z] + table[z, y]:
            raise TriangleFailure(
                f"d_V({x},{y}) = {table[x, y]} > d_V({x},{z}) + d_V({z},{y}) = "
                f"{table[x, z]} + {table[z, y]}",
                triple=[x, z, y],
            )
    return table


def initial_segment(V: ValueSet, ell) -> ValueSet:
    ell = rational(ell)
    return ValueSet(v for v in V if v <= ell)


def gap_report(V: ValueSet) -> dict:
    """For each nonzero w, whether ]w/2, w[ misses V; plus maximal runs of V \\ {0}.

    A run is a maximal block of consecutive nonzero values (descending) in
    which each next value exceeds half of the previous one.  Runs are
    reported as [low, high] pairs, highest run first.
    """
    vals = V.values
    gaps = []
    for w in V.positive:
        half = w / 2
        gaps.append((w, not any(half < v < w for v in vals)))

    runs = []
    desc = sorted(V.positive, reverse=True)
    if desc:
        hi = lo = desc[0]
        for v in desc[1:]:
            if v > lo / 2:
                lo = v
            else:
                runs.append((lo, hi))
                hi = lo = v
        runs.append((lo, hi))
    return {"gaps": gaps, "runs": runs}
