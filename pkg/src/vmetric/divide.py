"""Explicit two-block partitions of finite spaces and empirical divisibility.

Rings are half-open: R_c(lo, hi) = {x : lo <= d(c, x) < hi}.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from math import floor
from typing import Dict, List, Optional, Sequence

from .connect import eps_components
from .errors import BadBounds, BadSequence, CannotSeparate, Degenerate, InvalidPartition, SpaceError
from .space import FiniteMetricSpace, find_embedding, iter_embeddings
from .ultra import require_ultrametric
from .values import ValueSet, fmt, rational


def ring(space: FiniteMetricSpace, c, lo, hi) -> List[str]:
    lo, hi = rational(lo), rational(hi)
    if not lo < hi:
        raise BadBounds(f"ring needs 0 <= lo < hi, got [{lo}, {hi})", lo=lo, hi=hi)
    i = space.index(c)
    return [x for x, d in zip(space.labels, space.dist[i]) if lo <= d < hi]


def stripe_index(t: Fraction, l: Fraction) -> int:
    """The n >= 1 with l(n-1)/n <= t < ln/(n+1), for 0 <= t < l."""
    n = floor(l / (l - t))
    assert l * (n - 1) / n <= t < l * n / (n + 1)
    return n


def stripes(space: FiniteMetricSpace, c, l):
    """(E, O): points of the open ball of radius l around c, by stripe parity (even -> E)."""
    l = rational(l)
    if l <= 0:
        raise BadBounds("l must be positive", l=l)
    i = space.index(c)
    E, O = [], []
    for x, t in zip(space.labels, space.dist[i]):
        if t < l:
            (E if stripe_index(t, l) % 2 == 0 else O).append(x)
    return E, O


# -- ball covers -------------------------------------------------------------

@dataclass
class BallCover:
    centers: List[str]
    radii: Dict[str, Fraction]
    members: Dict[str, List[str]]

    def to_json(self):
        return {
            "centers": self.centers,
            "radii": {c: fmt(r) for c, r in self.radii.items()},
            "members": self.members,
        }

    @classmethod
    def from_json(cls, obj):
        return cls(list(obj["centers"]), {c: rational(r) for c, r in obj["radii"].items()},
                   {c: list(m) for c, m in obj.get("members", {}).items()})


def _pick_radius(cap: Fraction, realized: Sequence[Fraction]) -> Fraction:
    """Midpoint of the widest gap of (0, cap) cut at realized distances; ties go to the larger radius."""
    cuts = sorted({Fraction(0), cap} | {v for v in realized if 0 < v < cap})
    best = None
    for a, b in zip(cuts, cuts[1:]):
        if best is None or b - a >= best[1] - best[0]:
            best = (a, b)
    return (best[0] + best[1]) / 2


def ball_cover(space: FiniteMetricSpace, Lambda, order: Optional[Sequence[str]] = None) -> BallCover:
    """Greedy cover by disjoint open balls R_c(0, l_c) with 2 l_c < Lambda.

    Each new center is the first uncovered point of ``order``; its radius is
    the midpoint of the widest gap between realized distances below
    min(Lambda/2, distance to already covered points).
    """
    Lambda = rational(Lambda)
    if Lambda <= 0:
        raise BadBounds("Lambda must be positive", Lambda=Lambda)
    order = list(order) if order is not None else list(space.labels)
    if sorted(order) != sorted(space.labels):
        raise InvalidPartition("order must list every point exactly once")
    realized = sorted(space.spectrum().positive)
    covered = {}
    centers, radii, members = [], {}, {}
    for c in order:
        if c in covered:
            continue
        row = space.row(c)
        cap = Lambda / 2
        for x in covered:
            cap = min(cap, row[x])
        if cap <= 0:
            raise CannotSeparate(f"no room for a ball at {c}", center=c)
        l = _pick_radius(cap, realized)
        centers.append(c)
        radii[c] = l
        members[c] = [x for x in space.labels if row[x] < l]
        for x in members[c]:
            covered[x] = c
    cover = BallCover(centers, radii, members)
    check_cover(space, cover, Lambda)
    return cover


def check_cover(space, cover: BallCover, Lambda=None):
    seen = {}
    realized = set(space.spectrum())
    for c in cover.centers:
        l = cover.radii[c]
        if l in realized:
            raise CannotSeparate(f"radius {l} at {c} is a realized distance", center=c)
        if Lambda is not None and not 2 * l < Lambda:
            raise CannotSeparate(f"radius {l} at {c} violates 2l < Lambda", center=c)
        for x in space.labels:
            if space.d(c, x) < l:
                if x in seen:
                    raise CannotSeparate(f"balls at {seen[x]} and {c} overlap at {x}", pair=[seen[x], c])
                seen[x] = c
    missing = [x for x in space.labels if x not in seen]
    if missing:
        raise CannotSeparate(f"points not covered: {missing}", missing=missing)


def divisibility_partition(space: FiniteMetricSpace, cover: BallCover):
    """Union over cover balls of their stripes (E, O)."""
    E, O = set(), set()
    for c in cover.centers:
        e, o = stripes(space, c, cover.radii[c])
        E.update(e)
        O.update(o)
    return [x for x in space.labels if x in E], [x for x in space.labels if x in O]


# -- unbounded construction -------------------------------------------------

@dataclass
class UnboundedPartition:
    r_seq: List[Fraction]
    a_seq: List[str]
    E: List[str]
    O: List[str]
    steps: int

    def to_json(self):
        return {
            "r_seq": [fmt(r) for r in self.r_seq],
            "a_seq": self.a_seq,
            "E": self.E,
            "O": self.O,
            "steps": self.steps,
        }


def unbounded_partition(space: FiniteMetricSpace, a0) -> UnboundedPartition:
    """Rings R_{a0}(r_i, r_{i+1}) with r_0 = 0 and r_{i+1} = d(a0, a_{i+1}) + r_i + g.

    a_{i+1} is the nearest point (label order on ties) with d(a0, .) > 2 r_i,
    and g is the least positive distance.  Even rings and the tail beyond the
    last radius when its index is even go to E.
    """
    i0 = space.index(a0)
    pos = space.spectrum().positive
    if not pos:
        raise Degenerate("a one-point space has no rings")
    g = pos[0]
    row = sorted(zip(space.dist[i0], range(len(space))))
    r = [Fraction(0)]
    a = []
    while True:
        nxt = next(((d, j) for d, j in row if d > 2 * r[-1]), None)
        if nxt is None:
            break
        d, j = nxt
        a.append(space.labels[j])
        r.append(d + r[-1] + g)
    if len(r) - 1 < 2:
        raise Degenerate(f"only {len(r) - 1} ring(s) produced", rings=len(r) - 1)
    E, O = [], []
    for x, t in zip(space.labels, space.dist[i0]):
        k = next((i for i in range(len(r) - 1) if r[i] <= t < r[i + 1]), len(r) - 1)
        (E if k % 2 == 0 else O).append(x)
    return UnboundedPartition(r, a, E, O, len(a))


# -- ultrametric spectrum partition -----------------------------------------

@dataclass
class SpecPartition:
    E: List[str]
    O: List[str]
    centers: List[str]
    in_spectrum: bool

    @property
    def ball_count(self):
        return len(self.centers)

    def to_json(self):
        return {"E": self.E, "O": self.O, "centers": self.centers,
                "ball_count": self.ball_count, "in_spectrum": self.in_spectrum}


def ultra_spec_partition(space: FiniteMetricSpace, a, r_seq: Sequence) -> SpecPartition:
    """Cover by open balls of radius s = max(r_seq), starting at ``a``; ring i of each ball
    (r_i <= d < r_{i+1}) goes to E for even i, O for odd i."""
    require_ultrametric(space)
    r = [rational(x) for x in r_seq]
    if len(r) < 2 or r[0] != 0 or any(x >= y for x, y in zip(r, r[1:])):
        raise BadSequence("r_seq must start at 0 and increase strictly, with at least two terms",
                          r_seq=r)
    ia = space.index(a)
    spec_a = set(space.dist[ia])
    s = r[-1]
    order = [a] + [x for x in space.labels if x != a]
    assigned = set()
    centers, E, O = [], set(), set()
    for c in order:
        if c in assigned:
            continue
        centers.append(c)
        for x, t in space.row(c).items():
            if t < s and x not in assigned:
                assigned.add(x)
                k = next(i for i in range(len(r) - 1) if r[i] <= t < r[i + 1])
                (E if k % 2 == 0 else O).add(x)
    return SpecPartition(
        [x for x in space.labels if x in E],
        [x for x in space.labels if x in O],
        centers,
        all(x in spec_a for x in r),
    )


# -- sub-isolation -----------------------------------------------------------

def _patterns(values: Sequence[Fraction], k: int):
    """Metric spaces on k points with positive distances from ``values`` (labeled, unreduced)."""
    pairs = [(i, j) for i in range(k) for j in range(i + 1, k)]
    labels = [f"x{i}" for i in range(k)]
    for vec in product(values, repeat=len(pairs)):
        D = [[Fraction(0)] * k for _ in range(k)]
        for (i, j), v in zip(pairs, vec):
            D[i][j] = D[j][i] = v
        try:
            yield FiniteMetricSpace(labels, D)
        except SpaceError:
            continue


def sub_isolated_at(space: FiniteMetricSpace, a, eps, W: ValueSet, pattern_sizes=(2,)) -> bool:
    """Some pattern over W with diameter <= eps has no copy through a."""
    eps = rational(eps)
    ia = space.index(a)
    spec_a = set(space.dist[ia])
    vals = [w for w in W.positive if w <= eps]
    for k in sorted(pattern_sizes):
        if k < 2:
            continue
        if k == 2:
            if any(w not in spec_a for w in vals):
                return True
            continue
        for X in _patterns(vals, k):
            through = any(
                next(iter_embeddings(X, space, 1, fixed={x: a}), None) is not None for x in X.labels
            )
            if not through:
                return True
    return False


def sub_isolated_points(space: FiniteMetricSpace, W: ValueSet, pattern_sizes=(2,)) -> List[str]:
    scales = space.spectrum().positive
    return [
        a for a in space.labels
        if all(sub_isolated_at(space, a, e, W, pattern_sizes) for e in scales)
    ]


def scattered_fixpoint(space: FiniteMetricSpace, W: ValueSet, pattern_sizes=(2,)):
    """Iterated removal of sub-isolated points: (chain of point lists, ends empty?)."""
    chain = [list(space.labels)]
    cur = space
    while len(cur):
        drop = set(sub_isolated_points(cur, W, pattern_sizes))
        if not drop:
            break
        cur = cur.restrict([x for x in cur.labels if x not in drop])
        chain.append(list(cur.labels))
    return chain, len(cur) == 0


# -- experiments --------------------------------------------------------------

def check_partition(space, blocks):
    seen = set()
    for b in blocks:
        for x in b:
            space.index(x)
            if x in seen:
                raise InvalidPartition(f"point {x!r} in two blocks", point=x)
            seen.add(x)
    if len(seen) != len(space):
        missing = [x for x in space.labels if x not in seen]
        raise InvalidPartition(f"points in no block: {missing}", missing=missing)


def _block_copy(args):
    space, block = args
    return find_embedding(space, space, allowed=block)


def divisibility_experiment(space: FiniteMetricSpace, blocks: Sequence[Sequence[str]], jobs: int = 1) -> dict:
    """Which blocks contain an isometric copy of the whole space."""
    check_partition(space, blocks)
    tasks = [(space, list(b)) for b in blocks]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            found = list(ex.map(_block_copy, tasks))
    else:
        found = [_block_copy(t) for t in tasks]
    rows = [
        {"block": [x for x in space.labels if x in set(b)], "contains_copy": f is not None, "witness": f}
        for b, f in zip(blocks, found)
    ]
    return {"blocks": rows, "divisible": not any(r["contains_copy"] for r in rows)}


def guard_ring_check(space: FiniteMetricSpace, c, r0, r1, r2, r3, eps) -> dict:
    """With the guard rings R_c(r0, r1) and R_c(r2, r3) removed, no eps-component
    mixes points of R_c(r1, r2) with points outside R_c(r0, r3)."""
    r0, r1, r2, r3, eps = map(rational, (r0, r1, r2, r3, eps))
    if not (r0 < r1 <= r2 < r3):
        raise BadBounds("need r0 < r1 <= r2 < r3")
    if not (0 < eps < min(r1 - r0, r3 - r2)):
        raise BadBounds("need 0 < eps < min(r1 - r0, r3 - r2)", eps=eps)
    row = space.row(c)
    keep = [x for x in space.labels if not (r0 <= row[x] < r1 or r2 <= row[x] < r3)]
    sub = space.restrict(keep)
    crossing = []
    comps = eps_components(sub, eps)
    for comp in comps:
        inside = [x for x in comp if r1 <= row[x] < r2]
        outside = [x for x in comp if not (r0 <= row[x] < r3)]
        if inside and outside:
            crossing.append({"inside": inside, "outside": outside})
    return {"ok": not crossing, "components": len(comps), "kept": len(keep), "crossing": crossing}
