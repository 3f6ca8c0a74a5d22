"""Amalgamation over a value set, d-sockets and their orbits, and the
finite Urysohn approximant builder.
"""

import random
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Dict, List, Optional, Sequence, Tuple

from .errors import (
    AgreementViolation,
    EmptyOrbit,
    FourValuesFailure,
    HypothesisViolated,
    InvalidSocket,
    NoAmalgam,
    PreconditionViolated,
    SpectrumViolation,
)
from .space import FiniteMetricSpace, build_space
from .values import ValueSet, four_values_check, fmt, rational


# -- sockets -----------------------------------------------------------------

@dataclass(frozen=True)
class DSocket:
    """Constraints (b_i, d_i): a point at distance d_i from each b_i."""

    entries: Tuple[Tuple[str, Fraction], ...] = ()

    @classmethod
    def of(cls, pairs):
        return cls(tuple((str(b), rational(d)) for b, d in pairs))

    @property
    def vertices(self):
        return [b for b, _ in self.entries]

    def __len__(self):
        return len(self.entries)

    def extend(self, b, d) -> "DSocket":
        return DSocket(self.entries + ((b, rational(d)),))

    def to_json(self):
        return {"entries": [{"b": b, "d": fmt(d)} for b, d in self.entries]}

    @classmethod
    def from_json(cls, obj):
        if not isinstance(obj, dict) or not isinstance(obj.get("entries"), list):
            raise InvalidSocket('expected {"entries": [{"b": ..., "d": ...}]}')
        try:
            return cls.of((e["b"], e["d"]) for e in obj["entries"])
        except (KeyError, TypeError):
            raise InvalidSocket("socket entries need keys 'b' and 'd'") from None


def socket_failure(space: FiniteMetricSpace, socket: DSocket, V: Optional[ValueSet] = None):
    """First violated socket condition as a short message, or None."""
    for b, _ in socket.entries:
        space.index(b)  # UnknownPoint
    if V is not None:
        for b, d in socket.entries:
            if d not in V:
                return f"d={d} for vertex {b} is not in the value set"
    ent = socket.entries
    for i in range(len(ent)):
        bi, di = ent[i]
        for j in range(i + 1, len(ent)):
            bj, dj = ent[j]
            dij = space.d(bi, bj)
            if di + dj < dij:
                return f"{di} + {dj} < d({bi},{bj}) = {dij}"
            if abs(di - dj) > dij:
                return f"|{di} - {dj}| > d({bi},{bj}) = {dij}"
    return None


def validate_dsocket(space, socket: DSocket, V: Optional[ValueSet] = None) -> bool:
    return socket_failure(space, socket, V) is None


def orbit(space: FiniteMetricSpace, socket: DSocket) -> List[str]:
    """Points s with d(s, b_i) = d_i for every entry, in label order."""
    rows = [(space.index(b), d) for b, d in socket.entries]
    return [
        lab for k, lab in enumerate(space.labels)
        if all(space.dist[k][i] == d for i, d in rows)
    ]


# -- amalgamation ------------------------------------------------------------

@dataclass
class AmalgamResult:
    space: FiniteMetricSpace
    chosen: Dict[Tuple[str, str], Fraction] = field(default_factory=dict)
    admissible: Optional[List[Fraction]] = None
    bounds: Optional[Tuple[Fraction, Optional[Fraction]]] = None

    def to_json(self):
        out = {
            "space": self.space.to_json(),
            "chosen": [{"pair": list(k), "d": fmt(v)} for k, v in self.chosen.items()],
        }
        if self.admissible is not None:
            out["admissible"] = [fmt(v) for v in self.admissible]
        if self.bounds is not None:
            lo, hi = self.bounds
            out["bounds"] = [fmt(lo), None if hi is None else fmt(hi)]
        return out


def _check_in_v(M: FiniteMetricSpace, V: ValueSet, name):
    for i, row in enumerate(M.dist):
        for j, q in enumerate(row):
            if q not in V:
                raise SpectrumViolation(
                    f"{name}: d({M.labels[i]},{M.labels[j]}) = {q} not in value set",
                    i=M.labels[i], j=M.labels[j], value=q,
                )


def _check_agreement(M1, M2, shared):
    for i, x in enumerate(shared):
        for y in shared[i + 1:]:
            if M1.d(x, y) != M2.d(x, y):
                raise AgreementViolation(
                    f"d({x},{y}) is {M1.d(x, y)} in the first space and {M2.d(x, y)} in the second",
                    pair=[x, y],
                )


def amalgam_bounds(d1: Sequence[Fraction], d2: Sequence[Fraction]):
    """(a', a) for one new distance given paired distances to shared points.

    a is None (no upper bound) when there are no shared points.
    """
    lo = Fraction(0)
    hi = None
    for u, v in zip(d1, d2):
        diff = abs(u - v)
        if diff > lo:
            lo = diff
        s = u + v
        if hi is None or s < hi:
            hi = s
    return lo, hi


def _admissible(V: ValueSet, lo, hi):
    return [v for v in V.positive if lo <= v and (hi is None or v <= hi)]


def one_point_amalgam(M1: FiniteMetricSpace, M2: FiniteMetricSpace, V: ValueSet) -> AmalgamResult:
    """Amalgamate spaces differing in exactly one point each."""
    only1 = [x for x in M1.labels if x not in M2]
    only2 = [x for x in M2.labels if x not in M1]
    if len(only1) != 1 or len(only2) != 1:
        raise PreconditionViolated(
            "one_point_amalgam needs exactly one private point on each side",
            only_first=only1, only_second=only2,
        )
    _check_in_v(M1, V, "first space")
    _check_in_v(M2, V, "second space")
    shared = [x for x in M1.labels if x in M2]
    _check_agreement(M1, M2, shared)
    x1, x2 = only1[0], only2[0]
    lo, hi = amalgam_bounds([M1.d(x1, z) for z in shared], [M2.d(x2, z) for z in shared])
    adm = _admissible(V, lo, hi)
    if not adm:
        raise NoAmalgam(
            f"no positive value of V in [{lo}, {hi}] for d({x1},{x2})",
            pair=[x1, x2], lo=lo, hi=hi,
        )
    w = adm[0]
    labels = list(M1.labels) + [x2]
    n = len(labels)
    dist = [list(row) + [None] for row in M1.dist] + [[None] * n]
    for j, z in enumerate(labels[:-1]):
        dz = w if z == x1 else M2.d(x2, z)
        dist[n - 1][j] = dist[j][n - 1] = dz
    dist[n - 1][n - 1] = Fraction(0)
    space = FiniteMetricSpace(labels, dist, V)
    return AmalgamResult(space, {(x1, x2): w}, adm, (lo, hi))


def disjoint_amalgam(M1: FiniteMetricSpace, M2: FiniteMetricSpace, V: ValueSet) -> AmalgamResult:
    """Common extension of two spaces agreeing on their intersection.

    Each private point x of M2 (label order) is glued onto the current space
    by deciding d(x, p) for the private points p of M1 one at a time, each
    decision being a one-point amalgam over the shared points, the M2 points
    already glued, and the M1 points already decided for x.
    """
    _check_in_v(M1, V, "first space")
    _check_in_v(M2, V, "second space")
    shared = [x for x in M1.labels if x in M2]
    _check_agreement(M1, M2, shared)
    new1 = [x for x in M1.labels if x not in M2]
    new2 = [x for x in M2.labels if x not in M1]
    if not new2:
        return AmalgamResult(M1)
    if not new1:
        return AmalgamResult(M2)

    labels = list(M1.labels)
    idx = {lab: i for i, lab in enumerate(labels)}
    dist = [list(row) for row in M1.dist]
    chosen = {}
    base_known = list(shared)  # points whose distance to the incoming point is fixed by M2
    step = 0
    for x in new2:
        row = [None] * len(labels)
        for z in base_known:
            row[idx[z]] = M2.d(x, z)
        decided = [idx[z] for z in base_known]
        for p in new1:
            step += 1
            ip = idx[p]
            lo, hi = amalgam_bounds([dist[ip][j] for j in decided], [row[j] for j in decided])
            adm = _admissible(V, lo, hi)
            if not adm:
                raise NoAmalgam(
                    f"step {step}: no positive value of V in [{lo}, {hi}] for d({p},{x})",
                    step=step, pair=[p, x], lo=lo, hi=hi,
                )
            row[ip] = adm[0]
            chosen[(p, x)] = adm[0]
            decided.append(ip)
        idx[x] = len(labels)
        labels.append(x)
        for r, d in zip(dist, row):
            r.append(d)
        dist.append(row + [Fraction(0)])
        base_known.append(x)
    space = FiniteMetricSpace(labels, dist, V)
    return AmalgamResult(space, chosen)


def _fresh_label(space, prefix="p"):
    n = len(space)
    while f"{prefix}{n}" in space:
        n += 1
    return f"{prefix}{n}"


def realize_socket(space: FiniteMetricSpace, socket: DSocket, V: ValueSet, label: Optional[str] = None):
    """Extend ``space`` by a point realizing ``socket``; returns (space, point).

    A socket with a zero entry is already realized by that vertex, which is
    returned with the space unchanged.
    """
    why = socket_failure(space, socket, V)
    if why is not None:
        raise InvalidSocket(why, socket=socket.to_json())
    for b, d in socket.entries:
        if d == 0:
            return space, b
    label = label or _fresh_label(space)
    if label in space:
        raise InvalidSocket(f"label {label!r} already used")
    verts = list(dict.fromkeys(socket.vertices))
    target = {b: d for b, d in socket.entries}
    sub_labels = verts + [label]
    sub = [[space.d(a, b) for b in verts] + [target[a]] for a in verts]
    sub.append([target[b] for b in verts] + [Fraction(0)])
    M2 = FiniteMetricSpace(sub_labels, sub, V)
    res = disjoint_amalgam(space, M2, V)
    return res.space, label


# -- lemmas on sockets -------------------------------------------------------

def rim_extend(space: FiniteMetricSpace, socket: DSocket, a: str, r) -> DSocket:
    """Extend ``socket`` by (a, r) when some orbit point lies within r of a
    and every vertex is at distance >= r from a."""
    r = rational(r)
    why = socket_failure(space, socket)
    if why is not None:
        raise PreconditionViolated(f"socket is not valid: {why}", hypothesis="valid-socket")
    for b, _ in socket.entries:
        if space.d(a, b) < r:
            raise PreconditionViolated(
                f"d({a},{b}) = {space.d(a, b)} < r = {r}", hypothesis="far-vertices", vertex=b
            )
    orb = orbit(space, socket)
    if not orb:
        raise PreconditionViolated("socket has empty orbit", hypothesis="nonempty-orbit")
    if not any(space.d(a, x) <= r for x in orb):
        raise PreconditionViolated(f"no orbit point within {r} of {a}", hypothesis="near-witness")
    ext = socket.extend(a, r)
    for b, d in socket.entries:
        dab = space.d(a, b)
        if not (r + d >= dab and d + dab >= r and r + dab >= d):
            raise InvalidSocket(f"extension by ({a},{r}) breaks the socket at {b}")
    return ext


def orbit_diameter_check(space: FiniteMetricSpace, socket: DSocket):
    """(ell, ok): ell is the least socket distance, ok says the orbit has diameter <= 2*ell."""
    if not socket.entries:
        raise InvalidSocket("orbit_diameter_check needs a nonempty socket")
    orb = orbit(space, socket)
    if not orb:
        raise EmptyOrbit("socket has no realizer", socket=socket.to_json())
    ell = min(d for _, d in socket.entries)
    idx = [space.index(x) for x in orb]
    ok = all(space.dist[i][j] <= 2 * ell for i in idx for j in idx)
    return ell, ok


def iter_socket_vectors(space: FiniteMetricSpace, vertices: Sequence[str], values: Sequence[Fraction]):
    """Valid positive distance vectors over ``vertices`` in lexicographic order."""
    idx = [space.index(b) for b in vertices]
    D = space.dist
    k = len(idx)
    cur = []

    def rec(i):
        if i == k:
            yield tuple(cur)
            return
        for v in values:
            ok = True
            for j in range(i):
                dij = D[idx[i]][idx[j]]
                u = cur[j]
                if u + v < dij or abs(u - v) > dij:
                    ok = False
                    break
            if ok:
                cur.append(v)
                yield from rec(i + 1)
                cur.pop()

    yield from rec(0)


def holes_check(space: FiniteMetricSpace, centers: Sequence[str], radii: Sequence, max_socket_size: int = 3,
                V: Optional[ValueSet] = None) -> dict:
    """Check that removing separated open balls keeps small sockets realized.

    Sockets range over vertex sets of size 1..max_socket_size in the
    complement, with positive distances from V (default: the bound value set,
    else the spectrum).  For each, the orbit in the whole space is computed;
    sockets with no realizer at all are reported as ``unrealized`` (the
    approximant is too small), and sockets realized only inside the removed
    balls are ``violations``.  When an orbit point sits inside a ball, the
    rim extension toward that ball's center is tried and counted.
    """
    if len(centers) != len(radii):
        raise PreconditionViolated("centers and radii differ in length")
    radii = [rational(r) for r in radii]
    if any(r <= 0 for r in radii):
        raise PreconditionViolated("radii must be positive")
    for i, j in combinations(range(len(centers)), 2):
        dij = space.d(centers[i], centers[j])
        if dij < radii[i] + radii[j]:
            raise HypothesisViolated(
                f"d({centers[i]},{centers[j]}) = {dij} < {radii[i]} + {radii[j]}", i=i, j=j
            )
    removed = [
        x for x in space.labels
        if any(space.d(c, x) < r for c, r in zip(centers, radii))
    ]
    rem = set(removed)
    comp = [x for x in space.labels if x not in rem]
    V = V or space.value_set or space.spectrum()
    values = list(V.positive)
    index = _OrbitIndex(space)
    comp_idx = {space.index(x) for x in comp}

    checked = met = via_rim = 0
    unrealized, violations = [], []
    for size in range(1, max_socket_size + 1):
        for verts in combinations(comp, size):
            for vec in iter_socket_vectors(space, verts, values):
                checked += 1
                orb = index.orbit(verts, vec)
                if not orb:
                    unrealized.append(_sock_json(verts, vec))
                    continue
                if orb & comp_idx:
                    met += 1
                    continue
                # every realizer fell in a removed ball: try the rim extension
                sock = DSocket(tuple(zip(verts, vec)))
                found = False
                for c, r in zip(centers, radii):
                    try:
                        ext = rim_extend(space, sock, c, r)
                    except PreconditionViolated:
                        continue
                    if set(orbit(space, ext)) & set(comp):
                        found = True
                        break
                if found:
                    via_rim += 1
                else:
                    violations.append(_sock_json(verts, vec))
    return {
        "hypothesis": True,
        "removed": removed,
        "complement_size": len(comp),
        "sockets_checked": checked,
        "met": met,
        "met_via_rim": via_rim,
        "unrealized": unrealized,
        "violations": violations,
        "ok": not unrealized and not violations,
    }


def _sock_json(verts, vec):
    return {"entries": [{"b": b, "d": fmt(d)} for b, d in zip(verts, vec)]}


class _OrbitIndex:
    """at[i][v] = indices at distance v from point i, for fast orbit queries."""

    def __init__(self, space=None):
        self.at: List[Dict[Fraction, set]] = []
        self.labels: List[str] = []
        self.pos: Dict[str, int] = {}
        if space is not None:
            for lab, row in zip(space.labels, space.dist):
                self.add(lab, row)

    def add(self, label, row):
        k = len(self.at)
        m = {}
        for j, d in enumerate(row[:k]):
            m.setdefault(d, set()).add(j)
            self.at[j].setdefault(d, set()).add(k)
        m.setdefault(Fraction(0), set()).add(k)
        self.at.append(m)
        self.labels.append(label)
        self.pos[label] = k

    def orbit(self, verts, vec) -> set:
        sets = []
        for b, d in zip(verts, vec):
            s = self.at[self.pos[b]].get(d)
            if not s:
                return set()
            sets.append(s)
        sets.sort(key=len)
        out = set(sets[0])
        for s in sets[1:]:
            out &= s
            if not out:
                break
        return out


# -- Urysohn approximant -----------------------------------------------------

@dataclass
class ApproximantResult:
    space: FiniteMetricSpace
    complete_prefix: int
    log: List[dict]
    exhausted: bool
    max_socket_size: Optional[int] = None

    def report(self):
        return {
            "points": len(self.space),
            "complete_prefix": self.complete_prefix,
            "exhausted": self.exhausted,
            "max_socket_size": self.max_socket_size,
        }


def urysohn_approximant(V: ValueSet, seed: Optional[FiniteMetricSpace] = None, max_points: int = 16,
                        rng_seed: int = 0, max_socket_size: Optional[int] = None) -> ApproximantResult:
    """Grow a finite space towards the homogeneous universal space over V.

    Sockets are served in tiers: tier k holds the sockets whose vertices lie
    among the first k points and include point k-1.  Inside a tier sockets go
    by vertex-set size, then vertex set, then distance vector; ``rng_seed``
    shuffles the order inside each (tier, size) group only.  A socket is
    realized when its orbit is empty.  ``complete_prefix`` is the largest k
    for which every tier up to k was fully served, i.e. every socket (up to
    ``max_socket_size`` vertices) over the first k points is realized.
    """
    bad = four_values_check(V)
    if bad is not None:
        raise FourValuesFailure(
            "the value set fails the four-values condition", counterexample=list(bad.quad)
        )
    if max_points < 1:
        raise PreconditionViolated("max_points must be >= 1")
    space = seed if seed is not None else build_space(["p0"], [[0]], V)
    if seed is not None:
        _check_in_v(seed, V, "seed")
        space = FiniteMetricSpace(seed.labels, seed.dist, V, validate=False)
    rng = random.Random(rng_seed)
    values = list(V.positive)
    index = _OrbitIndex(space)
    log = []
    complete = 0
    k = 1
    exhausted = False
    while True:
        if k > len(space):
            exhausted = True
            break
        budget_hit = False
        newest = space.labels[k - 1]
        older = space.labels[: k - 1]
        top = k if max_socket_size is None else min(k, max_socket_size)
        for size in range(1, top + 1):
            group = []
            for rest in combinations(older, size - 1):
                verts = rest + (newest,)
                for vec in iter_socket_vectors(space, verts, values):
                    group.append((verts, vec))
            rng.shuffle(group)
            for verts, vec in group:
                if index.orbit(verts, vec):
                    continue
                if len(space) >= max_points:
                    budget_hit = True
                    break
                sock = DSocket(tuple(zip(verts, vec)))
                space, lab = realize_socket(space, sock, V)
                index.add(lab, space.dist[-1])
                log.append({"step": len(log) + 1, "tier": k, "socket": sock.to_json(), "point": lab})
            if budget_hit:
                break
        if budget_hit:
            break
        complete = k
        k += 1
    return ApproximantResult(space, complete, log, exhausted, max_socket_size)
