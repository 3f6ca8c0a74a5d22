"""Finite metric spaces with exact rational distances.

Points are identified by label strings; the distance matrix is indexed in
label order.  Spaces are immutable once built.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from math import lcm
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np

from .errors import (
    EmptyFactor,
    SeparationViolation,
    SpaceError,
    SpectrumViolation,
    SymmetryViolation,
    TriangleViolation,
    UnknownPoint,
    ValueSetTooSparse,
)
from .values import ValueSet, fmt, rational

_INT64_SAFE = 2**61


class FiniteMetricSpace:
    """Labeled points with a validated exact distance matrix.

    Build through :func:`build_space` (validating) or the constructor with
    ``validate=False`` for internal paths that already guarantee the axioms.
    """

    __slots__ = ("labels", "dist", "value_set", "_index", "_spectrum", "_scaled")

    def __init__(self, labels, dist, value_set: Optional[ValueSet] = None, validate=True):
        self.labels = tuple(str(x) for x in labels)
        self.dist = tuple(tuple(rational(x) for x in row) for row in dist)
        self.value_set = value_set
        self._index = {lab: i for i, lab in enumerate(self.labels)}
        self._spectrum = None
        self._scaled = None
        if len(self._index) != len(self.labels):
            raise SpaceError("duplicate point labels")
        n = len(self.labels)
        if len(self.dist) != n or any(len(row) != n for row in self.dist):
            raise SpaceError(f"distance matrix must be {n}x{n}")
        if validate:
            self._validate()

    # -- validation -----------------------------------------------------
    def _validate(self):
        n = len(self.labels)
        d = self.dist
        lab = self.labels
        for i in range(n):
            if d[i][i] != 0:
                raise SeparationViolation(f"d({lab[i]},{lab[i]}) != 0", i=lab[i], j=lab[i])
            for j in range(i + 1, n):
                if d[i][j] != d[j][i]:
                    raise SymmetryViolation(f"d({lab[i]},{lab[j]}) != d({lab[j]},{lab[i]})", i=lab[i], j=lab[j])
                if d[i][j] == 0:
                    raise SeparationViolation(f"distinct points {lab[i]}, {lab[j]} at distance 0", i=lab[i], j=lab[j])
        if self.value_set is not None:
            for i in range(n):
                for j in range(i + 1, n):
                    if d[i][j] not in self.value_set:
                        raise SpectrumViolation(
                            f"d({lab[i]},{lab[j]}) = {d[i][j]} not in value set", i=lab[i], j=lab[j], value=d[i][j]
                        )
        bad = self._triangle_failure()
        if bad is not None:
            i, j, k = bad
            raise TriangleViolation(
                f"d({lab[i]},{lab[j]}) = {d[i][j]} > d({lab[i]},{lab[k]}) + d({lab[k]},{lab[j]})",
                i=lab[i], j=lab[j], k=lab[k],
            )

    def _triangle_failure(self):
        n = len(self.labels)
        if n < 3:
            return None
        scaled = self.scaled()
        if scaled is not None:
            D = np.array(scaled[0], dtype=np.int64)
            for k in range(n):
                viol = D > D[:, k, None] + D[None, k, :]
                if viol.any():
                    i, j = map(int, np.argwhere(viol)[0])
                    return i, j, k
            return None
        d = self.dist
        for k in range(n):
            for i in range(n):
                dik = d[i][k]
                for j in range(n):
                    if d[i][j] > dik + d[k][j]:
                        return i, j, k
        return None

    # -- access ---------------------------------------------------------
    def __len__(self):
        return len(self.labels)

    def __iter__(self):
        return iter(self.labels)

    def __contains__(self, label):
        return label in self._index

    def __repr__(self):
        return f"FiniteMetricSpace({len(self)} points)"

    def __eq__(self, other):
        return (
            isinstance(other, FiniteMetricSpace)
            and self.labels == other.labels
            and self.dist == other.dist
        )

    def __hash__(self):
        return hash((self.labels, self.dist))

    def index(self, label) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise UnknownPoint(f"unknown point {label!r}", point=label) from None

    def d(self, x, y) -> Fraction:
        return self.dist[self.index(x)][self.index(y)]

    def row(self, x) -> Dict[str, Fraction]:
        i = self.index(x)
        return dict(zip(self.labels, self.dist[i]))

    def scaled(self):
        """(integer matrix, scale) with dist == matrix / scale, or None on overflow risk."""
        if self._scaled is None:
            den = 1
            for row in self.dist:
                for q in row:
                    den = lcm(den, q.denominator)
            mat = [[q.numerator * (den // q.denominator) for q in row] for row in self.dist]
            top = max((max(r) for r in mat), default=0)
            self._scaled = (mat, den) if 2 * top < _INT64_SAFE else False
        return self._scaled or None

    def spectrum(self) -> ValueSet:
        if self._spectrum is None:
            vals = {Fraction(0)}
            for row in self.dist:
                vals.update(row)
            self._spectrum = ValueSet(vals)
        return self._spectrum

    def spectrum_at(self, a) -> set:
        return set(self.dist[self.index(a)])

    def diameter(self) -> Fraction:
        return self.spectrum().sup

    def restrict(self, labels: Iterable[str]) -> "FiniteMetricSpace":
        """Induced subspace on ``labels`` (kept in this space's label order)."""
        want = set(labels)
        for lab in want:
            self.index(lab)
        idx = [i for i, lab in enumerate(self.labels) if lab in want]
        return FiniteMetricSpace(
            [self.labels[i] for i in idx],
            [[self.dist[i][j] for j in idx] for i in idx],
            self.value_set,
            validate=False,
        )

    def with_value_set(self, V: Optional[ValueSet]) -> "FiniteMetricSpace":
        return build_space(self.labels, self.dist, V)

    def to_json(self):
        out = {"labels": list(self.labels), "dist": [[fmt(q) for q in row] for row in self.dist]}
        if self.value_set is not None:
            out["value_set"] = self.value_set.to_json()
        return out

    @classmethod
    def from_json(cls, obj):
        if not isinstance(obj, dict) or "labels" not in obj or "dist" not in obj:
            raise SpaceError('expected {"labels": [...], "dist": [[...]]}')
        V = ValueSet.from_json(obj["value_set"]) if obj.get("value_set") else None
        return build_space(obj["labels"], obj["dist"], V)


def build_space(labels, dist_matrix, value_set: Optional[ValueSet] = None) -> FiniteMetricSpace:
    return FiniteMetricSpace(labels, dist_matrix, value_set)


def from_function(labels: Sequence[str], d, value_set=None, validate=True) -> FiniteMetricSpace:
    """Build a space from a distance callable on labels."""
    return FiniteMetricSpace(labels, [[d(x, y) for y in labels] for x in labels], value_set, validate)


def spectrum(space: FiniteMetricSpace) -> ValueSet:
    return space.spectrum()


def spectrum_at(space: FiniteMetricSpace, a) -> set:
    return space.spectrum_at(a)


# -- products and lines -----------------------------------------------------

def tuple_label(parts) -> str:
    return "(" + ",".join(parts) + ")"


def sup_product(spaces: Sequence[FiniteMetricSpace]) -> FiniteMetricSpace:
    """Cartesian product with the sup (max) distance."""
    if not spaces:
        raise EmptyFactor("sup_product needs at least one factor")
    for k, F in enumerate(spaces):
        if len(F) == 0:
            raise EmptyFactor(f"factor {k} is empty", factor=k)
    idx_tuples = list(product(*[range(len(F)) for F in spaces]))
    labels = [tuple_label(F.labels[i] for F, i in zip(spaces, t)) for t in idx_tuples]
    dist = [
        [max(F.dist[i][j] for F, i, j in zip(spaces, s, t)) for t in idx_tuples]
        for s in idx_tuples
    ]
    return FiniteMetricSpace(labels, dist, validate=False)


def sup_power(F: FiniteMetricSpace, n: int) -> FiniteMetricSpace:
    if n < 1:
        raise ValueError("n must be >= 1")
    return sup_product([F] * n)


@dataclass(frozen=True)
class CombinatorialLine:
    """A line in F^n: ``fixed`` coordinates are constant, ``moving`` ones vary together."""

    fixed: Dict[int, str]
    moving: frozenset
    points: tuple = field(compare=False)

    def template(self):
        return ["*" if i in self.moving else self.fixed[i] for i in range(len(self.fixed) + len(self.moving))]


def combinatorial_lines(alphabet: Sequence[str], n: int) -> List[CombinatorialLine]:
    """All combinatorial lines of alphabet^n, realized as point labels of sup_power(F, n).

    Templates are words over alphabet + {"*"} with at least one "*"; two
    templates with the same realized point set (only possible when the
    alphabet has one letter) are reported once.
    """
    if n < 1 or not alphabet:
        raise ValueError("need n >= 1 and a nonempty alphabet")
    out = []
    seen = set()
    for word in product(list(alphabet) + [None], repeat=n):
        moving = frozenset(i for i, c in enumerate(word) if c is None)
        if not moving:
            continue
        pts = tuple(tuple_label(a if c is None else c for c in word) for a in alphabet)
        key = frozenset(pts)
        if key in seen:
            continue
        seen.add(key)
        fixed = {i: c for i, c in enumerate(word) if c is not None}
        out.append(CombinatorialLine(fixed, moving, pts))
    return out


# -- embeddings --------------------------------------------------------------

def _common_integer_view(A: FiniteMetricSpace, B: FiniteMetricSpace):
    sa, sb = A.scaled(), B.scaled()
    if sa is None or sb is None:
        return [list(r) for r in A.dist], [list(r) for r in B.dist]
    den = lcm(sa[1], sb[1])
    fa, fb = den // sa[1], den // sb[1]
    return [[x * fa for x in r] for r in sa[0]], [[x * fb for x in r] for r in sb[0]]


def isometric_embeddings(A: FiniteMetricSpace, B: FiniteMetricSpace, limit: Optional[int] = None,
                         fixed: Optional[Dict[str, str]] = None, allowed: Optional[Iterable[str]] = None):
    """Enumerate isometric embeddings of A into B by backtracking.

    ``limit`` caps the number of embeddings returned (None = all).  ``fixed``
    pins some points of A to points of B; ``allowed`` restricts the image to
    a subset of B.  Each embedding is a dict from A labels to B labels in A's
    label order.  The search always branches on the unassigned point with
    the fewest remaining candidates (ties: most distinct distance values,
    then label order), and prunes by forward checking and by distance
    multiplicities.
    """
    return list(iter_embeddings(A, B, limit, fixed, allowed))


def iter_embeddings(A, B, limit=None, fixed=None, allowed=None):
    na, nb = len(A), len(B)
    if limit is not None and limit <= 0:
        return
    if na > nb:
        return
    if na == 0:
        yield {}
        return
    DA, DB = _common_integer_view(A, B)
    allowed_idx = set(range(nb)) if allowed is None else {B.index(x) for x in allowed}

    # neighbour index: at[b][value] -> set of points of B at that distance from b
    at = []
    for b in range(nb):
        m = {}
        for c in range(nb):
            if c != b and c in allowed_idx:
                m.setdefault(DB[b][c], set()).add(c)
        at.append(m)

    def profile(D, i, n, pool=None):
        cnt = {}
        for j in range(n):
            if j != i and (pool is None or j in pool):
                cnt[D[i][j]] = cnt.get(D[i][j], 0) + 1
        return cnt

    prof_a = [profile(DA, i, na) for i in range(na)]
    prof_b = [profile(DB, b, nb, allowed_idx) for b in range(nb)]
    diversity = [len(p) for p in prof_a]

    domains = []
    for i in range(na):
        dom = set()
        for b in allowed_idx:
            pb = prof_b[b]
            if all(pb.get(v, 0) >= c for v, c in prof_a[i].items()):
                dom.add(b)
        domains.append(dom)

    if fixed:
        for a_lab, b_lab in fixed.items():
            i, b = A.index(a_lab), B.index(b_lab)
            if b not in domains[i]:
                return
            domains[i] = {b}

    assign = [None] * na
    used = set()
    count = 0

    def search(doms):
        free = [i for i in range(na) if assign[i] is None]
        if not free:
            yield {A.labels[i]: B.labels[assign[i]] for i in range(na)}
            return
        i = min(free, key=lambda k: (len(doms[k]), -diversity[k], k))
        for b in sorted(doms[i] - used):
            new = list(doms)
            ok = True
            for k in free:
                if k == i:
                    continue
                cand = at[b].get(DA[i][k])
                nd = doms[k] & cand if cand else set()
                nd -= {b}
                if not nd - used:
                    ok = False
                    break
                new[k] = nd
            if not ok:
                continue
            assign[i] = b
            used.add(b)
            yield from search(new)
            assign[i] = None
            used.discard(b)

    for emb in search(domains):
        yield emb
        count += 1
        if limit is not None and count >= limit:
            return


def embeds(A: FiniteMetricSpace, B: FiniteMetricSpace, allowed=None) -> bool:
    return next(iter_embeddings(A, B, 1, allowed=allowed), None) is not None


def find_embedding(A, B, allowed=None, fixed=None) -> Optional[Dict[str, str]]:
    return next(iter_embeddings(A, B, 1, fixed=fixed, allowed=allowed), None)


def is_isometric_embedding(A, B, mapping: Dict[str, str]) -> bool:
    if set(mapping) != set(A.labels) or len(set(mapping.values())) != len(mapping):
        return False
    return all(A.d(x, y) == B.d(mapping[x], mapping[y]) for x in A.labels for y in A.labels)


def monochromatic_part(F: FiniteMetricSpace, G: FiniteMetricSpace, coloring: Dict[str, int]) -> set:
    """Colors c in {0, 1} whose class in G contains an isometric copy of F."""
    out = set()
    for c in (0, 1):
        cls = [x for x in G.labels if coloring[x] == c]
        if embeds(F, G, allowed=cls):
            out.add(c)
    return out


# -- fixtures ----------------------------------------------------------------

def two_point(d=1, labels=("a", "b")) -> FiniteMetricSpace:
    d = rational(d)
    return build_space(labels, [[0, d], [d, 0]])


def line_space(points: Sequence, labels=None) -> FiniteMetricSpace:
    """Subset of the rational line with the usual distance."""
    pts = [rational(p) for p in points]
    labels = labels or [fmt(p) for p in pts]
    return FiniteMetricSpace(labels, [[abs(p - q) for q in pts] for p in pts], validate=False)


def value_set_space(V: ValueSet) -> FiniteMetricSpace:
    """V itself with d(x, y) = max(x, y) for x != y; its spectrum is V."""
    vals = V.values
    return FiniteMetricSpace(
        [fmt(v) for v in vals],
        [[Fraction(0) if x == y else max(x, y) for y in vals] for x in vals],
        validate=True,
    )


def chain_space(V: ValueSet, ell, n: int, labels=None) -> FiniteMetricSpace:
    """(n+1)-point chain x_0..x_n with d(x_i, x_{i+k}) = a_k and a_n = ell.

    a_k is taken from V in the window [k*ell/n, (k+1)*ell/n) so that the
    offsets eps_k = a_k - k*ell/n stay below one grid step and are
    subadditive (eps_{i+j} <= eps_i + eps_j).  Among admissible choices the
    lexicographically least sequence is returned.
    """
    ell = rational(ell)
    if ell == 0 or ell not in V:
        raise ValueError("ell must be a nonzero element of V")
    if n < 1:
        raise ValueError("n must be >= 1")
    step = ell / n
    windows = []
    for k in range(1, n):
        lo, hi = k * step, (k + 1) * step
        windows.append([v for v in V if lo <= v < hi])
    a = [Fraction(0)]  # a[0] = 0
    eps = [Fraction(0)]

    def extend(k):
        if k == n:
            e_n = Fraction(0)
            if all(e_n <= eps[i] + eps[n - i] for i in range(1, n)):
                a.append(ell)
                eps.append(e_n)
                return True
            return False
        for v in windows[k - 1]:
            e = v - k * step
            if all(e <= eps[i] + eps[k - i] for i in range(1, k)):
                a.append(v)
                eps.append(e)
                if extend(k + 1):
                    return True
                a.pop()
                eps.pop()
        return False

    if not extend(1):
        blocking = next((k for k, w in enumerate(windows, 1) if not w), None)
        raise ValueSetTooSparse(
            f"no admissible chain values in V for ell={ell}, n={n}",
            empty_window=blocking,
        )
    labels = labels or [f"x{i}" for i in range(n + 1)]
    dist = [[a[abs(i - j)] for j in range(n + 1)] for i in range(n + 1)]
    return build_space(labels, dist, V)


def example_space_mn(N: int) -> FiniteMetricSpace:
    """Points (0,0) and (m,n) with 1 <= m < n <= N: rays of step 1/n glued at (0,0)."""
    if N < 2:
        raise ValueError("N must be >= 2")
    pts = [(0, 0)] + [(m, n) for n in range(2, N + 1) for m in range(1, n)]

    def d(p, q):
        if p == q:
            return Fraction(0)
        (m1, n1), (m2, n2) = p, q
        if p == (0, 0):
            return Fraction(m2, n2)
        if q == (0, 0):
            return Fraction(m1, n1)
        if n1 == n2:
            return Fraction(abs(m1 - m2), n1)
        return Fraction(m1, n1) + Fraction(m2, n2)

    labels = [f"({m},{n})" for m, n in pts]
    return build_space(labels, [[d(p, q) for q in pts] for p in pts])
