"""Chain connectivity at a scale, and the subdominant ultrametric."""

from fractions import Fraction
from typing import List

from networkx.utils import UnionFind

from .space import FiniteMetricSpace
from .values import fmt, rational


def _pairs_by_weight(space):
    n = len(space)
    lab = space.labels
    pairs = [(space.dist[i][j], lab[i], lab[j], i, j) for i in range(n) for j in range(i + 1, n)]
    pairs.sort(key=lambda t: (t[0], t[1], t[2]))
    return pairs


def eps_components(space: FiniteMetricSpace, eps) -> List[List[str]]:
    """Blocks of the graph joining points at distance <= eps, in label order."""
    eps = rational(eps)
    uf = UnionFind(range(len(space)))
    for d, _, _, i, j in _pairs_by_weight(space):
        if d > eps:
            break
        uf.union(i, j)
    groups = {}
    for i in range(len(space)):
        groups.setdefault(uf[i], []).append(i)
    blocks = sorted(groups.values(), key=min)
    return [[space.labels[i] for i in b] for b in blocks]


def component_of(space, a, eps) -> List[str]:
    space.index(a)
    return next(b for b in eps_components(space, eps) if a in b)


def lambda_eps(space: FiniteMetricSpace, a, eps) -> Fraction:
    """min(1, diameter of the eps-component of a)."""
    eps = rational(eps)
    if eps <= 0:
        raise ValueError("eps must be positive")
    comp = [space.index(x) for x in component_of(space, a, eps)]
    diam = max(space.dist[i][j] for i in comp for j in comp)
    return min(Fraction(1), diam)


def lambda_(space: FiniteMetricSpace, a) -> Fraction:
    """Infimum over eps > 0 of lambda_eps; attained just below the least positive distance."""
    space.index(a)
    pos = [v for v in space.spectrum().positive]
    if not pos:
        return Fraction(0)
    scales = [pos[0] / 2] + pos
    return min(lambda_eps(space, a, e) for e in scales)


def subdominant_ultrametric(space: FiniteMetricSpace) -> FiniteMetricSpace:
    """Single-linkage merge heights: d*(x, y) is the least eps joining x and y by an eps-chain."""
    n = len(space)
    uf = UnionFind(range(n))
    members = {i: [i] for i in range(n)}
    out = [[Fraction(0)] * n for _ in range(n)]
    for d, _, _, i, j in _pairs_by_weight(space):
        ri, rj = uf[i], uf[j]
        if ri == rj:
            continue
        for x in members[ri]:
            for y in members[rj]:
                out[x][y] = out[y][x] = d
        uf.union(ri, rj)
        root = uf[ri]
        merged = members.pop(ri) + members.pop(rj)
        members[root] = merged
    return FiniteMetricSpace(space.labels, out, space.value_set, validate=False)


def cantor_report(space: FiniteMetricSpace) -> dict:
    levels = []
    for eps in space.spectrum().positive:
        k = len(eps_components(space, eps))
        levels.append({"eps": fmt(eps), "components": k, "connected": k == 1})
    return {
        "levels": levels,
        "points": len(space),
        "cantor_connected": len(space) <= 1,
    }
