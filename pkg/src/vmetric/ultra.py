"""Ultrametric spaces and valued meet-trees.

The nerve of an ultrametric space is the set of its closed balls ordered by
reverse inclusion, valued by diameter.  Leaves are the singletons.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, product
from typing import Dict, List, Optional, Sequence

from .errors import (
    HypothesisViolated,
    InvalidTree,
    NotUltrametric,
    SizeLimitExceeded,
    UnknownNode,
)
from .space import FiniteMetricSpace, is_isometric_embedding, isometric_embeddings, iter_embeddings, tuple_label
from .values import ValueSet, fmt, rational


# -- strong triangle ---------------------------------------------------------

@dataclass(frozen=True)
class UltraViolation:
    """d(x, z) > max(d(x, y), d(y, z)).  Falsy, so it can stand in for False."""

    x: str
    y: str
    z: str

    def __bool__(self):
        return False

    def to_json(self):
        return {"triple": [self.x, self.y, self.z]}


def ultrametric_violation(space: FiniteMetricSpace) -> Optional[UltraViolation]:
    D = space.dist
    n = len(space)
    for i in range(n):
        for j in range(n):
            dij = D[i][j]
            for k in range(n):
                if D[i][k] > max(dij, D[j][k]):
                    lab = space.labels
                    return UltraViolation(lab[i], lab[j], lab[k])
    return None


def is_ultrametric(space: FiniteMetricSpace):
    """True, or the first violating triple (which is falsy)."""
    bad = ultrametric_violation(space)
    return True if bad is None else bad


def require_ultrametric(space):
    bad = ultrametric_violation(space)
    if bad is not None:
        raise NotUltrametric(
            f"d({bad.x},{bad.z}) > max(d({bad.x},{bad.y}), d({bad.y},{bad.z}))",
            triple=[bad.x, bad.y, bad.z],
        )


# -- valued trees ------------------------------------------------------------

class ValuedTree:
    """Rooted tree with node values; leaves carry point labels and value 0.

    Valid trees are ramified (every internal node has at least two children)
    and strictly decreasing in value from the root down.
    """

    def __init__(self, nodes: Sequence[str], parent: Dict[str, Optional[str]], value: Dict[str, Fraction],
                 point: Dict[str, str], validate=True):
        self.nodes = list(nodes)
        self.parent = dict(parent)
        self.value = {k: rational(v) for k, v in value.items()}
        self.point = dict(point)
        self.children: Dict[str, List[str]] = {n: [] for n in self.nodes}
        self._members = None
        if validate:
            self._validate()
        else:
            for n in self.nodes:
                p = self.parent.get(n)
                if p is not None:
                    self.children[p].append(n)

    def _validate(self):
        seen = set()
        for n in self.nodes:
            if n in seen:
                raise InvalidTree(f"duplicate node id {n!r}")
            seen.add(n)
            if n not in self.value:
                raise InvalidTree(f"node {n!r} has no value")
        roots = [n for n in self.nodes if self.parent.get(n) is None]
        if len(roots) != 1:
            raise InvalidTree(f"expected exactly one root, found {len(roots)}")
        for n in self.nodes:
            p = self.parent.get(n)
            if p is not None:
                if p not in seen:
                    raise InvalidTree(f"parent {p!r} of {n!r} is not a node")
                self.children[p].append(n)
        # acyclic: every node reaches the root
        for n in self.nodes:
            steps, cur = 0, n
            while self.parent.get(cur) is not None:
                cur = self.parent[cur]
                steps += 1
                if steps > len(self.nodes):
                    raise InvalidTree(f"cycle through {n!r}")
        labels = set()
        for n in self.nodes:
            kids = self.children[n]
            if not kids:
                if n not in self.point:
                    raise InvalidTree(f"leaf {n!r} carries no point")
                if self.value[n] != 0:
                    raise InvalidTree(f"leaf {n!r} has nonzero value {self.value[n]}")
                if self.point[n] in labels:
                    raise InvalidTree(f"point {self.point[n]!r} appears twice")
                labels.add(self.point[n])
            else:
                if n in self.point:
                    raise InvalidTree(f"internal node {n!r} carries a point")
                if len(kids) < 2:
                    raise InvalidTree(f"internal node {n!r} has a single child")
                for c in kids:
                    if not self.value[c] < self.value[n]:
                        raise InvalidTree(f"value does not decrease from {n!r} to {c!r}")

    def __len__(self):
        return len(self.nodes)

    @property
    def root(self):
        return next(n for n in self.nodes if self.parent.get(n) is None)

    def leaves(self):
        return [n for n in self.nodes if not self.children[n]]

    def is_leaf(self, node):
        self._check(node)
        return not self.children[node]

    def _check(self, node):
        if node not in self.children:
            raise UnknownNode(f"unknown node {node!r}", node=node)

    def ancestors(self, node):
        """node, its parent, ..., the root."""
        self._check(node)
        out = [node]
        while self.parent.get(out[-1]) is not None:
            out.append(self.parent[out[-1]])
        return out

    def members(self, node) -> frozenset:
        """Point labels of the leaves below ``node``."""
        self._check(node)
        if self._members is None:
            mem = {}
            for n in self._postorder():
                if not self.children[n]:
                    mem[n] = frozenset([self.point[n]])
                else:
                    mem[n] = frozenset().union(*(mem[c] for c in self.children[n]))
            self._members = mem
        return self._members[node]

    def _postorder(self):
        out, stack = [], [(self.root, False)]
        while stack:
            n, done = stack.pop()
            if done:
                out.append(n)
            else:
                stack.append((n, True))
                stack.extend((c, False) for c in reversed(self.children[n]))
        return out

    def leaf_of(self, label):
        for n, p in self.point.items():
            if p == label:
                return n
        raise UnknownNode(f"no leaf for point {label!r}", point=label)

    def meet(self, a, b):
        up = set(self.ancestors(a))
        for n in self.ancestors(b):
            if n in up:
                return n
        raise InvalidTree("nodes share no ancestor")

    def to_json(self):
        return {
            "nodes": [
                {
                    "id": n,
                    "parent": self.parent.get(n),
                    "value": fmt(self.value[n]),
                    "point": self.point.get(n),
                }
                for n in self.nodes
            ]
        }

    @classmethod
    def from_json(cls, obj):
        try:
            rows = obj["nodes"]
            nodes = [r["id"] for r in rows]
            parent = {r["id"]: r.get("parent") for r in rows}
            value = {r["id"]: r["value"] for r in rows}
            point = {r["id"]: r["point"] for r in rows if r.get("point") is not None}
        except (KeyError, TypeError):
            raise InvalidTree('expected {"nodes": [{"id", "parent", "value", "point"}]}') from None
        return cls(nodes, parent, value, point)

    def to_dot(self) -> str:
        lines = ["digraph nerve {"]
        for n in self.nodes:
            if n in self.point:
                lines.append(f'  "{n}" [label="{self.point[n]}", shape=box];')
            else:
                lines.append(f'  "{n}" [label="{fmt(self.value[n])}"];')
        for n in self.nodes:
            p = self.parent.get(n)
            if p is not None:
                lines.append(f'  "{p}" -> "{n}";')
        lines.append("}")
        return "\n".join(lines) + "\n"


def canonical_form(tree: ValuedTree, node=None, labels=True):
    """Hashable isomorphism invariant of the (sub)tree; equal forms mean
    isomorphic valued trees (with equal leaf labels when ``labels``)."""
    node = tree.root if node is None else node
    kids = tree.children[node]
    if not kids:
        return (tree.value[node], tree.point[node] if labels else "", ())
    return (tree.value[node], "", tuple(sorted(canonical_form(tree, c, labels) for c in kids)))


def nerve(space: FiniteMetricSpace) -> ValuedTree:
    require_ultrametric(space)
    n = len(space)
    D = space.dist
    balls: Dict[frozenset, Fraction] = {}
    for a in range(n):
        for s in set(D[a]):
            B = frozenset(j for j in range(n) if D[a][j] <= s)
            balls[B] = s
    internal = sorted((B for B in balls if len(B) > 1), key=lambda B: (-balls[B], min(B)))
    leaves = [frozenset([i]) for i in range(n)]
    order = internal + leaves
    ids = {B: f"n{k}" for k, B in enumerate(order)}
    parent = {}
    for B in order:
        best = None
        for C in internal:
            if len(C) > len(B) and B < C and (best is None or len(C) < len(best)):
                best = C
        parent[ids[B]] = ids[best] if best is not None else None
    value = {ids[B]: (balls[B] if len(B) > 1 else Fraction(0)) for B in order}
    point = {ids[frozenset([i])]: space.labels[i] for i in range(n)}
    return ValuedTree([ids[B] for B in order], parent, value, point, validate=False)


def tree_to_space(tree: ValuedTree) -> FiniteMetricSpace:
    if not isinstance(tree, ValuedTree):
        raise InvalidTree("expected a ValuedTree")
    leaves = tree.leaves()
    anc = {lf: tree.ancestors(lf) for lf in leaves}
    anc_set = {lf: set(a) for lf, a in anc.items()}

    def d(a, b):
        if a == b:
            return Fraction(0)
        for node in anc[a]:
            if node in anc_set[b]:
                return tree.value[node]
        raise InvalidTree("leaves share no ancestor")

    labels = [tree.point[lf] for lf in leaves]
    return FiniteMetricSpace(labels, [[d(a, b) for b in leaves] for a in leaves])


def degree(tree: ValuedTree, node) -> int:
    tree._check(node)
    return len(tree.children[node])


# -- homogeneity -------------------------------------------------------------

@dataclass(frozen=True)
class HomogeneityViolation:
    """Condition ``kind`` ('a': degree, 'b': path values) fails for nodes ``first``, ``second``."""

    kind: str
    first: str
    second: str
    detail: str

    def __bool__(self):
        return False

    def to_json(self):
        return {"condition": self.kind, "nodes": [self.first, self.second], "detail": self.detail}


def homogeneity_check(tree: ValuedTree):
    """True, or the first violation of (a) equal values => equal degrees,
    then (b) equal value sets along every leaf-to-root path."""
    by_value = {}
    for n in tree.nodes:
        v = tree.value[n]
        if v in by_value:
            m = by_value[v]
            if degree(tree, m) != degree(tree, n):
                return HomogeneityViolation(
                    "a", m, n, f"value {v}: degree {degree(tree, m)} vs {degree(tree, n)}"
                )
        else:
            by_value[v] = n
    leaves = tree.leaves()
    if leaves:
        ref = leaves[0]
        ref_vals = {tree.value[x] for x in tree.ancestors(ref)}
        for lf in leaves[1:]:
            vals = {tree.value[x] for x in tree.ancestors(lf)}
            if vals != ref_vals:
                return HomogeneityViolation(
                    "b", ref, lf,
                    "path values {" + ",".join(map(fmt, sorted(ref_vals))) + "} vs {"
                    + ",".join(map(fmt, sorted(vals))) + "}",
                )
    return True


def is_homogeneous_bruteforce(space: FiniteMetricSpace) -> bool:
    """Every isometry between subsets extends to a self-isometry."""
    autos = isometric_embeddings(space, space)
    labels = space.labels
    for size in range(1, len(space) + 1):
        for sub in combinations(labels, size):
            A = space.restrict(sub)
            restr = {tuple(g[x] for x in A.labels) for g in autos}
            for f in iter_embeddings(A, space):
                if tuple(f[x] for x in A.labels) not in restr:
                    return False
    return True


# -- sequence spaces ---------------------------------------------------------

UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class OmegaSpec:
    weights: tuple
    degrees: tuple
    cap: Optional[int] = None

    def __post_init__(self):
        w = tuple(rational(x) for x in self.weights)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "degrees", tuple(self.degrees))
        if len(w) != len(self.degrees):
            raise ValueError("weights and degrees differ in length")
        if any(x <= 0 for x in w) or any(a <= b for a, b in zip(w, w[1:])):
            raise ValueError("weights must be positive and strictly decreasing")
        for a in self.degrees:
            if a == UNBOUNDED:
                if self.cap is None or self.cap < 2:
                    raise ValueError("an unbounded degree needs a cap >= 2")
            elif not isinstance(a, int) or a < 2:
                raise ValueError(f"degree {a!r} must be an integer >= 2 or 'unbounded'")

    def effective(self):
        return [self.cap if a == UNBOUNDED else a for a in self.degrees]

    def to_json(self):
        return {
            "weights": [fmt(w) for w in self.weights],
            "degrees": list(self.degrees),
            "cap": self.cap,
        }

    @classmethod
    def from_json(cls, obj):
        return cls(tuple(obj.get("weights", ())), tuple(obj.get("degrees", ())), obj.get("cap"))


def omega_sequence_space(spec: OmegaSpec, size_limit: int = 4096) -> FiniteMetricSpace:
    """All tuples b with b_i < a_i, at distance w(first index where they differ)."""
    eff = spec.effective()
    size = 1
    for a in eff:
        size *= a
    if size > size_limit:
        raise SizeLimitExceeded(f"{size} points exceeds the limit {size_limit}", size=size, limit=size_limit)
    pts = list(product(*[range(a) for a in eff]))
    w = spec.weights

    def d(b, c):
        for i, (x, y) in enumerate(zip(b, c)):
            if x != y:
                return w[i]
        return Fraction(0)

    labels = [tuple_label(str(x) for x in b) for b in pts]
    return FiniteMetricSpace(labels, [[d(b, c) for c in pts] for b in pts], ValueSet((0,) + w), validate=False)


def indivisibility_report(space: FiniteMetricSpace, cap: int) -> dict:
    """How a finite ultrametric space measures up against the indivisibility
    criteria: homogeneity, spectrum shape, and internal degrees versus ``cap``."""
    tree = nerve(space)
    hom = homogeneity_check(tree)
    nodes = []
    blocking = []
    for n in tree.nodes:
        if tree.children[n]:
            deg = degree(tree, n)
            status = "at cap" if deg >= cap else "below cap"
            nodes.append({"node": n, "value": fmt(tree.value[n]), "degree": deg, "status": status})
            if deg < cap:
                blocking.append(n)
    return {
        "homogeneous": hom is True,
        "violation": None if hom is True else hom.to_json(),
        "spectrum": [fmt(v) for v in space.spectrum()],
        "spectrum_dually_well_founded": True,
        "diameter_attained": True,
        "internal_nodes": nodes,
        "blocking": blocking,
        "candidate": hom is True and not blocking,
    }


def degree_partition(space: FiniteMetricSpace, r) -> List[List[str]]:
    """Blocks M_i: the i-th child (in nerve order) of every ball of diameter r.

    In a homogeneous space every point lies in such a ball and all of them
    have the same number of children.
    """
    r = rational(r)
    tree = nerve(space)
    tops = [n for n in tree.nodes if tree.children[n] and tree.value[n] == r]
    if not tops:
        raise HypothesisViolated(f"no ball of diameter {r}", value=r)
    covered = set().union(*(tree.members(n) for n in tops))
    if len(covered) != len(space):
        raise HypothesisViolated(f"balls of diameter {r} do not cover the space", value=r)
    k = max(degree(tree, n) for n in tops)
    blocks = [set() for _ in range(k)]
    for n in tops:
        for i, c in enumerate(tree.children[n]):
            blocks[i] |= tree.members(c)
    return [[x for x in space.labels if x in b] for b in blocks]


# -- greedy monochromatic copy ----------------------------------------------

@dataclass
class MonochromaticEmbedding:
    color: int
    mapping: Dict[str, str]
    method: str

    def to_json(self):
        return {"result": "embedding", "color": self.color, "method": self.method, "map": self.mapping}


@dataclass
class DivisibilityWitness:
    """The greedy construction stalled: no fresh sub-ball of ``ball`` was available."""

    ball: List[str]
    value: Fraction
    step: int
    point: str
    partial: Dict[str, str] = field(default_factory=dict)

    def to_json(self):
        return {
            "result": "witness",
            "ball": self.ball,
            "value": fmt(self.value),
            "step": self.step,
            "point": self.point,
            "partial": self.partial,
        }


def _f0(space, tree, coloring):
    """Balls B with an isometry of B into B's color-0 part, with one such map each."""
    phi = {}
    for n in tree._postorder():
        mem = tree.members(n)
        if not tree.children[n]:
            (x,) = mem
            if coloring[x] == 0:
                phi[n] = {x: x}
            continue
        kids = tree.children[n]
        if all(c in phi for c in kids):
            m = {}
            for c in kids:
                m.update(phi[c])
            phi[n] = m
            continue
        zeros = [x for x in space.labels if x in mem and coloring[x] == 0]
        if len(zeros) < len(mem):
            continue
        B = space.restrict(mem)
        found = next(iter_embeddings(B, B, 1, allowed=zeros), None)
        if found is not None:
            phi[n] = found
    return phi


def greedy_monochromatic_embedding(space: FiniteMetricSpace, coloring: Dict[str, int]):
    """Isometric copy of ``space`` inside one color class, or a witness of where the search stalls."""
    require_ultrametric(space)
    for x in space.labels:
        if coloring.get(x) not in (0, 1):
            raise HypothesisViolated(f"point {x!r} has no 0/1 color", point=x)
    tree = nerve(space)
    phi = _f0(space, tree, coloring)
    root = tree.root
    if root in phi:
        return MonochromaticEmbedding(0, {x: phi[root][x] for x in space.labels}, "color-0 balls")

    maximal = [n for n in phi if not any(a in phi for a in tree.ancestors(n)[1:])]
    m0 = set().union(*(tree.members(n) for n in maximal)) if maximal else set()
    free1 = [x for x in space.labels if coloring[x] == 1 and x not in m0]
    if not free1:
        # everything outside M0 is color 0: glue the identity to the M0 maps
        h = {x: x for x in space.labels if x not in m0}
        for n in maximal:
            h.update(phi[n])
        return MonochromaticEmbedding(0, {x: h[x] for x in space.labels}, "color-0 balls plus identity")

    leaf = {tree.point[n]: n for n in tree.leaves()}
    xs = space.labels
    h = {xs[0]: free1[0]}
    for step in range(1, len(xs)):
        xn = xs[step]
        p = min(space.d(xs[m], xn) for m in range(step))
        I = [xs[m] for m in range(step) if space.d(xs[m], xn) == p]
        anchor = h[I[0]]
        # the nerve node equal to the closed ball of radius p around the anchor
        ball_node = None
        for a in tree.ancestors(leaf[anchor]):
            if tree.value[a] <= p:
                ball_node = a
        ball_members = sorted(
            (x for x in space.labels if space.d(anchor, x) <= p), key=space.index
        )
        stuck = DivisibilityWitness(ball_members, p, step, xn, dict(h))
        if ball_node is None or tree.value[ball_node] != p:
            return stuck
        used = set()
        for i in I:
            for c in tree.children[ball_node]:
                if h[i] in tree.members(c):
                    used.add(c)
        y = None
        for c in tree.children[ball_node]:
            if c in used or c in phi:
                continue
            cands = [x for x in space.labels if x in tree.members(c) and coloring[x] == 1 and x not in m0]
            if cands:
                y = cands[0]
                break
        if y is None:
            return stuck
        h[xn] = y
    assert is_isometric_embedding(space, space, h)
    return MonochromaticEmbedding(1, h, "greedy")
