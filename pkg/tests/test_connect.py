from fractions import Fraction
from itertools import combinations, permutations, product

import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_metric, random_ultrametric
from vmetric.connect import (
    cantor_report,
    component_of,
    eps_components,
    lambda_,
    lambda_eps,
    subdominant_ultrametric,
)
from vmetric.errors import UnknownPoint
from vmetric.space import FiniteMetricSpace, build_space, chain_space, example_space_mn, line_space, two_point
from vmetric.ultra import canonical_form, is_ultrametric, nerve
from vmetric.values import ValueSet

F = Fraction
EIGHTHS = ValueSet([F(k, 8) for k in range(9)])


def minimax_oracle(M):
    """Least possible largest step over all simple paths from x to y."""
    labs = M.labels
    out = {}
    for x, y in product(labs, repeat=2):
        if x == y:
            out[x, y] = 0
            continue
        rest = [z for z in labs if z not in (x, y)]
        best = None
        for k in range(len(rest) + 1):
            for mid in permutations(rest, k):
                path = (x,) + mid + (y,)
                w = max(M.d(a, b) for a, b in zip(path, path[1:]))
                best = w if best is None else min(best, w)
        out[x, y] = best
    return out


# -- components --------------------------------------------------------------

def test_eps_component_examples():
    L = line_space([0, 1, 2])
    assert eps_components(L, 1) == [["0", "1", "2"]]
    assert eps_components(L, F(1, 2)) == [["0"], ["1"], ["2"]]
    M = example_space_mn(4)
    comp = component_of(M, "(0,0)", F(1, 4))
    assert {"(1,4)", "(2,4)", "(3,4)"} <= set(comp)


def test_components_partition_and_refine(rng):
    for _ in range(25):
        M = random_metric(rng, rng.randint(1, 8))
        scales = sorted(set(M.spectrum()) | {F(1, 7)})
        prev = None
        for eps in scales:
            blocks = eps_components(M, eps)
            assert sorted(sum(blocks, [])) == sorted(M.labels)
            if prev is not None:
                # every finer block sits inside one coarser block
                for b in prev:
                    assert sum(1 for c in blocks if set(b) <= set(c)) == 1
            prev = blocks


def test_components_match_bfs(rng):
    for _ in range(25):
        M = random_metric(rng, rng.randint(2, 8))
        eps = rng.choice(list(M.spectrum()))
        for a in M.labels:
            seen, todo = {a}, [a]
            while todo:
                x = todo.pop()
                for y in M.labels:
                    if y not in seen and M.d(x, y) <= eps:
                        seen.add(y)
                        todo.append(y)
            assert set(component_of(M, a, eps)) == seen


# -- lambda ------------------------------------------------------------------

def test_lambda_examples():
    M = example_space_mn(4)
    assert lambda_eps(M, "(0,0)", F(1, 4)) == F(3, 4)
    assert lambda_(M, "(0,0)") == 0
    assert lambda_eps(two_point(), "a", 1) == 1
    assert lambda_eps(two_point(5), "a", 5) == 1  # capped
    with pytest.raises(UnknownPoint):
        lambda_(M, "zz")
    with pytest.raises(ValueError):
        lambda_eps(M, "(0,0)", 0)


def test_lambda_zero_on_finite_spaces(rng):
    for _ in range(20):
        M = random_metric(rng, rng.randint(1, 7))
        assert all(lambda_(M, a) == 0 for a in M.labels)


# -- subdominant ultrametric ---------------------------------------------------

def test_subdominant_examples():
    L = line_space([0, 1, 2])
    S = subdominant_ultrametric(L)
    assert S.d("0", "2") == 1
    U = build_space("abc", [[0, 1, 2], [1, 0, 2], [2, 2, 0]])
    assert subdominant_ultrametric(U).dist == U.dist
    M = example_space_mn(3)
    assert M.labels == ("(0,0)", "(1,2)", "(1,3)", "(2,3)")
    assert subdominant_ultrametric(M).d("(0,0)", "(1,2)") == F(1, 2)


def test_subdominant_matches_minimax_oracle(rng):
    for _ in range(25):
        M = random_metric(rng, rng.randint(1, 7))
        S = subdominant_ultrametric(M)
        want = minimax_oracle(M)
        assert all(S.d(x, y) == want[x, y] for x, y in product(M.labels, repeat=2))


def test_subdominant_is_below_and_ultrametric(rng):
    for _ in range(40):
        M = random_metric(rng, rng.randint(1, 10))
        S = subdominant_ultrametric(M)
        assert is_ultrametric(S) is True
        S.with_value_set(None)  # separated, symmetric, triangle
        assert all(S.d(x, y) <= M.d(x, y) for x, y in product(M.labels, repeat=2))


def test_subdominant_fixes_ultrametrics(rng):
    for _ in range(25):
        U = random_ultrametric(rng, rng.randint(1, 10))
        assert subdominant_ultrametric(U).dist == U.dist


def ultrametrics_on(labels, values):
    """All ultrametrics on ``labels`` with nonzero distances in ``values``."""
    pairs = list(combinations(range(len(labels)), 2))
    for choice in product(values, repeat=len(pairs)):
        D = [[F(0)] * len(labels) for _ in labels]
        for (i, j), v in zip(pairs, choice):
            D[i][j] = D[j][i] = v
        U = FiniteMetricSpace(labels, D, validate=False)
        if is_ultrametric(U) is True:
            yield U


def test_subdominant_is_maximal_below(rng):
    for _ in range(6):
        M = random_metric(rng, 4, denominators=(1,))
        S = subdominant_ultrametric(M)
        values = sorted(set(M.spectrum().positive))
        for U in ultrametrics_on(M.labels, values):
            if all(U.d(x, y) <= M.d(x, y) for x, y in product(M.labels, repeat=2)):
                assert all(U.d(x, y) <= S.d(x, y) for x, y in product(M.labels, repeat=2))


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 7), st.randoms(use_true_random=False))
def test_tie_order_independence(n, r):
    # many ties: distances from {1, 2} only, labels shuffled
    D = [[0] * n for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            D[i][j] = D[j][i] = r.choice([1, 2])
    M = build_space([f"p{i}" for i in range(n)], D)
    perm = list(range(n))
    r.shuffle(perm)
    names = [f"z{r.randint(0, 999):03d}_{i}" for i in range(n)]
    relabeled = build_space([names[perm[i]] for i in range(n)], D)
    ren = {f"p{i}": names[perm[i]] for i in range(n)}
    S, T = subdominant_ultrametric(M), subdominant_ultrametric(relabeled)
    assert all(S.d(x, y) == T.d(ren[x], ren[y]) for x, y in product(M.labels, repeat=2))


def test_nerve_of_subdominant_is_dendrogram(rng):
    for _ in range(15):
        M = random_metric(rng, rng.randint(1, 8))
        T = nerve(subdominant_ultrametric(M))
        for n in T.nodes:
            if T.children[n]:
                # each internal node is a component at its own height
                assert sorted(T.members(n)) in [sorted(b) for b in eps_components(M, T.value[n])]
        back = nerve(subdominant_ultrametric(subdominant_ultrametric(M)))
        assert canonical_form(back) == canonical_form(T)


# -- cantor report -------------------------------------------------------------

def test_cantor_report():
    rep = cantor_report(chain_space(EIGHTHS, 1, 8))
    first = rep["levels"][0]
    assert first == {"eps": "1/8", "components": 1, "connected": True}
    rep = cantor_report(two_point())
    assert rep["levels"] == [{"eps": "1", "components": 1, "connected": True}]
    assert not rep["cantor_connected"]
    L = line_space([0, 2, 3])
    assert [lv["components"] for lv in cantor_report(L)["levels"]] == [2, 1, 1]
    one = cantor_report(build_space(["p"], [[0]]))
    assert one["levels"] == [] and one["cantor_connected"]
