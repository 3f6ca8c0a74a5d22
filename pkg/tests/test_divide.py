from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_metric, random_ultrametric
from vmetric.divide import (
    BallCover,
    _pick_radius,
    ball_cover,
    check_cover,
    divisibility_experiment,
    divisibility_partition,
    guard_ring_check,
    ring,
    scattered_fixpoint,
    stripe_index,
    stripes,
    sub_isolated_at,
    sub_isolated_points,
    ultra_spec_partition,
    unbounded_partition,
)
from vmetric.errors import (
    BadBounds,
    BadSequence,
    CannotSeparate,
    Degenerate,
    InvalidPartition,
    NotUltrametric,
    UnknownPoint,
)
from vmetric.space import FiniteMetricSpace, build_space, chain_space, isometric_embeddings, line_space, two_point
from vmetric.ultra import OmegaSpec, omega_sequence_space
from vmetric.values import ValueSet

F = Fraction


def clique(n):
    return build_space([f"p{i}" for i in range(n)], [[0 if i == j else 1 for j in range(n)] for i in range(n)])


# -- rings and stripes -------------------------------------------------------

def test_ring_examples():
    L = line_space([0, 1, 2, 3])
    assert ring(L, "0", 1, 3) == ["1", "2"]
    assert ring(L, "1", 0, 1) == ["1"]
    assert ring(L, "0", 10, 11) == []
    with pytest.raises(BadBounds):
        ring(L, "0", 2, 2)
    with pytest.raises(UnknownPoint):
        ring(L, "9", 0, 1)


def test_stripe_examples():
    M = build_space(["c", "x", "y"], [[0, F(3, 5), 1], [F(3, 5), 0, 1], [1, 1, 0]])
    E, O = stripes(M, "c", 1)
    assert E == ["x"] and O == ["c"]
    with pytest.raises(BadBounds):
        stripes(M, "c", 0)


def stripe_oracle(t, l):
    n = 1
    while not (l * (n - 1) / n <= t < l * n / (n + 1)):
        n += 1
    return n


@settings(max_examples=300, deadline=None)
@given(st.fractions(F(1, 100), 10), st.fractions(0, 1).filter(lambda f: f < 1))
def test_stripe_index_matches_literal_rings(l, frac):
    t = l * frac
    assert stripe_index(t, l) == stripe_oracle(t, l)


def test_stripes_tile_the_ball(rng):
    for _ in range(30):
        M = random_metric(rng, rng.randint(1, 8))
        c = rng.choice(M.labels)
        l = F(rng.randint(1, 40), rng.randint(1, 6))
        E, O = stripes(M, c, l)
        assert not set(E) & set(O)
        assert sorted(E + O) == sorted(ring(M, c, 0, l))


# -- ball covers -------------------------------------------------------------

def test_ball_cover_examples():
    cov = ball_cover(clique(3), F(1, 2))
    assert cov.centers == ["p0", "p1", "p2"]
    assert all(r < F(1, 4) and r != 1 for r in cov.radii.values())
    single = ball_cover(build_space(["p"], [[0]]), 5)
    assert single.centers == ["p"]
    L = line_space([0, F(1, 8), 1])
    cov = ball_cover(L, F(1, 2))
    assert cov.members["0"] == ["0", "1/8"] and cov.members["1"] == ["1"]
    assert F(1, 8) < cov.radii["0"] < F(1, 4)


def test_pick_radius():
    assert _pick_radius(F(1, 4), [F(1, 8), 1]) == F(3, 16)
    assert _pick_radius(F(1, 4), []) == F(1, 8)
    assert _pick_radius(F(1, 2), [F(1, 8), F(1, 4)]) == F(3, 8)


def test_ball_cover_invariants(rng):
    for _ in range(40):
        M = random_metric(rng, rng.randint(1, 9))
        Lam = F(rng.randint(1, 20), rng.randint(1, 4))
        order = list(M.labels)
        rng.shuffle(order)
        cov = ball_cover(M, Lam, order)
        realized = set(M.spectrum())
        owner = {}
        for c in cov.centers:
            l = cov.radii[c]
            assert 2 * l < Lam and l not in realized
            for x in cov.members[c]:
                assert x not in owner
                owner[x] = c
        assert sorted(owner) == sorted(M.labels)
        assert cov.centers[0] == order[0]


def test_cover_check_rejects_bad_covers():
    L = line_space([0, 1, 2])
    with pytest.raises(CannotSeparate):
        check_cover(L, BallCover(["0"], {"0": F(1, 2)}, {}))
    with pytest.raises(CannotSeparate):
        check_cover(L, BallCover(["0", "1", "2"], {"0": 1, "1": F(1, 2), "2": F(1, 2)}, {}))
    with pytest.raises(CannotSeparate):
        check_cover(L, BallCover(["0", "1"], {"0": F(3, 2), "1": F(3, 2)}, {}))
    cov = ball_cover(L, 1)
    assert BallCover.from_json(cov.to_json()) == cov


def test_divisibility_partition_examples():
    cov = ball_cover(clique(3), F(1, 2))
    E, O = divisibility_partition(clique(3), cov)
    assert E == [] and O == ["p0", "p1", "p2"]
    L = line_space([0, F(1, 8)])
    E, O = divisibility_partition(L, BallCover(["0"], {"0": F(3, 16)}, {}))
    assert E == [] and O == ["0", "1/8"]
    empty = FiniteMetricSpace([], [])
    assert divisibility_partition(empty, BallCover([], {}, {})) == ([], [])


def test_chains_through_a_wide_center_cross_stripes():
    # a chain leaving a center c with steps below the width of stripe 2 (l/6)
    # cannot stay inside one parity class
    G = line_space([F(k, 64) for k in range(129)])
    cov = ball_cover(G, 1)
    E, O = divisibility_partition(G, cov)
    assert sorted(E + O) == sorted(G.labels) and not set(E) & set(O)
    seg = line_space([F(k, 64) for k in range(65)])
    step = F(1, 64)
    wide = [c for c in cov.centers if step < cov.radii[c] / 6]
    assert wide
    checked = 0
    for m in isometric_embeddings(seg, G):
        img = set(m.values())
        if any(c in img for c in wide):
            checked += 1
            assert img & set(E) and img & set(O)
    assert checked


def test_greedy_cover_leaves_singleton_tails():
    # later centers sit next to covered points, so their balls shrink below a step
    G = line_space([F(k, 64) for k in range(129)])
    cov = ball_cover(G, 1)
    assert len(cov.members[cov.centers[0]]) > 1
    assert all(len(cov.members[c]) == 1 for c in cov.centers[1:])


# -- unbounded construction -------------------------------------------------

def test_unbounded_examples():
    L = line_space(range(101))
    res = unbounded_partition(L, "0")
    assert res.a_seq == ["1", "5", "17", "53"]
    assert res.r_seq == [0, 2, 8, 26, 80]
    assert res.steps == 4
    assert sorted(res.E + res.O) == sorted(L.labels)
    with pytest.raises(Degenerate):
        unbounded_partition(two_point(), "a")


def test_unbounded_sequence_inequalities(rng):
    for _ in range(30):
        M = random_metric(rng, rng.randint(3, 12))
        a0 = M.labels[0]
        try:
            res = unbounded_partition(M, a0)
        except Degenerate:
            continue
        r = res.r_seq
        for i, a in enumerate(res.a_seq):
            assert M.d(a0, a) > 2 * r[i]
            assert M.d(a0, a) + r[i] < r[i + 1]


def test_unbounded_self_isometries_meet_both_classes():
    L = line_space(range(101))
    res = unbounded_partition(L, "0")
    E, O = set(res.E), set(res.O)
    autos = isometric_embeddings(L, L)
    assert len(autos) == 2
    for m in autos:
        img = set(m.values())
        assert img & E and img & O


# -- ultrametric spectrum partition -----------------------------------------

def test_ultra_spec_examples():
    M = omega_sequence_space(OmegaSpec((2, 1), (2, 2)))
    p = ultra_spec_partition(M, "(0,0)", [0, 1, 2])
    # open balls of radius 2 split the two distance-2 halves; ring 0 (the centers) is even
    assert p.ball_count == 2 and p.centers == ["(0,0)", "(1,0)"]
    assert p.E == ["(0,0)", "(1,0)"] and p.O == ["(0,1)", "(1,1)"]
    whole = ultra_spec_partition(M, "(0,0)", [0, 3])
    assert whole.E == list(M.labels) and whole.O == []
    with pytest.raises(NotUltrametric):
        ultra_spec_partition(line_space([0, 1, 3]), "0", [0, 1])
    for bad in ([1, 2], [0], [0, 2, 1]):
        with pytest.raises(BadSequence):
            ultra_spec_partition(M, "(0,0)", bad)


def test_ultra_spec_partition_covers(rng):
    for _ in range(30):
        U = random_ultrametric(rng, rng.randint(2, 9))
        a = U.labels[0]
        r = sorted(set(U.spectrum_at(a)))
        p = ultra_spec_partition(U, a, r)
        assert p.in_spectrum
        assert sorted(p.E + p.O) == sorted(U.labels) and not set(p.E) & set(p.O)


@pytest.mark.parametrize("spec", [
    OmegaSpec((2, 1), (2, 2)),
    OmegaSpec((2, 1), (3, 2)),
    OmegaSpec((3, 2, 1), (2, 2, 2)),
    OmegaSpec((2, 1), (3, 3)),
])
def test_ultra_spec_blocks_hold_no_copy(spec):
    M = omega_sequence_space(spec)
    a = M.labels[0]
    r = [0] + sorted(spec.weights)
    p = ultra_spec_partition(M, a, r)
    rep = divisibility_experiment(M, [p.E, p.O])
    assert rep["divisible"]


# -- sub-isolation -------------------------------------------------------------

def test_sub_isolation_examples():
    K = clique(3)
    W = ValueSet([0, 1])
    assert sub_isolated_points(K, W) == []
    chain, empty = scattered_fixpoint(K, W)
    assert chain == [list(K.labels)] and not empty
    one = build_space(["p"], [[0]])
    assert sub_isolated_at(one, "p", 1, W)
    far = build_space("ab", [[0, 5], [5, 0]])
    assert sub_isolated_at(far, "a", 1, W)  # no neighbor within 1
    spread = build_space("abc", [[0, 2, 4], [2, 0, 4], [4, 4, 0]])
    _, empty = scattered_fixpoint(spread, ValueSet([0, 1]))
    assert empty
    assert scattered_fixpoint(FiniteMetricSpace([], []), W) == ([[]], True)


def test_pairs_agree_with_explicit_patterns(rng):
    for _ in range(15):
        M = random_metric(rng, rng.randint(2, 5), denominators=(1,))
        W = ValueSet([0] + sorted(rng.sample(range(1, 10), 3)))
        for a in M.labels:
            for eps in M.spectrum().positive:
                quick = sub_isolated_at(M, a, eps, W, (2,))
                vals = [w for w in W.positive if w <= eps]
                slow = any(w not in set(M.row(a).values()) for w in vals)
                assert quick == slow


def test_larger_patterns_only_add_isolation(rng):
    for _ in range(8):
        M = random_metric(rng, 4, denominators=(1,))
        W = ValueSet([0, 1, 2, 3])
        a = M.labels[0]
        for eps in M.spectrum().positive:
            if sub_isolated_at(M, a, eps, W, (2,)):
                assert sub_isolated_at(M, a, eps, W, (2, 3))


def test_fixpoint_chain_shrinks(rng):
    for _ in range(15):
        M = random_metric(rng, rng.randint(1, 7))
        W = ValueSet([0, 1, 2])
        chain, empty = scattered_fixpoint(M, W)
        for a, b in zip(chain, chain[1:]):
            assert set(b) < set(a)
        assert empty == (chain[-1] == [])


# -- experiments --------------------------------------------------------------

def test_experiment_examples():
    M = two_point()
    assert divisibility_experiment(M, [["a"], ["b"]])["divisible"]
    rep = divisibility_experiment(M, [["a", "b"], []])
    assert not rep["divisible"] and rep["blocks"][0]["witness"] == {"a": "a", "b": "b"}
    K = omega_sequence_space(OmegaSpec((1,), (4,)))
    assert divisibility_experiment(K, [K.labels[:2], K.labels[2:]])["divisible"]
    with pytest.raises(InvalidPartition):
        divisibility_experiment(M, [["a"], ["a", "b"]])
    with pytest.raises(InvalidPartition):
        divisibility_experiment(M, [["a"]])


def test_experiment_parallel_matches_serial():
    M = line_space(range(12))
    blocks = [[x for x in M.labels if int(x) % 3 == k] for k in range(3)]
    blocks.append([])
    assert divisibility_experiment(M, blocks, jobs=3) == divisibility_experiment(M, blocks, jobs=1)
    L = line_space(range(20))
    halves = [L.labels[:10], L.labels[10:]]
    assert divisibility_experiment(L, halves, jobs=2) == divisibility_experiment(L, halves)


# -- guard rings -------------------------------------------------------------

@pytest.mark.parametrize("den", [4, 8, 16])
def test_guard_rings_on_fine_grids(den):
    G = line_space([F(k, den) for k in range(4 * den + 1)])
    rep = guard_ring_check(G, "2", F(1, 2), F(3, 4), F(5, 4), F(3, 2), F(1, 5))
    assert rep["ok"] and rep["kept"] < len(G)


def test_guard_rings_on_chain_spaces():
    for n in (4, 8):
        C = chain_space(ValueSet([F(k, 8) for k in range(9)]), 1, n)
        rep = guard_ring_check(C, "x0", F(1, 8), F(3, 8), F(5, 8), F(7, 8), F(1, 8))
        assert rep["ok"]


def test_guard_ring_bounds_and_failure_without_guards():
    G = line_space([F(k, 8) for k in range(17)])
    with pytest.raises(BadBounds):
        guard_ring_check(G, "0", F(1, 2), F(3, 4), F(5, 4), F(3, 2), F(1, 4))
    with pytest.raises(BadBounds):
        guard_ring_check(G, "0", 1, F(1, 2), F(5, 4), F(3, 2), F(1, 8))
    # a guard narrower than a step can be jumped: eps must stay below the guard width
    rep = guard_ring_check(G, "0", F(1, 2), F(9, 16), F(5, 4), F(3, 2), F(1, 32))
    assert rep["ok"]
