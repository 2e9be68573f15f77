import random
from itertools import combinations, permutations, product

import pytest

from amalgam.builder import coboundary_structure, generate
from amalgam.errors import InternalInvariantError, InvalidInputError
from amalgam.groupoid import (
    QTheta,
    TwistedTheta,
    aut_tower,
    binding_group,
    binding_vs_automorphisms,
    build_groupoid,
    check_abelian_criterion,
    check_commuting_regular_actions,
    coherence_violations,
    find_witness,
    make_witness,
    theta_matches_composition,
    twist_witness,
    witness_clauses,
)
from amalgam.structure import EXAMPLE1, EXAMPLE2, eval_Q, fiber

import oracles


def cocycle_free(n, seed):
    return generate(EXAMPLE1, n, seed, all_zero_base=True) if seed % 2 == 0 else coboundary_structure(n, seed)


def test_witness_on_zero_triangle():
    s = generate(EXAMPLE1, 4, 0, all_zero_base=True)
    w = find_witness(s, (0, 1, 2))
    assert w.full
    assert [f.parity for f in w.fibers] == [0, 0, 0]
    assert all(w.clauses.values())


def test_witness_theta_unique_in_each_coordinate():
    s = generate(EXAMPLE1, 4, 3)
    w = find_witness(s, (0, 1, 3))
    assert eval_Q(s, *w.fibers)
    for k in range(3):
        flipped = [f.flipped() if i == k else f for i, f in enumerate(w.fibers)]
        assert not eval_Q(s, *flipped)


def test_no_witness_off_r():
    s = generate(EXAMPLE2, 4, 0, all_zero_base=True)
    assert find_witness(s, (0, 1, 2)) is None


def test_witness_input_checks():
    s = generate(EXAMPLE1, 4, 0)
    with pytest.raises(InvalidInputError):
        find_witness(s, (0, 0, 1))
    with pytest.raises(InvalidInputError):
        find_witness(s, (0, 1, 9))
    with pytest.raises(InvalidInputError):
        make_witness(s, (0, 1, 2), (fiber(0, 1, 0), fiber(1, 2, 0), fiber(0, 2, s.status((0, 1, 2)) ^ 1)))


def test_wrong_pairs_fail_clause_one():
    s = generate(EXAMPLE1, 4, 0)
    cl = witness_clauses(s, (0, 1, 2), (fiber(0, 3, 0), fiber(1, 2, 0), fiber(0, 2, 0)), QTheta())
    assert not cl["in_closure"]


@pytest.mark.parametrize("n", [3, 4, 5, 6])
@pytest.mark.parametrize("seed", [0, 1, 2, 3])
def test_groupoid_laws_and_parity_form(n, seed):
    s = cocycle_free(n, seed)
    w = find_witness(s, (0, 1, 2))
    g = build_groupoid(w, s)
    assert g.law_violations() == []
    for a, b, c in product(s.vertices, repeat=3):
        for x, y in product((0, 1), repeat=2):
            assert g.compose((b, c, y), (a, b, x)) == (a, c, oracles.composite_parity(s, a, b, c, x, y))
    assert theta_matches_composition(g) == []
    if n <= 5:
        assert coherence_violations(g) == []


def test_composition_oracle_reads_raw_bits():
    s = coboundary_structure(4, 5)
    g = build_groupoid(find_witness(s, (0, 1, 2)), s)
    for a, b, c in permutations(s.vertices, 3):
        bit = s.base[tuple(sorted((a, b, c)))]
        assert g.compose((b, c, 0), (a, b, 0))[2] == bit


@pytest.mark.parametrize("seed", range(8))
def test_groupoid_builds_iff_cocycle_vanishes(seed):
    s = generate(EXAMPLE1, 5, seed)
    cocycle = any(sum(s.status(t) for t in combinations(q, 3)) % 2 for q in combinations(s.vertices, 4))
    w = find_witness(s, (0, 1, 2))
    if cocycle:
        with pytest.raises(InternalInvariantError):
            build_groupoid(w, s)
    else:
        assert build_groupoid(w, s).law_violations() == []


def test_identities_inverses_and_errors():
    s = generate(EXAMPLE1, 3, 0, all_zero_base=True)
    g = build_groupoid(find_witness(s, (0, 1, 2)), s)
    f = (0, 1, 1)
    assert g.compose(f, g.identity(0)) == f
    assert g.compose(g.inverse(f), f) == g.identity(0)
    with pytest.raises(InvalidInputError):
        g.compose((2, 0, 0), (0, 1, 0))
    assert g.to_json()["objects"] == [0, 1, 2]


@pytest.mark.parametrize("seed", range(4))
def test_binding_group(seed):
    s = cocycle_free(5, seed)
    g = build_groupoid(find_witness(s, (0, 1, 2)), s)
    bg = binding_group(g)
    assert bg.order == 2 and bg.is_abelian()
    assert bg.law_violations() == []
    for i in range(bg.order):
        for f in g.morphisms():
            assert bg.left(i, f) == bg.right(f, i)
    crit = check_abelian_criterion(g, 0, 1)
    assert crit.hypothesis and crit.conclusion and crit.implication
    iso = binding_vs_automorphisms(bg, 0, 1)
    assert sorted(iso) == [0, 1] and sorted(iso.values()) == [0, 1]


def test_abelian_criterion_needs_distinct_objects():
    s = generate(EXAMPLE1, 3, 0, all_zero_base=True)
    g = build_groupoid(find_witness(s, (0, 1, 2)), s)
    with pytest.raises(InvalidInputError):
        check_abelian_criterion(g, 0, 0)


def test_regular_actions_swap():
    X = ["p", "q"]
    swap = {"p": "q", "q": "p"}
    ident = {"p": "p", "q": "q"}
    iso = check_commuting_regular_actions(X, {"e": ident, "s": swap}, {0: ident, 1: swap})
    assert iso == {"e": 0, "s": 1}


def _cyclic_product(orders):
    elems = list(product(*(range(k) for k in orders)))

    def add(x, y):
        return tuple((a + b) % k for a, b, k in zip(x, y, orders))
    return elems, add


def _dihedral(n):
    elems = [(r, f) for f in (0, 1) for r in range(n)]

    def mul(x, y):
        r1, f1 = x
        r2, f2 = y
        return ((r1 + (-r2 if f1 else r2)) % n, f1 ^ f2)
    return elems, mul


@pytest.mark.parametrize("seed", range(10))
def test_random_regular_commuting_actions(seed):
    rng = random.Random(seed)
    choices = [_cyclic_product([rng.randint(1, 8)]), _cyclic_product([2, 2]), _cyclic_product([2, 4]),
               _dihedral(rng.choice([3, 4])), _cyclic_product([2, 2, 2])]
    elems, mul = rng.choice(choices)
    points = elems[:]
    rng.shuffle(points)
    left = {g: {x: mul(g, x) for x in points} for g in elems}
    right = {g: {x: mul(x, g) for x in points} for g in elems}
    # right translation by g^-1 makes the second family a left action
    inv = {g: next(h for h in elems if mul(g, h) == elems[0]) for g in elems}
    right_action = {g: right[inv[g]] for g in elems}
    iso = check_commuting_regular_actions(points, left, right_action)
    assert sorted(iso.values()) == sorted(elems)
    for g1, g2 in product(elems, repeat=2):
        assert iso[mul(g1, g2)] == mul(iso[g1], iso[g2])


def test_non_regular_and_non_commuting_named():
    X = [0, 1, 2]
    ident = {x: x for x in X}
    with pytest.raises(InvalidInputError, match="not regular"):
        check_commuting_regular_actions(X, {"e": ident}, {"e": ident})
    elems, mul = _dihedral(3)
    left = {g: {x: mul(g, x) for x in elems} for g in elems}
    with pytest.raises(InvalidInputError, match="do not commute"):
        check_commuting_regular_actions(elems, left, left)
    with pytest.raises(InvalidInputError, match="not a permutation"):
        check_commuting_regular_actions(X, {"e": {0: 0, 1: 0, 2: 2}}, {"e": ident})


@pytest.mark.parametrize("sigma", list(product((0, 1), repeat=3)))
def test_all_twists(sigma):
    s = coboundary_structure(5, 7)
    w = find_witness(s, (0, 1, 2))
    res = twist_witness(w, sigma, s)
    assert res.witness.full
    assert [f.parity for f in res.witness.fibers] == [f.parity ^ b for f, b in zip(w.fibers, sigma)]
    g = build_groupoid(w, s)
    h = res.groupoid
    for (gg, ff), comp in g.table.items():
        assert h.compose(res.isomorphism[gg], res.isomorphism[ff]) == res.isomorphism[comp]
    if not any(sigma):
        assert res.witness.fibers == w.fibers and res.witness.theta is w.theta


def test_twisted_theta_formula():
    s = generate(EXAMPLE1, 3, 0, all_zero_base=True)
    th = TwistedTheta(QTheta(), (1, 0, 0))
    x, y, z = fiber(0, 1, 1), fiber(1, 2, 0), fiber(0, 2, 0)
    assert th(s, x, y, z) == eval_Q(s, x.flipped(), y, z)
    assert th.name == "Q~100"
    with pytest.raises(InvalidInputError):
        twist_witness(find_witness(s, (0, 1, 2)), (1, 0), s)


@pytest.mark.parametrize("seed", range(5))
def test_aut_tower_example1(seed):
    s = generate(EXAMPLE1, 4, seed)
    stage = aut_tower(s, 0, 1, buffer=2, seed=seed)
    assert stage.group.order == 2 and stage.group.is_abelian()
    assert fiber(0, 1, 0) in stage.points and fiber(0, 1, 1) in stage.points
    assert stage.c not in s.vertices


def test_aut_tower_example2_trivial():
    s = generate(EXAMPLE2, 4, 1)
    stage = aut_tower(s, 0, 1, buffer=2)
    assert stage.group.order == 1


def test_aut_tower_input_checks():
    s = generate(EXAMPLE1, 4, 0)
    with pytest.raises(InvalidInputError):
        aut_tower(s, 0, 1, buffer=0)
    with pytest.raises(InvalidInputError):
        aut_tower(s, 0, 0)
    assert aut_tower(s, 0, 1, buffer=0, c=2).group.is_abelian()
    with pytest.raises(InvalidInputError):
        aut_tower(s, 0, 1, c=1)
