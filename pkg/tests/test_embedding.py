import random
from itertools import combinations, product

import pytest
from hypothesis import given, settings, strategies as st

from amalgam.builder import generate
from amalgam.embedding import (
    PartialMap,
    aut_group,
    enumerate_self_maps,
    extend_to_closure,
    is_elementary,
    max_elems,
    q_scan_preserves,
    restricted_aut_group,
)
from amalgam.errors import InvalidInputError, NoExtensionError, ResourceLimitError
from amalgam.structure import EXAMPLE1, EXAMPLE2, Pair, Substructure, Vertex, closed_set, fiber, pair

import oracles


def zero(n=4):
    return generate(EXAMPLE1, n, 0, all_zero_base=True)


def random_map(s, rng, size):
    dom = sorted(rng.sample(list(s.vertices), size))
    img = rng.sample(list(s.vertices), size)
    vm = dict(zip(dom, img))
    sh = {pair(a, b): rng.getrandbits(1) for a, b in combinations(dom, 2)}
    return PartialMap(vm, sh)


def test_identity_and_single_swap():
    s = zero(3)
    assert is_elementary(PartialMap.identity(closed_set([0, 1, 2])), s)
    swap2 = PartialMap({0: 0, 1: 1}, {pair(0, 1): 1})
    assert is_elementary(swap2, s) and q_scan_preserves(swap2, s)
    swap3 = PartialMap({0: 0, 1: 1, 2: 2}, {pair(0, 1): 1, pair(0, 2): 0, pair(1, 2): 0})
    assert not is_elementary(swap3, s) and not q_scan_preserves(swap3, s)


@pytest.mark.parametrize("flavor", [EXAMPLE1, EXAMPLE2])
@pytest.mark.parametrize("seed", range(4))
def test_shift_characterization_matches_scan_and_oracle(flavor, seed):
    s = generate(flavor, 5, seed)
    rng = random.Random(seed)
    for _ in range(150):
        m = random_map(s, rng, rng.randint(2, 5))
        want = oracles.elementary(s, s, dict(m.vertex_map), {(p.a, p.b): b for p, b in m.shift.items()})
        assert is_elementary(m, s) == want
        assert q_scan_preserves(m, s) == want


@pytest.mark.parametrize("seed", range(3))
def test_elementary_closed_under_composition_and_inverse(seed):
    s = generate(EXAMPLE1, 4, seed)
    maps = list(enumerate_self_maps(s, s.whole()))
    rng = random.Random(seed)
    for f, g in (rng.sample(maps, 2) for _ in range(50)):
        assert is_elementary(f.compose(g), s)
        assert is_elementary(f.inverse(), s)
        assert f.compose(f.inverse()).is_identity


def test_map_algebra_and_json():
    m = PartialMap({0: 1, 1: 2}, {pair(0, 1): 1})
    assert m(Vertex(0)) == Vertex(1)
    assert m(Pair(0, 1)) == Pair(1, 2)
    assert m(fiber(0, 1, 0)) == fiber(1, 2, 1)
    assert PartialMap.from_json(m.to_json()) == m
    assert m.inverse().inverse() == m
    assert m.merge(PartialMap({0: 2}, {})) is None
    assert m.merge(PartialMap({3: 3}, {})).vertex_map[3] == 3
    assert m.restrict(closed_set([0])).vertex_map == {0: 1}
    with pytest.raises(InvalidInputError):
        PartialMap({0: 1, 1: 1}, {})
    with pytest.raises(InvalidInputError):
        PartialMap({0: 1}, {pair(0, 1): 0})
    with pytest.raises(InvalidInputError):
        m(Vertex(5))
    with pytest.raises(InvalidInputError):
        PartialMap.from_json({"shift": [{"pair": [0]}]})


def test_extend_identity_on_pair():
    s = zero(3)
    ext = extend_to_closure(PartialMap({0: 0, 1: 1}, {pair(0, 1): 0}), closed_set([0, 1]), s)
    assert ext.map.is_identity and ext.unique


def test_triangle_map_unique_given_edge_choices():
    s = generate(EXAMPLE1, 4, 3)
    m = PartialMap({0: 0, 1: 1, 2: 2}, {pair(0, 1): 1, pair(0, 2): 1})
    ext = extend_to_closure(m, closed_set([0, 1, 2]), s)
    assert ext.unique
    assert ext.map.shift[pair(1, 2)] == 0


@pytest.mark.parametrize("seed", range(5))
def test_extension_matches_exhaustive_search(seed):
    s = generate(EXAMPLE1, 4, seed)
    rng = random.Random(seed)
    target = s.whole()
    prs = sorted(target.pairs)
    for _ in range(20):
        perm = list(s.vertices)
        rng.shuffle(perm)
        vm = dict(zip(s.vertices, perm))
        given = {p: rng.getrandbits(1) for p in rng.sample(prs, rng.randint(0, 3))}
        brute = []
        for bits in product((0, 1), repeat=len(prs)):
            sh = dict(zip(prs, bits))
            if all(sh[p] == b for p, b in given.items()) and oracles.elementary(
                    s, s, vm, {(p.a, p.b): b for p, b in sh.items()}):
                brute.append(sh)
        try:
            ext = extend_to_closure(PartialMap(vm, given), target, s)
        except NoExtensionError:
            assert brute == []
            continue
        assert ext.map.shift in brute
        assert ext.unique == (len(brute) == 1)


def test_extension_errors():
    s = zero(3)
    with pytest.raises(NoExtensionError) as info:
        extend_to_closure(PartialMap({0: 0, 1: 1, 2: 2}, {pair(0, 1): 1, pair(0, 2): 0, pair(1, 2): 0}),
                          closed_set([0, 1, 2]), s)
    assert info.value.triangle == (0, 1, 2)
    with pytest.raises(InvalidInputError):
        extend_to_closure(PartialMap({0: 0}, {}), closed_set([0, 1]), s)


def test_aut_group_examples():
    s = zero(3)
    ab = closed_set([0, 1])
    assert aut_group(s, ab, [Vertex(0), Vertex(1)]).order == 2
    assert aut_group(s, ab, ab.elements()).order == 1
    abc = closed_set([0, 1, 2])
    g = aut_group(s, abc, [Vertex(0), Vertex(1), Vertex(2)])
    assert g.order == 4 and g.is_abelian()
    assert g.carrier[g.identity].is_identity


@pytest.mark.parametrize("seed", range(3))
def test_aut_group_order_matches_oracle(seed):
    s = generate(EXAMPLE1, 4, seed)
    assert aut_group(s, s.whole()).order == len(oracles.self_maps(s, s.vertices))
    fixed = [Vertex(0)]
    assert aut_group(s, s.whole(), fixed).order == len(oracles.self_maps(s, s.vertices, fixed))


def test_aut_group_table_is_a_group():
    s = zero(4)
    g = aut_group(s, closed_set([0, 1, 2]))
    e = g.identity
    for i in range(g.order):
        assert g.table[i, e] == i == g.table[e, i]
        assert any(g.table[i, j] == e for j in range(g.order))
    assert g.orbit(fiber(0, 1, 0)) >= {fiber(0, 1, 0), fiber(0, 1, 1)}


def test_aut_group_rejects_bad_input():
    s = zero(3)
    with pytest.raises(InvalidInputError):
        aut_group(s, closed_set([0, 1]), [Vertex(2)])


def test_aut_group_on_non_closed_set():
    # a path 0-1-2 has no triangle: the end swap and all four shift vectors survive
    s = zero(3)
    g = aut_group(s, Substructure(frozenset({0, 1, 2}), frozenset({Pair(0, 1), Pair(1, 2)})))
    assert g.order == 8


def test_resource_cap(monkeypatch):
    s = zero(7)
    with pytest.raises(ResourceLimitError):
        aut_group(s, s.whole(), limit=100)
    monkeypatch.setenv("AMALGAM_MAX_ELEMS", "50")
    assert max_elems() == 50
    with pytest.raises(ResourceLimitError):
        aut_group(s, s.whole())
    monkeypatch.setenv("AMALGAM_MAX_ELEMS", "lots")
    with pytest.raises(InvalidInputError):
        max_elems()


def test_restricted_group():
    s = zero(3)
    g = restricted_aut_group(s, [Vertex(0), Vertex(1), Pair(0, 1)], [Vertex(0), Vertex(1)])
    assert g.order == 1
    g = restricted_aut_group(s, closed_set([0, 1]).elements(), [Vertex(0), Vertex(1)])
    assert g.order == 2 and g.is_abelian()
    assert g.to_json()["order"] == 2


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_every_enumerated_self_map_is_elementary(seed):
    s = generate(EXAMPLE1, 4, seed)
    for m in enumerate_self_maps(s, closed_set([0, 1, 2])):
        assert oracles.elementary(s, s, dict(m.vertex_map), {(p.a, p.b): b for p, b in m.shift.items()})
