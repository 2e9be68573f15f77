import json

import pytest

from amalgam.builder import generate
from amalgam.embedding import PartialMap, is_elementary
from amalgam.errors import InvalidInputError, UnsupportedError
from amalgam.functors import (
    DiagramFunctor,
    IndexFamily,
    NaturalIso,
    fs,
    functor_from_json,
    inclusion_functor,
    load_functor,
    localize,
    random_problem,
    untwist,
    validate_functor,
)
from amalgam.structure import EXAMPLE1, EXAMPLE2, closed_set, pair


def flags(rep):
    return (rep.functorial, rep.elementary, rep.closed, rep.independent, rep.untwisted)


def test_index_families():
    assert len(IndexFamily.full(3).sets) == 8
    assert len(IndexFamily.proper(3).sets) == 7
    assert IndexFamily.upto(4, 2).maximal()[0] == fs([0, 1])
    assert len(IndexFamily.full(3).covering_pairs()) == 12
    for data in ("full", "proper"):
        assert IndexFamily.from_json(3, data).to_json() == data
    with pytest.raises(InvalidInputError):
        IndexFamily(2, frozenset({fs([0, 1])}))
    with pytest.raises(InvalidInputError):
        IndexFamily(2, frozenset({fs([]), fs([5])}))


def test_constant_inclusion_functor_all_flags():
    s = generate(EXAMPLE1, 3, 0)
    f = inclusion_functor(s, [0, 1], IndexFamily.full(2))
    assert flags(validate_functor(f)) == (True, True, True, True, True)


def test_flipped_transition_is_twisted_but_valid():
    s = generate(EXAMPLE1, 3, 0, all_zero_base=True)
    f = inclusion_functor(s, [0, 1, 2])
    # flip the fiber over 01 on the way into the top, and on every chain through {0,1}
    flip = PartialMap({0: 0, 1: 1}, {pair(0, 1): 1})
    top = f.index.top
    g = f.with_transition(fs([0, 1]), top, flip)
    for s0 in (fs([0]), fs([1]), fs([])):
        g = g.with_transition(s0, top, flip.compose(f.transitions[s0, fs([0, 1])]))
    rep = validate_functor(g)
    assert flags(rep) == (True, True, True, True, False)


def test_broken_composition_detected():
    s = generate(EXAMPLE1, 3, 0)
    f = inclusion_functor(s, [0, 1, 2])
    g = f.with_transition(fs([0]), f.index.top, PartialMap({0: 2}, {}))
    rep = validate_functor(g)
    assert not rep.functorial
    assert any("composition" in p for p in rep.problems)


def test_dependent_values_not_independent():
    s = generate(EXAMPLE1, 3, 0)
    assignment = dict(inclusion_functor(s, [0, 1], IndexFamily.full(2)).assignment)
    assignment[fs([1])] = assignment[fs([0])]
    g = DiagramFunctor.build(IndexFamily.full(2), s, assignment, {(fs([1]), fs([0, 1])): PartialMap({0: 0}, {})})
    rep = validate_functor(g)
    assert rep.functorial
    assert not rep.independent


def test_localize():
    s = generate(EXAMPLE1, 4, 1)
    f = inclusion_functor(s, [0, 1, 2])
    assert localize(f, []).assignment == f.assignment
    g = localize(f, [2])
    assert g.n == 2
    assert g.assignment[fs([0])] == f.assignment[fs([0, 2])]
    assert flags(validate_functor(g))[:4] == (True, True, True, True)
    with pytest.raises(InvalidInputError):
        localize(f.minus(), [0, 1, 2])


@pytest.mark.parametrize("seed", range(5))
def test_localization_of_independent_problem_is_independent(seed):
    p = random_problem(generate(EXAMPLE1, 6, seed), 4, seed)
    assert validate_functor(p).independent
    for u in ([0], [1, 2], [3]):
        assert validate_functor(localize(p, u)).independent


def test_untwist_already_untwisted_gives_identity():
    s = generate(EXAMPLE1, 3, 0)
    f = inclusion_functor(s, [0, 1, 2])
    flat, iso = untwist(f)
    assert iso.ok
    assert all(m.is_identity for m in iso.components.values())


def test_untwist_flip_on_p2():
    s = generate(EXAMPLE1, 3, 0)
    f = inclusion_functor(s, [0, 1], IndexFamily.full(2))
    # move a({0}) to vertex 2 and send it into a({0,1}) by 2 -> 0
    assignment = dict(f.assignment)
    assignment[fs([0])] = closed_set([2])
    g = DiagramFunctor.build(f.index, s, assignment, {(fs([0]), fs([0, 1])): PartialMap({2: 0}, {})})
    flat, iso = untwist(g)
    rep = validate_functor(flat)
    assert rep.untwisted and rep.functorial
    assert iso.ok
    assert iso.components[fs([0])] == PartialMap({2: 0}, {})


@pytest.mark.parametrize("seed", range(5))
def test_untwist_random_solution(seed):
    from amalgam.amalgamation import solve_existence
    p = random_problem(generate(EXAMPLE1, 5, seed), 3, seed)
    sol = solve_existence(p).solution
    flat, iso = untwist(sol)
    assert validate_functor(flat).untwisted
    assert iso.ok
    assert iso.inverse().ok


def test_untwist_requires_top():
    s = generate(EXAMPLE1, 3, 0)
    with pytest.raises(UnsupportedError):
        untwist(inclusion_functor(s, [0, 1, 2]).minus())


def test_natural_iso_detects_bad_square():
    s = generate(EXAMPLE1, 3, 0, all_zero_base=True)
    f = inclusion_functor(s, [0, 1], IndexFamily.full(2))
    iso = NaturalIso.identity(f)
    assert iso.ok
    comps = dict(iso.components)
    comps[fs([0, 1])] = PartialMap({0: 0, 1: 1}, {pair(0, 1): 1})
    bad = NaturalIso(f, f, comps)
    assert bad.check() == []  # the flip commutes: no pair in a lower value is moved
    comps[fs([0, 1])] = PartialMap({0: 1, 1: 0}, {pair(0, 1): 0})
    assert any("square" in p for p in NaturalIso(f, f, comps).check())


@pytest.mark.parametrize("seed", range(4))
@pytest.mark.parametrize("n", [2, 3, 4])
def test_random_problem_valid(seed, n):
    p = random_problem(generate(EXAMPLE1, 6, seed), n, seed)
    rep = validate_functor(p)
    assert (rep.functorial, rep.elementary, rep.closed, rep.independent) == (True, True, True, True)
    assert all(is_elementary(m, p.ambient) for m in p.transitions.values())


def test_problem_file_round_trip(tmp_path):
    s = generate(EXAMPLE2, 5, 2)
    p = random_problem(s, 3, 4)
    (tmp_path / "amb.json").write_text(s.dumps())
    data = p.to_json(ambient_ref="amb.json")
    (tmp_path / "p.json").write_text(json.dumps(data))
    q = load_functor(tmp_path / "p.json")
    assert q.to_json() == p.to_json()
    inline = functor_from_json(p.to_json())
    assert inline.to_json() == p.to_json()


def test_problem_file_errors(tmp_path):
    with pytest.raises(InvalidInputError):
        functor_from_json({"n": 2})
    with pytest.raises(InvalidInputError):
        functor_from_json({"n": 2, "ambient": "missing.json", "assignment": []}, tmp_path)
    (tmp_path / "bad.json").write_text("{")
    with pytest.raises(InvalidInputError):
        load_functor(tmp_path / "bad.json")
