from itertools import chain, combinations, product

import pytest

from amalgam.builder import (
    ExtensionRequest,
    add_vertex,
    blocked_configuration,
    blocks,
    coboundary_structure,
    derive_seed,
    extend_axiom4,
    generate,
    pad,
    realized_pattern,
)
from amalgam.errors import InvalidInputError, UnsupportedError
from amalgam.structure import ABSENT, EXAMPLE1, EXAMPLE2, eval_Q, fiber, validate_axioms

import oracles


def all_patterns(n):
    idx = list(combinations(range(n), 2))
    return [frozenset(w) for w in chain.from_iterable(combinations(idx, r) for r in range(len(idx) + 1))]


def test_empty_and_determinism():
    assert generate(EXAMPLE1, 0, 5).vertices == ()
    assert generate(EXAMPLE1, 6, 7).dumps() == generate(EXAMPLE1, 6, 7).dumps()
    assert generate(EXAMPLE1, 6, 7).dumps() != generate(EXAMPLE1, 6, 8).dumps()
    assert derive_seed(3, "a") == derive_seed(3, "a") != derive_seed(3, "b")


@pytest.mark.parametrize("seed", range(4))
def test_generated_flavors(seed):
    assert validate_axioms(generate(EXAMPLE1, 4, seed)).ok
    s2 = generate(EXAMPLE2, 5, seed)
    assert validate_axioms(s2).ok
    for t in s2.triangles():
        assert (s2.status(t) is ABSENT) == (not s2.q_parities(t))


def test_coboundary_has_zero_cocycle():
    s = coboundary_structure(6, 3)
    for q in combinations(s.vertices, 4):
        assert sum(s.status(t) for t in combinations(q, 3)) % 2 == 0


def test_generate_rejects_bad_input():
    with pytest.raises(InvalidInputError):
        generate("example9", 3, 0)
    with pytest.raises(InvalidInputError):
        generate(EXAMPLE1, -1, 0)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_every_pattern_realized(n):
    s = generate(EXAMPLE1, 5, n)
    anchors = tuple(range(n))
    for k, w in enumerate(all_patterns(n)):
        chosen = {ij: fiber(anchors[ij[0]], anchors[ij[1]], (k >> r) & 1)
                  for r, ij in enumerate(combinations(range(n), 2))}
        req = ExtensionRequest.make(anchors, chosen, w)
        ext = extend_axiom4(s, req, seed=k)
        assert realized_pattern(ext, req) == w
        assert validate_axioms(ext.structure).ok
        assert ext.structure.restrict(s.vertices) == s


def test_small_patterns_explicit():
    s = generate(EXAMPLE1, 3, 1)
    req = ExtensionRequest.make((0, 1), pattern=[])
    ext = extend_axiom4(s, req)
    assert not eval_Q(ext.structure, req.chosen[0, 1], *ext.fibers)
    req = ExtensionRequest.make((0, 1), pattern=[(0, 1)])
    ext = extend_axiom4(s, req)
    assert eval_Q(ext.structure, req.chosen[0, 1], *ext.fibers)


def test_pattern_realizable_by_exhaustive_parity_search():
    # oracle: some choice of the y parities together with the new bits realizes W
    s = generate(EXAMPLE1, 4, 2)
    anchors = (0, 1, 2)
    for w in all_patterns(3):
        req = ExtensionRequest.make(anchors, pattern=w)
        ext = extend_axiom4(s, req, all_zero=True)
        bits = {ij: ext.structure.status(tuple(sorted((anchors[ij[0]], anchors[ij[1]], ext.vertex))))
                for ij in combinations(range(3), 2)}
        ok = [ys for ys in product((0, 1), repeat=3)
              if all(oracles.q_holds(bits[ij], (0, ys[ij[0]], ys[ij[1]])) == (ij in w) for ij in bits)]
        assert tuple(f.parity for f in ext.fibers) in ok


def test_axiom4_unsupported_in_example2_and_validates_request():
    with pytest.raises(UnsupportedError):
        extend_axiom4(generate(EXAMPLE2, 3, 0), ExtensionRequest.make((0, 1)))
    s = generate(EXAMPLE1, 3, 0)
    with pytest.raises(InvalidInputError):
        extend_axiom4(s, ExtensionRequest.make((0, 0)))
    with pytest.raises(InvalidInputError):
        extend_axiom4(s, ExtensionRequest.make((0, 7)))
    with pytest.raises(InvalidInputError):
        extend_axiom4(s, ExtensionRequest.make((0, 1), chosen={(0, 1): fiber(0, 2, 0)}))


@pytest.mark.parametrize("seed", range(3))
def test_blocked_configuration(seed):
    s, t = blocked_configuration(seed)
    assert validate_axioms(s).ok
    assert s.status(t) == 0
    assert blocks(s, t)


def test_blocked_configuration_kept_under_any_legal_extension():
    s, t = blocked_configuration(4, 5)
    others = [p for p in combinations(s.vertices, 2) if not set(p) <= set(t)]
    for choice in product((ABSENT, 0), repeat=len(others)):
        s2, _ = add_vertex(s, dict(zip(others, choice)), preserve_block=t)
        assert blocks(s2, t)
        assert validate_axioms(s2).ok


def test_add_vertex_refuses_to_unblock():
    s, t = blocked_configuration(1, 4)
    with pytest.raises(InvalidInputError):
        add_vertex(s, {(0, 1): 0}, preserve_block=t)


@pytest.mark.parametrize("flavor", [EXAMPLE1, EXAMPLE2])
def test_pad_keeps_old_part(flavor):
    s = generate(flavor, 4, 1)
    s2, added = pad(s, 2, 9)
    assert added == (4, 5)
    assert s2.restrict(s.vertices) == s
    assert validate_axioms(s2).ok
    if flavor == EXAMPLE2:
        assert all(s2.status(t) is ABSENT for t in s2.triangles() if set(t) & set(added))
