"""Symmetric witnesses and the double-cover groupoid they define.

Objects are vertices. A morphism a -> b is written (a, b, d): for a != b it
stands for the fiber of parity d over {a, b}; for a == b it is one of the
two loops. Composition of non-loop morphisms over three distinct objects is
read off the binding relation theta; compositions through a repeated object
add parities.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations, permutations, product
from typing import Mapping

from .builder import derive_seed, pad
from .embedding import aut_group, restricted_aut_group
from .errors import InternalInvariantError, InvalidInputError
from .gf2 import GF2System
from .structure import (
    ABSENT,
    Fiber,
    Structure,
    Substructure,
    Vertex,
    dcl,
    eval_Q,
    fiber,
    pair,
)


class QTheta:
    """theta = Q; symmetric, so the argument roles are irrelevant."""

    name = "Q"

    def __call__(self, s: Structure, x: Fiber, y: Fiber, z: Fiber) -> bool:
        return eval_Q(s, x, y, z)

    def to_json(self):
        return {"theta": "Q"}


@dataclass(frozen=True)
class TwistedTheta:
    """theta'(x, y, z) = theta(x.s12, y.s23, z.s13), roles a1->a2, a2->a3, a1->a3."""

    base: object
    flips: tuple  # (s12, s23, s13) as bits

    @property
    def name(self) -> str:
        return f"{self.base.name}~{''.join(map(str, self.flips))}"

    def __call__(self, s: Structure, x: Fiber, y: Fiber, z: Fiber) -> bool:
        f12, f23, f13 = self.flips
        return self.base(s, _act(x, f12), _act(y, f23), _act(z, f13))

    def to_json(self):
        return {"theta": self.base.to_json(), "flips": list(self.flips)}


def _act(f: Fiber, bit: int) -> Fiber:
    return f.flipped() if bit else f


def _fiber_of(a: int, b: int, d: int) -> Fiber:
    return fiber(a, b, d)


@dataclass(frozen=True)
class SymmetricWitness:
    objects: tuple  # (a1, a2, a3)
    fibers: tuple  # (f12, f23, f13)
    theta: object
    full: bool
    clauses: Mapping = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"objects": list(self.objects), "fibers": [list(f) for f in self.fibers],
                "theta": self.theta.to_json(), "full": self.full, "clauses": dict(self.clauses)}


def _same_type(s: Structure, a, fa: Fiber, b, fb: Fiber) -> bool:
    """tp(a_i a_j f) = tp(b_i b_j g): an elementary map between the 2-vertex closed sets exists."""
    from .embedding import PartialMap, is_elementary

    (a1, a2), (b1, b2) = a, b
    m = PartialMap({a1: b1, a2: b2}, {pair(a1, a2): fa.parity ^ fb.parity})
    return is_elementary(m, s) and m(fa) == fb


def witness_clauses(s: Structure, objects, fibers, theta) -> dict:
    """Evaluate every witness clause; ``full`` is the isolation clause by orbit equality."""
    a1, a2, a3 = objects
    f12, f23, f13 = fibers
    out = {}
    out["in_closure"] = (f12.pair == pair(a1, a2) and f23.pair == pair(a2, a3) and f13.pair == pair(a1, a3))
    if not out["in_closure"]:
        return {**out, "not_definable": False, "same_types": False, "theta_unique": False, "full": False}
    out["not_definable"] = f12 not in dcl(s, [Vertex(a1), Vertex(a2)])
    out["same_types"] = (_same_type(s, (a1, a2), f12, (a2, a3), f23)
                         and _same_type(s, (a1, a2), f12, (a1, a3), f13))
    holds = theta(s, f12, f23, f13)
    unique = holds and not any(
        theta(s, *(f.flipped() if i == k else f for i, f in enumerate(fibers))) for k in range(3))
    out["theta_unique"] = unique
    small = aut_group(s, Substructure.closed([a1, a2]), [Vertex(a1), Vertex(a2)])
    big = aut_group(s, Substructure.closed([a1, a2]),
                    list(Substructure.closed([a1]).elements() | Substructure.closed([a2]).elements()))
    out["full"] = small.orbit(f12) == big.orbit(f12)
    return out


def make_witness(s: Structure, objects, fibers, theta=None) -> SymmetricWitness:
    theta = QTheta() if theta is None else theta
    cl = witness_clauses(s, objects, fibers, theta)
    base = cl["in_closure"] and cl["not_definable"] and cl["same_types"] and cl["theta_unique"]
    if not base:
        raise InvalidInputError(f"not a symmetric witness: {cl}")
    return SymmetricWitness(tuple(objects), tuple(fibers), theta, base and cl["full"], cl)


def find_witness(s: Structure, triple, theta=None) -> SymmetricWitness | None:
    """First full symmetric witness on the triple in parity order, or None."""
    theta = QTheta() if theta is None else theta
    a1, a2, a3 = (int(v) for v in triple)
    if len({a1, a2, a3}) != 3:
        raise InvalidInputError("witness needs three distinct (independent) vertices")
    for v in (a1, a2, a3):
        if v not in s.vertex_set:
            raise InvalidInputError(f"{v} is not a vertex")
    if s.status(tuple(sorted((a1, a2, a3)))) is ABSENT:
        return None
    for d12, d23, d13 in product((0, 1), repeat=3):
        fibers = (_fiber_of(a1, a2, d12), _fiber_of(a2, a3, d23), _fiber_of(a1, a3, d13))
        cl = witness_clauses(s, (a1, a2, a3), fibers, theta)
        if all(cl.values()):
            return SymmetricWitness((a1, a2, a3), fibers, theta, True, cl)
    return None


@dataclass(frozen=True, eq=False)
class FiniteGroupoid:
    structure: Structure
    objects: tuple
    theta: object
    table: Mapping  # (g, f) -> g o f, for f: a -> b, g: b -> c

    def mor(self, a, b) -> list:
        return [(a, b, 0), (a, b, 1)]

    def morphisms(self) -> list:
        return [(a, b, d) for a in self.objects for b in self.objects for d in (0, 1)]

    def identity(self, a):
        return (a, a, 0)

    def inverse(self, f):
        a, b, d = f
        return (b, a, d)

    def compose(self, g, f):
        """g o f; f: a -> b, g: b -> c."""
        try:
            return self.table[g, f]
        except KeyError:
            raise InvalidInputError(f"morphisms {f} and {g} are not composable") from None

    def law_violations(self) -> list:
        """Associativity, identity and inverse laws, checked exhaustively."""
        out = []
        objs = self.objects
        for f in self.morphisms():
            a, b, _ = f
            if self.compose(f, self.identity(a)) != f or self.compose(self.identity(b), f) != f:
                out.append(("identity", f))
            inv = self.inverse(f)
            if self.compose(inv, f) != self.identity(a) or self.compose(f, inv) != self.identity(b):
                out.append(("inverse", f))
        for a, b, c, d in product(objs, repeat=4):
            for x, y, z in product((0, 1), repeat=3):
                f, g, h = (a, b, x), (b, c, y), (c, d, z)
                if self.compose(h, self.compose(g, f)) != self.compose(self.compose(h, g), f):
                    out.append(("associativity", f, g, h))
        return out

    def to_json(self) -> dict:
        rows = [{"f": list(f), "g": list(g), "gf": list(self.table[g, f])}
                for (g, f) in sorted(self.table, key=lambda gf: (gf[1], gf[0]))]
        return {"objects": list(self.objects), "theta": self.theta.to_json(), "composition": rows}


def build_groupoid(w: SymmetricWitness, s: Structure) -> FiniteGroupoid:
    """Groupoid on all vertices with composition read off theta; laws verified before return."""
    if not w.full:
        raise InvalidInputError("groupoid construction needs a full witness")
    objs = tuple(s.vertices)
    table = {}
    for a, b, c in product(objs, repeat=3):
        for x, y in product((0, 1), repeat=2):
            f, g = (a, b, x), (b, c, y)
            if a == b or b == c or a == c:
                table[g, f] = (a, c, x ^ y)
                continue
            fx, gy = _fiber_of(a, b, x), _fiber_of(b, c, y)
            hs = [z for z in (0, 1) if w.theta(s, fx, gy, _fiber_of(a, c, z))]
            if len(hs) != 1:
                raise InternalInvariantError(f"theta does not define a composite of {f} and {g}")
            table[g, f] = (a, c, hs[0])
    g = FiniteGroupoid(s, objs, w.theta, table)
    bad = g.law_violations()
    if bad:
        raise InternalInvariantError(f"groupoid law fails ({bad[0][0]} at {bad[0][1:]}): non-witness input")
    return g


def theta_matches_composition(g: FiniteGroupoid) -> list:
    """Triples (f_ab, f_bc, f_ac) where theta and composition disagree, over distinct objects."""
    out = []
    s = g.structure
    for a, b, c in permutations(g.objects, 3):
        for x, y, z in product((0, 1), repeat=3):
            holds = g.theta(s, _fiber_of(a, b, x), _fiber_of(b, c, y), _fiber_of(a, c, z))
            if holds != (g.compose((b, c, y), (a, b, x)) == (a, c, z)):
                out.append(((a, b, x), (b, c, y), (a, c, z)))
    return out


def coherence_violations(g: FiniteGroupoid) -> list:
    """Four-object coherence of theta, over all ordered quadruples of distinct objects."""
    out = []
    s = g.structure
    th = g.theta
    for d, a, b, c in permutations(g.objects, 4):
        for bits in product((0, 1), repeat=6):
            da, ab, db, bc, dc, ac = (
                _fiber_of(d, a, bits[0]), _fiber_of(a, b, bits[1]), _fiber_of(d, b, bits[2]),
                _fiber_of(b, c, bits[3]), _fiber_of(d, c, bits[4]), _fiber_of(a, c, bits[5]))
            if th(s, da, ab, db) and th(s, db, bc, dc) and th(s, da, ac, dc) and not th(s, ab, bc, ac):
                out.append((d, a, b, c, bits))
    return out


@dataclass(frozen=True, eq=False)
class BindingGroup:
    base: object
    elements: tuple  # loops at the base object; element i is class i
    table: Mapping  # (i, j) -> index of class i o class j
    reps: Mapping  # (i, object) -> loop representing class i at object
    groupoid: FiniteGroupoid

    @property
    def order(self) -> int:
        return len(self.elements)

    @property
    def identity(self) -> int:
        return self.elements.index(self.groupoid.identity(self.base))

    def is_abelian(self) -> bool:
        return all(self.table[i, j] == self.table[j, i] for i in range(self.order) for j in range(i))

    def right(self, f, i):
        """f.sigma = f o sigma_a for f: a -> b."""
        return self.groupoid.compose(f, self.reps[i, f[0]])

    def left(self, i, f):
        """sigma.f = sigma_b o f for f: a -> b."""
        return self.groupoid.compose(self.reps[i, f[1]], f)

    def law_violations(self) -> list:
        g = self.groupoid
        out = []
        idx = range(self.order)
        for i in idx:
            for f in g.morphisms():
                if self.left(i, f) != self.right(f, i):
                    out.append(("left=right", i, f))
        for f in g.morphisms():
            for h in g.morphisms():
                if f[1] != h[0]:
                    continue
                for i in idx:
                    if self.right(g.compose(h, f), i) != g.compose(h, self.right(f, i)):
                        out.append(("compose", i, f, h))
            for i, j in product(idx, repeat=2):
                if self.right(f, self.table[i, j]) != self.right(self.right(f, i), j):
                    out.append(("product", i, j, f))
        return out

    def to_json(self) -> dict:
        return {"base": self.base, "order": self.order, "abelian": self.is_abelian(),
                "elements": [list(e) for e in self.elements],
                "table": [[self.table[i, j] for j in range(self.order)] for i in range(self.order)]}


def binding_group(g: FiniteGroupoid) -> BindingGroup:
    """Classes of vertex groups under conjugation, with both actions; the action laws are verified."""
    objs = g.objects
    if not objs:
        raise InvalidInputError("empty groupoid")
    a0 = objs[0]
    loops = g.mor(a0, a0)
    reps = {}
    for i, sigma in enumerate(loops):
        for b in objs:
            conj = {g.compose(f, g.compose(sigma, g.inverse(f))) for f in g.mor(a0, b)}
            if len(conj) != 1:
                raise InvalidInputError(f"conjugation class depends on the morphism {a0}->{b}: groupoid not abelian")
            reps[i, b] = conj.pop()
    for b, c in product(objs, repeat=2):
        for i in range(len(loops)):
            conj = {g.compose(f, g.compose(reps[i, b], g.inverse(f))) for f in g.mor(b, c)}
            if conj != {reps[i, c]}:
                raise InvalidInputError(f"conjugation from {b} to {c} is not well defined: groupoid not abelian")
    table = {(i, j): loops.index(g.compose(loops[i], loops[j]))
             for i in range(len(loops)) for j in range(len(loops))}
    bg = BindingGroup(a0, tuple(loops), table, reps, g)
    bad = bg.law_violations()
    if bad:
        raise InternalInvariantError(f"binding group action law fails: {bad[0]}")
    return bg


@dataclass(frozen=True)
class CriterionVerdict:
    hypothesis: bool
    conclusion: bool

    @property
    def implication(self) -> bool:
        return (not self.hypothesis) or self.conclusion

    def to_json(self) -> dict:
        return {"hypothesis": self.hypothesis, "conclusion": self.conclusion, "implication": self.implication}


def check_abelian_criterion(g: FiniteGroupoid, a, b) -> CriterionVerdict:
    """Hypothesis: Mor(a, b) is one orbit over acl(a) u acl(b). Conclusion: G_a is abelian."""
    if a == b:
        raise InvalidInputError("the criterion needs two distinct objects")
    s = g.structure
    fixed = list(Substructure.closed([a]).elements() | Substructure.closed([b]).elements())
    grp = aut_group(s, Substructure.closed([a, b]), fixed)
    fibers = {_fiber_of(a, b, d) for d in (0, 1)}
    hyp = grp.orbit(_fiber_of(a, b, 0)) == fibers
    loops = g.mor(a, a)
    concl = all(g.compose(x, y) == g.compose(y, x) for x in loops for y in loops)
    return CriterionVerdict(hyp, concl)


def _regular(points, perms: Mapping) -> tuple | None:
    for x in points:
        for y in points:
            hits = [k for k, p in perms.items() if p[x] == y]
            if len(hits) != 1:
                return (x, y)
    return None


def check_commuting_regular_actions(points, act1: Mapping, act2: Mapping, base=None) -> dict:
    """Isomorphism G -> H induced by commuting regular actions on ``points``.

    ``act1`` and ``act2`` map group labels to permutations given as dicts
    point -> point. With base point x0, g goes to the unique h with
    h(g(x0)) = x0; this map is a homomorphism for composition of
    permutations.
    """
    points = list(points)
    pset = set(points)
    for name, act in (("first", act1), ("second", act2)):
        for k, p in act.items():
            if set(p) != pset or set(p.values()) != pset:
                raise InvalidInputError(f"{name} action: {k!r} is not a permutation of the set")
        bad = _regular(points, act)
        if bad is not None:
            raise InvalidInputError(f"{name} action is not regular at the pair {bad}")
    for g, p in act1.items():
        for h, q in act2.items():
            if any(p[q[x]] != q[p[x]] for x in points):
                raise InvalidInputError(f"actions do not commute at the pair ({g!r}, {h!r})")

    def label(act, perm):
        return next(k for k, p in act.items() if p == perm)

    x0 = points[0] if base is None else base
    iso = {}
    for g, p in act1.items():
        y = p[x0]
        iso[g] = next(h for h, q in act2.items() if q[y] == x0)
    if len(set(iso.values())) != len(iso):
        raise InternalInvariantError("induced map is not injective")
    for g1, p1 in act1.items():
        for g2, p2 in act1.items():
            prod1 = {x: p1[p2[x]] for x in points}
            prod2 = {x: act2[iso[g1]][act2[iso[g2]][x]] for x in points}
            if act2[iso[label(act1, prod1)]] != prod2:
                raise InternalInvariantError("induced map is not a homomorphism")
    return iso


def binding_vs_automorphisms(bg: BindingGroup, a1, a2) -> dict:
    """Binding group and Aut(f12 / a1 a2), both acting on the fibers over a1 a2."""
    g = bg.groupoid
    s = g.structure
    points = [_fiber_of(a1, a2, d) for d in (0, 1)]
    as_fiber = {m: _fiber_of(a1, a2, m[2]) for m in g.mor(a1, a2)}
    back = {v: k for k, v in as_fiber.items()}
    act1 = {i: {x: as_fiber[bg.right(back[x], i)] for x in points} for i in range(bg.order)}
    grp = aut_group(s, Substructure.closed([a1, a2]), [Vertex(a1), Vertex(a2)])
    act2 = {k: {x: m(x) for x in points} for k, m in enumerate(grp.carrier)}
    return check_commuting_regular_actions(points, act1, act2)


@dataclass(frozen=True)
class TwistResult:
    witness: SymmetricWitness
    groupoid: FiniteGroupoid
    isomorphism: Mapping  # morphism of the original groupoid -> morphism of the twisted one


def groupoid_isomorphism(g: FiniteGroupoid, h: FiniteGroupoid) -> dict | None:
    """Identity on objects, (a, b, d) -> (a, b, d + t_ab) with t solved over GF(2); verified."""
    if g.objects != h.objects:
        return None
    objs = g.objects
    prs = [pair(a, b) for a, b in combinations(objs, 2)]
    idx = {p: i for i, p in enumerate(prs)}
    system = GF2System(len(prs))
    for a, b, c in permutations(objs, 3):
        k1 = g.compose((b, c, 0), (a, b, 0))[2]
        k2 = h.compose((b, c, 0), (a, b, 0))[2]
        mask = (1 << idx[pair(a, b)]) ^ (1 << idx[pair(b, c)]) ^ (1 << idx[pair(a, c)])
        if not system.add(mask, k1 ^ k2):
            return None
    x = system.solution()
    tau = {p: (x >> i) & 1 for p, i in idx.items()}
    phi = {}
    for a, b, d in g.morphisms():
        phi[a, b, d] = (a, b, d) if a == b else (a, b, d ^ tau[pair(a, b)])
    for (gg, ff), comp in g.table.items():
        if h.compose(phi[gg], phi[ff]) != phi[comp]:
            raise InternalInvariantError("solved map does not preserve composition")
    return phi


def twist_witness(w: SymmetricWitness, sigma, s: Structure) -> TwistResult:
    """Act on the witness fibers by binding-group elements (flip bits s12, s23, s13)."""
    if not w.full:
        raise InvalidInputError("twisting needs a full witness")
    if isinstance(sigma, Mapping):
        sigma = tuple(int(sigma.get(k, 0)) for k in ("12", "23", "13"))
    sigma = tuple(int(b) & 1 for b in sigma)
    if len(sigma) != 3:
        raise InvalidInputError("sigma needs one bit per pair 12, 23, 13")
    fibers = tuple(_act(f, b) for f, b in zip(w.fibers, sigma))
    theta = w.theta if not any(sigma) else TwistedTheta(w.theta, sigma)
    tw = make_witness(s, w.objects, fibers, theta)
    if not tw.full:
        raise InternalInvariantError("twisted witness is not full")
    g = build_groupoid(w, s)
    h = build_groupoid(tw, s)
    iso = groupoid_isomorphism(g, h)
    if iso is None:
        raise InternalInvariantError("no isomorphism between the original and twisted groupoids")
    return TwistResult(tw, h, iso)


@dataclass(frozen=True)
class TowerStage:
    a: int
    b: int
    c: int
    points: tuple
    group: object

    def to_json(self) -> dict:
        return {"a": self.a, "b": self.b, "c": self.c, "points": [list(p) for p in self.points],
                "group": self.group.to_json(), "abelian": self.group.is_abelian()}


def aut_tower(s: Structure, a: int, b: int, buffer: int = 2, seed: int = 0, c: int | None = None) -> TowerStage:
    """Aut of dcl(acl(a,c) u acl(b,c)) n acl(a,b) over acl(a) u acl(b), for a fresh buffer vertex c."""
    if a == b or a not in s.vertex_set or b not in s.vertex_set:
        raise InvalidInputError("aut_tower needs two distinct vertices of the structure")
    if c is None:
        if buffer < 1:
            raise InvalidInputError("buffer too small to place the third vertex")
        s, added = pad(s, buffer, derive_seed(seed, "tower"))
        c = added[0]
    elif c in (a, b) or c not in s.vertex_set:
        raise InvalidInputError("c must be a third vertex of the structure")
    gen = Substructure.closed([a, c]).elements() | Substructure.closed([b, c]).elements()
    defined = dcl(s, gen)
    points = tuple(sorted(defined & Substructure.closed([a, b]).elements(),
                          key=lambda e: (type(e).__name__, tuple(e))))
    fixed = [Vertex(a), Vertex(b)]
    group = restricted_aut_group(s, points, fixed)
    return TowerStage(a, b, c, points, group)
