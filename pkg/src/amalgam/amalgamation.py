"""Instance-level checkers for the boundary and amalgamation properties.

Quantification over the monster model is replaced by extension inside the
ambient structure padded with fresh buffer vertices; every verdict records
the buffer it used.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations, permutations, product
from typing import Mapping

from .builder import ExtensionRequest, add_vertex, derive_seed, extend_axiom4, pad, rng_for
from .embedding import (
    PartialMap,
    aut_group,
    extend_to_closure,
    is_elementary,
    max_elems,
)
from .errors import InvalidInputError, NoExtensionError, ObstructionError, ResourceLimitError
from .functors import (
    DiagramFunctor,
    IndexFamily,
    NaturalIso,
    fs,
    inclusion_functor,
    twist_top,
    validate_functor,
)
from .gf2 import GF2System
from .structure import (
    ABSENT,
    EXAMPLE1,
    EXAMPLE2,
    Structure,
    Pair,
    Substructure,
    acl,
    pair,
    triangle_pairs,
)

PASS, FAIL, SAT, UNSAT = "PASS", "FAIL", "SAT", "UNSAT"


@dataclass(frozen=True)
class Verdict:
    check: str
    status: str
    witness: object = None
    details: Mapping = field(default_factory=dict)

    @property
    def holds(self) -> bool:
        return self.status in (PASS, SAT)

    def to_json(self) -> dict:
        out = {"check": self.check, "status": self.status, "details": dict(self.details)}
        if self.witness is not None:
            out["witness"] = self.witness
        return out


def _face_closure(vs) -> Substructure:
    return Substructure.closed(vs)


def _check_vertices(s: Structure, vertices) -> tuple:
    vs = tuple(int(v) for v in vertices)
    if len(set(vs)) != len(vs):
        raise InvalidInputError(f"vertices {list(vs)} are not independent: repeated vertex")
    for v in vs:
        if v not in s.vertex_set:
            raise InvalidInputError(f"{v} is not a vertex of the structure")
    return vs


def _buffered(s: Structure, buffer: int, seed: int) -> tuple[Structure, tuple]:
    if buffer < 0:
        raise InvalidInputError("buffer must be non-negative")
    return pad(s, buffer, derive_seed(seed, "buffer"))


def _subface_union(vs) -> list:
    """Elements of the closures of all proper subsets of ``vs``."""
    out = set()
    for k in range(len(vs)):
        for sub in combinations(vs, k):
            out |= _face_closure(sub).elements()
    return sorted(out)


def check_Bn(s: Structure, vertices, buffer: int = 2, seed: int = 0) -> Verdict:
    """B(n) at one independent tuple, by the automorphism-extension criterion.

    Every automorphism of acl(v_0..v_{n-2}) fixing its subface closures must
    extend to acl(all vertices + buffer) fixing the other (n-1)-face
    closures pointwise.
    """
    vs = _check_vertices(s, vertices)
    n = len(vs)
    if n < 2:
        raise InvalidInputError("B(n) needs n >= 2")
    big, buf = _buffered(s, buffer, seed)
    face = vs[:-1]
    group = aut_group(big, _face_closure(face), _subface_union(face))
    others = set()
    for i in range(n - 1):
        others |= _face_closure(vs[:i] + vs[i + 1:]).elements()
    target = _face_closure(vs + buf)
    ident = {v: v for v in target.vertices}
    fixed_pairs = sorted(e for e in others if isinstance(e, Pair))
    details = {"n": n, "vertices": list(vs), "buffer": buffer, "buffer_vertices": list(buf),
               "group_order": group.order}
    for sigma in group.carrier:
        known = dict(sigma.shift)
        known.update({p: 0 for p in fixed_pairs})
        try:
            extend_to_closure(PartialMap(ident, known), target, big)
        except NoExtensionError as exc:
            return Verdict("bn", FAIL, {"sigma": sigma.to_json(), "triangle": list(exc.triangle)}, details)
    return Verdict("bn", PASS, None, details)


def sigma_candidates(s: Structure, u) -> list:
    """Automorphisms of acl(u) that are the identity on every proper subface closure."""
    return list(aut_group(s, _face_closure(u), _subface_union(tuple(u))).carrier)


def check_relative_uniqueness(s: Structure, k: int, vertices, maps: Mapping | None = None,
                              buffer: int = 2, seed: int = 0) -> Verdict:
    """Relative (k, n)-uniqueness at one independent n-tuple.

    ``maps`` gives sigma_u per (k-1)-subset u of the vertices (keyed by the
    sorted vertex tuple); when omitted every admissible family is tried.
    """
    vs = _check_vertices(s, vertices)
    n = len(vs)
    if not 2 <= k <= n:
        raise InvalidInputError(f"need 2 <= k <= n, got k={k}, n={n}")
    faces = [tuple(sorted(u)) for u in combinations(vs, k - 1)]
    big, buf = _buffered(s, buffer, seed)
    target = _face_closure(vs + buf)
    details = {"k": k, "n": n, "vertices": list(vs), "buffer": buffer, "buffer_vertices": list(buf)}
    if maps is not None:
        given = {tuple(sorted(int(x) for x in u)): m for u, m in maps.items()}
        if set(given) != set(faces):
            raise InvalidInputError("maps must be given for exactly the (k-1)-subsets of the vertices")
        for u, m in given.items():
            fixed = _subface_union(u)
            if m.domain != _face_closure(u) or m.image != _face_closure(u) or not is_elementary(m, s):
                raise InvalidInputError(f"sigma at {list(u)} is not an automorphism of acl({list(u)})")
            if any(m(e) != e for e in fixed):
                raise InvalidInputError(f"sigma at {list(u)} moves a proper subface closure")
        families = [tuple(given[u] for u in faces)]
        total = 1
    else:
        options = [sigma_candidates(s, u) for u in faces]
        total = 1
        for o in options:
            total *= len(o)
        if total > max_elems():
            raise ResourceLimitError(f"{total} sigma families exceed the cap")
        families = product(*options)
    details["families"] = total
    ident = {v: v for v in target.vertices}
    for fam in families:
        union = PartialMap(dict(ident), {})
        for m in fam:
            union = union.merge(PartialMap({v: v for v in m.vertex_map}, m.shift))
            if union is None:
                raise InvalidInputError("sigma maps disagree on an overlap")
        try:
            extend_to_closure(union, target, big)
        except NoExtensionError as exc:
            wit = {"family": [{"u": list(u), "map": m.to_json()} for u, m in zip(faces, fam)],
                   "triangle": list(exc.triangle)}
            return Verdict("rel-uniq", FAIL, wit, details)
    return Verdict("rel-uniq", PASS, None, details)


def check_uniqueness(a: DiagramFunctor, b: DiagramFunctor, base_iso: NaturalIso | None = None) -> Verdict:
    """Two solutions over isomorphic problems: is the union of face transfers elementary?"""
    for f in (a, b):
        if not f.index.is_full:
            raise InvalidInputError("uniqueness compares solutions on P(n)")
    if a.n != b.n:
        raise InvalidInputError("solutions have different n")
    if base_iso is None:
        base_iso = NaturalIso.identity(a.minus(), b.minus())
    problems = base_iso.check()
    if problems:
        raise InvalidInputError("base isomorphism invalid: " + "; ".join(problems[:3]))
    top = a.index.top
    union = PartialMap({}, {})
    for face in sorted((top - {i} for i in range(a.n)), key=sorted):
        piece = b.transitions[face, top].compose(base_iso.components[face]).compose(a.transitions[face, top].inverse())
        merged = union.merge(piece)
        if merged is None:
            return Verdict("uniqueness", FAIL, {"reason": "face transfers disagree", "face": sorted(face)},
                           {"n": a.n})
        union = merged
    details = {"n": a.n, "domain_vertices": sorted(union.vertex_map)}
    target = Substructure.closed(union.vertex_map)
    try:
        extend_to_closure(union, target, a.ambient, b.ambient)
    except NoExtensionError as exc:
        return Verdict("uniqueness", FAIL, {"triangle": list(exc.triangle), "map": union.to_json()}, details)
    return Verdict("uniqueness", PASS, None, details)


def one_side_twisted_pair(s: Structure, triple, face=(0, 1)) -> tuple[DiagramFunctor, DiagramFunctor]:
    """Untwisted solution on acl(triple) and its copy with the face transition flipped."""
    a = inclusion_functor(s, triple)
    face = fs(face)
    dom = a.assignment[face]
    if len(triple) != 3 or len(face) != 2:
        raise InvalidInputError("one-side twist expects a triple and a 2-element face")
    flip = PartialMap({v: v for v in dom.vertices}, {p: 1 for p in dom.pairs})
    return a, twist_top(a, face, flip)


# ---- n-existence -----------------------------------------------------------

@dataclass
class _Slots:
    """Vertices of a(n) as (index, source vertex) slots, with face coordinates."""

    slots: list
    where: dict  # (face, vertex of a(face)) -> slot index
    faces: list


def _slots(problem: DiagramFunctor) -> _Slots:
    n = problem.n
    empty = frozenset()
    slots = [(None, v) for v in sorted(problem.assignment[empty].vertices)]
    for i in range(n):
        si = frozenset({i})
        img0 = problem.image(empty, si).vertices
        slots.extend((i, v) for v in sorted(problem.assignment[si].vertices - img0))
    faces = [f for f in problem.index.ordered() if len(f) == n - 1]
    where = {}
    for face in faces:
        seen = {}
        for k, (i, v) in enumerate(slots):
            if i is None:
                w = problem.transition(empty, face).vertex_map[v]
            elif i in face:
                w = problem.transition(frozenset({i}), face).vertex_map[v]
            else:
                continue
            if w in seen:
                raise InvalidInputError(f"problem is not independent at face {sorted(face)}")
            seen[w] = k
        if problem.assignment[face].vertices - set(seen):
            raise InvalidInputError(f"problem is not closed at face {sorted(face)}")
        for w, k in seen.items():
            where[face, w] = k
    return _Slots(slots, where, faces)


@dataclass(frozen=True)
class ExistenceResult:
    status: str
    solution: DiagramFunctor | None
    structure: Structure | None
    fresh: int
    placement: tuple
    reason: str = ""
    budget: int = 0

    def verdict(self) -> Verdict:
        details = {"budget": self.budget, "fresh_vertices": self.fresh, "reason": self.reason}
        wit = None
        if self.solution is not None:
            top = self.solution.index.top
            details["placement"] = list(self.placement)
            wit = {"top": sorted(self.solution.assignment[top].vertices),
                   "maps": [{"face": sorted(s), "map": self.solution.transitions[s, top].to_json()}
                            for s in self.solution.index.ordered() if s != top and len(s) == len(top) - 1]}
        return Verdict("existence", self.status, wit, details)


class _ExistenceSystem:
    """Static GF(2) data of an existence problem.

    Variables: one shift per (face, pair of a(face)), then one bit per slot
    triangle that is the image of some face triangle.
    """

    def __init__(self, problem: DiagramFunctor, sl: _Slots):
        self.problem = problem
        self.sl = sl
        amb = problem.ambient
        var = {}
        for face in sl.faces:
            for p in sorted(problem.assignment[face].pairs):
                var[face, p] = len(var)
        self.shift_vars = dict(var)
        self.required = {}  # slot triple -> status kind ("absent" or "bit")
        tri_var = {}
        eqs = []
        self.conflict = None
        for face in sl.faces:
            for t in problem.assignment[face].triangles():
                key = tuple(sorted(sl.where[face, v] for v in t))
                st = amb.status(t)
                kind = "absent" if st is ABSENT else "bit"
                prev = self.required.setdefault(key, kind)
                if prev != kind and self.conflict is None:
                    self.conflict = (face, t)
                if st is ABSENT:
                    continue
                if key not in tri_var:
                    tri_var[key] = len(var) + len(tri_var)
                mask = 1 << tri_var[key]
                for p in triangle_pairs(t):
                    mask ^= 1 << var[face, p]
                eqs.append((mask, st, ("elementarity", sorted(face), list(t))))
        for f1, f2 in combinations(sl.faces, 2):
            t = f1 & f2
            m1, m2 = problem.transition(t, f1), problem.transition(t, f2)
            for p in sorted(problem.assignment[t].pairs):
                q1 = pair(m1.vertex_map[p.a], m1.vertex_map[p.b])
                q2 = pair(m2.vertex_map[p.a], m2.vertex_map[p.b])
                mask = (1 << var[f1, q1]) ^ (1 << var[f2, q2])
                eqs.append((mask, m1.shift[p] ^ m2.shift[p], ("commutation", sorted(t), [p.a, p.b])))
        self.tri_var = tri_var
        self.nvars = len(var) + len(tri_var)
        self.system = GF2System(self.nvars)
        self.failure = None
        for mask, rhs, origin in eqs:
            if not self.system.add(mask, rhs) and self.failure is None:
                self.failure = origin

    def with_bits(self, bits: Mapping) -> tuple[GF2System, object]:
        sysc = self.system.copy()
        for key, b in bits.items():
            if key in self.tri_var and not sysc.add(1 << self.tri_var[key], b):
                return sysc, key
        return sysc, None


def _status_ok(required, placement, amb: Structure, fresh_slots) -> tuple[bool, dict]:
    """Status matching for fully placed slot triangles; returns fixed image bits."""
    bits = {}
    for key, kind in required.items():
        if any(k in fresh_slots for k in key):
            continue
        st = amb.status(tuple(sorted(placement[k] for k in key)))
        if (st is ABSENT) != (kind == "absent"):
            return False, {}
        if st is not ABSENT:
            bits[key] = st
    return True, bits


def _assemble(problem: DiagramFunctor, sl: _Slots, est: _ExistenceSystem, amb: Structure,
              placement: tuple, x: int) -> DiagramFunctor:
    n = problem.n
    top = frozenset(range(n))
    assignment = dict(problem.assignment)
    assignment[top] = Substructure.closed(placement)
    given = {}
    for face in sl.faces:
        vm = {w: placement[k] for (f, w), k in sl.where.items() if f == face}
        sh = {p: (x >> est.shift_vars[face, p]) & 1 for p in problem.assignment[face].pairs}
        given[face, top] = PartialMap(vm, sh)
    trans = dict(problem.transitions)
    for s in problem.index.ordered():
        if (s, top) in given:
            trans[s, top] = given[s, top]
        else:
            face = next(f for f in sl.faces if s < f)
            trans[s, top] = given[face, top].compose(problem.transition(s, face))
    return DiagramFunctor(IndexFamily.full(n), amb, assignment, trans)


def _realize_fresh(problem, amb: Structure, placement: list, fresh_slots: list, est: _ExistenceSystem,
                   x_bits: Mapping, seed: int) -> Structure:
    """Add one vertex per fresh slot, giving the required statuses to its triangles."""
    for k in fresh_slots:
        placed = [j for j in range(len(placement)) if placement[j] is not None and j != k]
        if amb.flavor == EXAMPLE1:
            anchors = [placement[j] for j in placed]
            pattern = set()
            for i, j in combinations(range(len(placed)), 2):
                key = tuple(sorted((k, placed[i], placed[j])))
                if x_bits.get(key, 0) == 0:
                    pattern.add((i, j))
            req = ExtensionRequest.make(anchors, {}, pattern)
            ext = extend_axiom4(amb, req, seed=derive_seed(seed, "fresh", k), all_zero=True)
            amb, v = ext.structure, ext.vertex
        else:
            statuses = {}
            for i, j in combinations(placed, 2):
                key = tuple(sorted((k, i, j)))
                statuses[placement[i], placement[j]] = 0 if est.required.get(key) == "bit" else ABSENT
            amb, v = add_vertex(amb, statuses, seed=derive_seed(seed, "fresh", k))
        placement[k] = v
    return amb


def solve_existence(problem: DiagramFunctor, budget: int = 2, seed: int = 0) -> ExistenceResult:
    """Search for a(n) and face transitions commuting with the problem.

    Placements of the slots on ambient vertices are tried in vertex order,
    first with no fresh vertex, then with fresh vertices for the last slots,
    up to ``budget`` of them. Example1 fresh vertices come from the
    extension axiom; example2 ones from plain vertex addition.
    """
    if problem.n < 2 or problem.index != IndexFamily.proper(problem.n):
        raise InvalidInputError("existence takes a problem on the proper subsets of n, n >= 2")
    rep = validate_functor(problem)
    if not (rep.functorial and rep.elementary and rep.closed and rep.independent):
        raise InvalidInputError("problem is not a closed independent functor: " + "; ".join(rep.problems[:3]))
    amb = problem.ambient
    sl = _slots(problem)
    est = _ExistenceSystem(problem, sl)
    nslots = len(sl.slots)
    if est.conflict is not None:
        return ExistenceResult(UNSAT, None, None, 0, (), f"faces demand different statuses at {est.conflict}",
                               budget)
    if est.failure is not None:
        return ExistenceResult(UNSAT, None, None, 0, (),
                               f"face equations inconsistent for every placement: {est.failure}", budget)
    if amb.flavor == EXAMPLE2:
        forced = {key: 0 for key, kind in est.required.items() if kind == "bit"}
        _, bad = est.with_bits(forced)
        if bad is not None:
            return ExistenceResult(UNSAT, None, None, 0, (),
                                   "example2 image triangles all carry bit 0, and the face twists "
                                   f"then have odd total parity (first clash at slot triangle {list(bad)}); "
                                   "infeasible for every placement and any number of fresh vertices", budget)
    verts = list(amb.vertices)
    count = 0
    cap = max_elems()
    for nfresh in range(0, min(budget, nslots) + 1):
        fresh_choices = sorted(combinations(range(nslots), nfresh), key=lambda c: tuple(-i for i in reversed(c)))
        for fresh in fresh_choices:
            placed = [k for k in range(nslots) if k not in fresh]
            for pick in permutations(verts, len(placed)):
                count += 1
                if count > cap:
                    raise ResourceLimitError(f"more than {cap} placements tried")
                placement = [None] * nslots
                for k, v in zip(placed, pick):
                    placement[k] = v
                ok, bits = _status_ok(est.required, placement, amb, set(fresh))
                if not ok:
                    continue
                if amb.flavor == EXAMPLE2:
                    bits.update({key: 0 for key, kind in est.required.items()
                                 if kind == "bit" and any(k in fresh for k in key)})
                system, bad = est.with_bits(bits)
                if bad is not None:
                    continue
                x = system.solution()
                tri_bits = {key: (x >> i) & 1 for key, i in est.tri_var.items()}
                new_amb = _realize_fresh(problem, amb, placement, list(fresh), est, tri_bits,
                                         derive_seed(seed, "existence"))
                sol = _assemble(problem, sl, est, new_amb, tuple(placement), x)
                rep = validate_functor(sol)
                if not (rep.functorial and rep.elementary and rep.closed and rep.independent):
                    raise InvalidInputError("assembled solution failed validation: " + "; ".join(rep.problems[:3]))
                return ExistenceResult(SAT, sol, new_amb, nfresh, tuple(placement), "", budget)
    return ExistenceResult(UNSAT, None, None, 0, (), f"no placement with at most {budget} fresh vertices", budget)


def blocked_problem(ambient: Structure, t: tuple, twist_parity: int = 1) -> DiagramFunctor:
    """Problem on P-(4) whose faces all sit on the triangle ``t``.

    a(s) places the elements of s on t in increasing order; the edge-to-face
    transitions carry flips whose total parity is ``twist_parity``.
    """
    t = tuple(sorted(t))
    index = IndexFamily.proper(4)
    place = {s: {i: t[r] for r, i in enumerate(sorted(s))} for s in index.sets}
    assignment = {s: Substructure.closed(place[s].values()) for s in index.sets}
    given = {}
    flips_left = twist_parity & 1
    for s, u in index.covering_pairs():
        vm = {place[s][i]: place[u][i] for i in s}
        sh = {}
        for p in assignment[s].pairs:
            sh[p] = flips_left
            flips_left = 0
        given[s, u] = PartialMap(vm, sh)
    return DiagramFunctor.build(index, ambient, assignment, given)


# ---- k-skeletal extension --------------------------------------------------

def skeletal_value(f: DiagramFunctor, u, k: int) -> Substructure:
    """Union of the closures of the images of the <=k-subsets of u inside a(u)."""
    u = fs(u)
    out = Substructure(frozenset(), frozenset())
    for size in range(min(k, len(u)) + 1):
        for v in combinations(sorted(u), size):
            img = f.image(frozenset(v), u)
            out = out.union(acl(f.ambient, img.elements()) if img.vertices else img)
    return out


def is_skeletal(f: DiagramFunctor, k: int) -> bool:
    rep = validate_functor(f)
    if not (rep.functorial and rep.independent):
        return False
    return all(f.assignment[u] == skeletal_value(f, u, k) for u in f.index.sets)


@dataclass(frozen=True)
class SkeletalSpec:
    k: int
    functor: DiagramFunctor

    def check(self) -> bool:
        return is_skeletal(self.functor, self.k)


def extend_skeletal(spec: SkeletalSpec) -> SkeletalSpec:
    """Lift a (k-1)-skeletal functor to a k-skeletal one with the same vertex data.

    New values are the k-skeletal closures. The shifts of the new pairs in
    every transition are unknowns; elementarity gives one equation per
    triangle and functoriality one per pair and composable triple. The
    system is solved exactly, stage by stage in the order of the size of the
    target face; the first inconsistent equation is reported as the
    obstruction.
    """
    f, k = spec.functor, spec.k + 1
    if not spec.check():
        raise InvalidInputError(f"input is not {spec.k}-skeletal")
    values = {u: skeletal_value(f, u, k) for u in f.index.sets}
    if all(values[u] == f.assignment[u] for u in f.index.sets):
        return SkeletalSpec(k, f)
    pairs_ = f.index.strict_pairs()
    var = {}
    for s, t in pairs_:
        for p in sorted(values[s].pairs - f.assignment[s].pairs):
            var[s, t, p] = len(var)
    system = GF2System(len(var))

    def term(s, t, p):
        """(mask, constant) for the shift of the new transition s->t at pair p."""
        if (s, t, p) in var:
            return 1 << var[s, t, p], 0
        return 0, f.transitions[s, t].shift[p]

    order = sorted(pairs_, key=lambda st: (len(st[1]), sorted(st[1]), len(st[0]), sorted(st[0])))
    for s, t in order:
        vm = f.transitions[s, t].vertex_map
        for tri in values[s].triangles():
            img = tuple(sorted(vm[v] for v in tri))
            a, b = f.ambient.status(tri), f.ambient.status(img)
            if (a is ABSENT) != (b is ABSENT):
                raise ObstructionError(f"transition {sorted(s)}->{sorted(t)} cannot preserve the status of {tri}",
                                       face=sorted(t), triangle=tri)
            if a is ABSENT:
                continue
            mask, rhs = 0, a ^ b
            for p in triangle_pairs(tri):
                m, c = term(s, t, p)
                mask ^= m
                rhs ^= c
            if not system.add(mask, rhs):
                raise ObstructionError(
                    f"no correction at face {sorted(t)}: triangle {list(tri)} from {sorted(s)} is forced to flip",
                    face=sorted(t), triangle=tri)
        for w in f.index.ordered():
            if not t < w:
                continue
            for p in sorted(values[s].pairs):
                q = pair(vm[p.a], vm[p.b])
                m1, c1 = term(s, t, p)
                m2, c2 = term(t, w, q)
                m3, c3 = term(s, w, p)
                if not system.add(m1 ^ m2 ^ m3, c1 ^ c2 ^ c3):
                    raise ObstructionError(
                        f"no correction at face {sorted(w)}: pair {tuple(p)} of a({sorted(s)}) "
                        f"cannot commute through {sorted(t)}", face=sorted(w), triangle=None)
    x = system.solution()
    trans = {}
    for s, t in pairs_:
        old = f.transitions[s, t]
        sh = dict(old.shift)
        for p in values[s].pairs - f.assignment[s].pairs:
            sh[p] = (x >> var[s, t, p]) & 1
        trans[s, t] = PartialMap(dict(old.vertex_map), sh)
    g = DiagramFunctor(f.index, f.ambient, values, trans)
    return SkeletalSpec(k, g)


def skeletal_problem(s: Structure, n: int, seed: int) -> DiagramFunctor:
    """1-skeletal problem on P-(n): independent random vertex placements for every index set."""
    if len(s.vertices) < n - 1:
        raise InvalidInputError("ambient structure too small for the problem")
    rng = rng_for(seed, "skeletal", n)
    index = IndexFamily.proper(n)
    place = {u: dict(zip(sorted(u), rng.sample(list(s.vertices), len(u)))) for u in index.ordered()}
    values = {u: Substructure(frozenset(place[u].values()), frozenset()) for u in index.sets}
    trans = {(a, b): PartialMap({place[a][i]: place[b][i] for i in a}, {}) for a, b in index.strict_pairs()}
    return DiagramFunctor(index, s, values, trans)
