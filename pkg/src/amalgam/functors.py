"""Functors from downward-closed families of subsets of n into closed sets.

A functor assigns a substructure of one ambient structure to every index set
and an elementary map to every strict inclusion. Transitions are stored for
all strict inclusions; builders fill missing covering steps with inclusions
and compose the rest.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import combinations
from pathlib import Path
from typing import Iterable, Mapping

from .builder import rng_for
from .embedding import PartialMap, is_elementary
from .errors import InvalidInputError, UnsupportedError
from .gf2 import GF2System
from .structure import Structure, Substructure, acl, is_independent, pair, triangle_pairs


def set_key(s: frozenset) -> tuple:
    return (len(s), tuple(sorted(s)))


def fs(xs: Iterable[int]) -> frozenset:
    return frozenset(int(x) for x in xs)


@dataclass(frozen=True)
class IndexFamily:
    n: int
    sets: frozenset

    def __post_init__(self):
        universe = frozenset(range(self.n))
        for s in self.sets:
            if not s <= universe:
                raise InvalidInputError(f"index set {sorted(s)} is not a subset of {self.n}")
            for k in range(len(s)):
                for sub in combinations(sorted(s), k):
                    if frozenset(sub) not in self.sets:
                        raise InvalidInputError(f"family not closed under subsets: {sorted(s)} without {list(sub)}")

    @classmethod
    def full(cls, n: int) -> IndexFamily:
        return cls(n, frozenset(frozenset(c) for k in range(n + 1) for c in combinations(range(n), k)))

    @classmethod
    def proper(cls, n: int) -> IndexFamily:
        return cls(n, frozenset(frozenset(c) for k in range(n) for c in combinations(range(n), k)))

    @classmethod
    def upto(cls, n: int, size: int) -> IndexFamily:
        return cls(n, frozenset(frozenset(c) for k in range(min(size, n) + 1) for c in combinations(range(n), k)))

    @property
    def top(self) -> frozenset:
        return frozenset(range(self.n))

    @property
    def is_full(self) -> bool:
        return self.top in self.sets

    def ordered(self) -> list:
        return sorted(self.sets, key=set_key)

    def strict_pairs(self) -> list:
        order = self.ordered()
        return [(s, t) for t in order for s in order if s < t]

    def covering_pairs(self) -> list:
        return [(s, t) for s, t in self.strict_pairs() if len(t) == len(s) + 1]

    def maximal(self) -> list:
        return [s for s in self.ordered() if not any(s < t for t in self.sets)]

    def __contains__(self, s) -> bool:
        return frozenset(s) in self.sets

    def to_json(self):
        if self == IndexFamily.full(self.n):
            return "full"
        if self == IndexFamily.proper(self.n):
            return "proper"
        return [sorted(s) for s in self.ordered()]

    @classmethod
    def from_json(cls, n: int, data) -> IndexFamily:
        if data == "full":
            return cls.full(n)
        if data == "proper":
            return cls.proper(n)
        try:
            return cls(n, frozenset(fs(s) for s in data))
        except TypeError as exc:
            raise InvalidInputError(f"bad index family: {exc}") from exc


def inclusion(sub: Substructure) -> PartialMap:
    return PartialMap.identity(sub)


@dataclass(frozen=True, eq=False)
class DiagramFunctor:
    index: IndexFamily
    ambient: Structure
    assignment: Mapping  # frozenset -> Substructure
    transitions: Mapping  # (frozenset, frozenset) -> PartialMap, every strict inclusion

    @classmethod
    def build(cls, index: IndexFamily, ambient: Structure, assignment: Mapping,
              given: Mapping | None = None) -> DiagramFunctor:
        """Fill covering transitions missing from ``given`` with inclusions; compose the rest."""
        assignment = {fs(s): v for s, v in assignment.items()}
        for s in index.sets:
            if s not in assignment:
                raise InvalidInputError(f"no value assigned to {sorted(s)}")
        extra = set(assignment) - set(index.sets)
        if extra:
            raise InvalidInputError(f"values assigned outside the index family: {sorted(map(sorted, extra))}")
        for s, v in assignment.items():
            for x in v.vertices:
                if x not in ambient.vertex_set:
                    raise InvalidInputError(f"value at {sorted(s)} uses vertex {x} outside the ambient structure")
        trans = {}
        given = {(fs(s), fs(t)): m for (s, t), m in (given or {}).items()}
        for s, t in given:
            if not (s < t and s in index.sets and t in index.sets):
                raise InvalidInputError(f"transition {sorted(s)} -> {sorted(t)} is not a strict inclusion in the family")
        for s, t in index.strict_pairs():
            if (s, t) in given:
                trans[s, t] = given[s, t]
            elif len(t) == len(s) + 1:
                trans[s, t] = inclusion(assignment[s])
        for s, t in sorted(index.strict_pairs(), key=lambda st: len(st[1]) - len(st[0])):
            if (s, t) in trans:
                continue
            mid = s | {min(t - s)}
            trans[s, t] = trans[mid, t].compose(trans[s, mid])
        return cls(index, ambient, assignment, trans)

    @property
    def n(self) -> int:
        return self.index.n

    def transition(self, s, t) -> PartialMap:
        s, t = fs(s), fs(t)
        if s == t:
            return inclusion(self.assignment[s])
        try:
            return self.transitions[s, t]
        except KeyError:
            raise InvalidInputError(f"no transition {sorted(s)} -> {sorted(t)}") from None

    def image(self, s, t) -> Substructure:
        """The set written a_t(s): the image of a(s) inside a(t)."""
        return self.transition(s, t).image

    def restrict(self, index: IndexFamily) -> DiagramFunctor:
        if not index.sets <= self.index.sets:
            raise InvalidInputError("restriction to a family outside the domain")
        return DiagramFunctor(index, self.ambient, {s: self.assignment[s] for s in index.sets},
                              {(s, t): self.transitions[s, t] for s, t in index.strict_pairs()})

    def minus(self) -> DiagramFunctor:
        """Restriction to the proper subsets of n."""
        return self.restrict(IndexFamily.proper(self.n))

    def with_transition(self, s, t, m: PartialMap) -> DiagramFunctor:
        trans = dict(self.transitions)
        trans[fs(s), fs(t)] = m
        return DiagramFunctor(self.index, self.ambient, dict(self.assignment), trans)

    def with_ambient(self, ambient: Structure) -> DiagramFunctor:
        return DiagramFunctor(self.index, ambient, dict(self.assignment), dict(self.transitions))

    def to_json(self, ambient_ref=None) -> dict:
        return {
            "n": self.n,
            "index": self.index.to_json(),
            "ambient": self.ambient.to_json() if ambient_ref is None else ambient_ref,
            "assignment": [{"s": sorted(s), **self.assignment[s].to_json()} for s in self.index.ordered()],
            "transitions": [{"from": sorted(s), "to": sorted(t), "map": self.transitions[s, t].to_json()}
                            for s, t in self.index.strict_pairs()],
        }


def load_structure(ref, base_dir: Path | None = None) -> Structure:
    if isinstance(ref, Mapping):
        return Structure.from_json(ref)
    if isinstance(ref, str):
        path = Path(ref)
        if not path.is_absolute() and base_dir is not None:
            path = base_dir / path
        try:
            return Structure.loads(path.read_text())
        except OSError as exc:
            raise InvalidInputError(f"cannot read ambient structure {ref!r}: {exc}") from exc
    raise InvalidInputError("ambient must be a structure object or a path")


def functor_from_json(data: Mapping, base_dir: Path | None = None) -> DiagramFunctor:
    """Parse a problem file. Missing covering transitions are inclusions."""
    try:
        n = int(data["n"])
        ambient = load_structure(data["ambient"], base_dir)
        assignment = {}
        for entry in data["assignment"]:
            s = fs(entry["s"])
            if s in assignment:
                raise InvalidInputError(f"duplicate assignment for {sorted(s)}")
            assignment[s] = Substructure.from_json(entry)
        if "index" in data:
            index = IndexFamily.from_json(n, data["index"])
        else:
            index = IndexFamily.full(n) if frozenset(range(n)) in assignment else IndexFamily.proper(n)
        given = {}
        for entry in data.get("transitions", []):
            given[fs(entry["from"]), fs(entry["to"])] = PartialMap.from_json(entry["map"])
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, InvalidInputError):
            raise
        raise InvalidInputError(f"malformed problem file: {exc!r}") from exc
    return DiagramFunctor.build(index, ambient, assignment, given)


def load_functor(path) -> DiagramFunctor:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except OSError as exc:
        raise InvalidInputError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"{path} is not JSON: {exc}") from exc
    return functor_from_json(data, path.parent)


@dataclass(frozen=True)
class FunctorReport:
    functorial: bool
    elementary: bool
    closed: bool
    independent: bool
    untwisted: bool
    problems: tuple = ()

    def to_json(self) -> dict:
        return {"functorial": self.functorial, "elementary": self.elementary, "closed": self.closed,
                "independent": self.independent, "untwisted": self.untwisted, "problems": list(self.problems)}


def _is_inclusion(m: PartialMap) -> bool:
    return m.is_identity


def independent_family(s: Structure, parts: list, base: Substructure) -> bool:
    """Each part is independent from the union of the others over ``base``."""
    base_el = list(base.elements())
    for i, part in enumerate(parts):
        rest = [e for j, p in enumerate(parts) if j != i for e in p.elements()]
        if not is_independent(s, list(part.elements()), rest, base_el):
            return False
    return True


def validate_functor(f: DiagramFunctor) -> FunctorReport:
    problems = []
    functorial = True
    for (s, t), m in f.transitions.items():
        dom, cod = f.assignment[s], f.assignment[t]
        if m.domain != dom:
            functorial = False
            problems.append(f"transition {sorted(s)}->{sorted(t)} is not defined exactly on a({sorted(s)})")
        elif not m.image.issubset(cod):
            functorial = False
            problems.append(f"transition {sorted(s)}->{sorted(t)} leaves a({sorted(t)})")
    if functorial:
        order = f.index.ordered()
        for s, t in f.index.strict_pairs():
            for u in order:
                if t < u and f.transitions[t, u].compose(f.transitions[s, t]) != f.transitions[s, u]:
                    functorial = False
                    problems.append(f"composition fails on {sorted(s)} < {sorted(t)} < {sorted(u)}")
    elementary = True
    for (s, t), m in f.transitions.items():
        if not is_elementary(m, f.ambient):
            elementary = False
            problems.append(f"transition {sorted(s)}->{sorted(t)} is not elementary")
    closed = True
    independent = True
    empty = frozenset()
    for s in f.index.ordered():
        value = f.assignment[s]
        if not s:
            if not value.is_closed:
                closed = False
                problems.append("a(empty) is not closed")
            continue
        parts = [f.image(frozenset({i}), s) if functorial else f.assignment[frozenset({i})] for i in sorted(s)]
        gen = acl(f.ambient, [e for p in parts for e in p.elements()])
        if value != gen:
            closed = False
            problems.append(f"a({sorted(s)}) is not the closure of its singleton images")
        base = f.image(empty, s) if functorial else f.assignment[empty]
        if functorial and not independent_family(f.ambient, parts, base):
            independent = False
            problems.append(f"singleton images in a({sorted(s)}) are not independent")
    untwisted = all(_is_inclusion(m) for m in f.transitions.values())
    return FunctorReport(functorial, elementary, closed, independent and functorial, untwisted, tuple(problems))


@dataclass(frozen=True, eq=False)
class NaturalIso:
    source: DiagramFunctor
    target: DiagramFunctor
    components: Mapping  # frozenset -> PartialMap

    def check(self) -> list:
        """Problems found: wrong domains, non-elementary components, failing squares."""
        out = []
        if self.source.index != self.target.index:
            return ["source and target have different index families"]
        for s in self.source.index.ordered():
            sig = self.components.get(s)
            if sig is None:
                out.append(f"no component at {sorted(s)}")
                continue
            if sig.domain != self.source.assignment[s] or sig.image != self.target.assignment[s]:
                out.append(f"component at {sorted(s)} is not a bijection a({sorted(s)}) -> b({sorted(s)})")
            elif not is_elementary(sig, self.source.ambient, self.target.ambient):
                out.append(f"component at {sorted(s)} is not elementary")
        if out:
            return out
        for s, t in self.source.index.strict_pairs():
            left = self.components[t].compose(self.source.transitions[s, t])
            right = self.target.transitions[s, t].compose(self.components[s])
            if left != right:
                out.append(f"square {sorted(s)}->{sorted(t)} does not commute")
        return out

    @property
    def ok(self) -> bool:
        return not self.check()

    def inverse(self) -> NaturalIso:
        return NaturalIso(self.target, self.source, {s: m.inverse() for s, m in self.components.items()})

    @classmethod
    def identity(cls, f: DiagramFunctor, g: DiagramFunctor | None = None) -> NaturalIso:
        g = f if g is None else g
        return cls(f, g, {s: inclusion(f.assignment[s]) for s in f.index.sets})

    def to_json(self) -> list:
        return [{"s": sorted(s), "map": self.components[s].to_json()} for s in self.source.index.ordered()]


def localize(f: DiagramFunctor, u) -> DiagramFunctor:
    """a|_u(s) = a(s ∪ u), with the indices of n \\ u renumbered 0..m-1 in order."""
    u = fs(u)
    if u not in f.index.sets:
        raise InvalidInputError(f"{sorted(u)} is not in the functor's domain")
    rest = sorted(set(range(f.n)) - u)
    old = {new: x for new, x in enumerate(rest)}
    lift = lambda s: frozenset(old[i] for i in s) | u  # noqa: E731
    sets = frozenset(frozenset(c) for k in range(len(rest) + 1) for c in combinations(range(len(rest)), k)
                     if lift(c) in f.index.sets)
    index = IndexFamily(len(rest), sets)
    assignment = {s: f.assignment[lift(s)] for s in sets}
    trans = {(s, t): f.transition(lift(s), lift(t)) for s, t in index.strict_pairs()}
    return DiagramFunctor(index, f.ambient, assignment, trans)


def untwist(f: DiagramFunctor) -> tuple[DiagramFunctor, NaturalIso]:
    """Replace a(s) by its image in a(n); the iso has components a_{s,n}."""
    if not f.index.is_full:
        raise UnsupportedError("untwisting needs a value at n; for problems on P-(n) this is solvability")
    top = f.index.top
    assignment = {s: (f.assignment[s] if s == top else f.image(s, top)) for s in f.index.sets}
    flat = DiagramFunctor.build(f.index, f.ambient, assignment)
    comps = {s: (inclusion(f.assignment[s]) if s == top else f.transitions[s, top]) for s in f.index.sets}
    return flat, NaturalIso(f, flat, comps)


def inclusion_functor(ambient: Structure, vertices, index: IndexFamily | None = None,
                      base: Iterable[int] = ()) -> DiagramFunctor:
    """Untwisted closed functor with a(s) = closure of base plus the vertices indexed by s."""
    vertices = [int(v) for v in vertices]
    base = set(base)
    index = IndexFamily.full(len(vertices)) if index is None else index
    assignment = {s: Substructure.closed(base | {vertices[i] for i in s}) for s in index.sets}
    return DiagramFunctor.build(index, ambient, assignment)


def twist_top(f: DiagramFunctor, face, eta: PartialMap) -> DiagramFunctor:
    """Solution whose face -> n transition is precomposed with an automorphism ``eta`` of a(face)."""
    face = fs(face)
    top = f.index.top
    if not f.index.is_full or face not in f.index.sets or len(face) != f.n - 1:
        raise InvalidInputError("twisting needs a full functor and an (n-1)-face")
    g = f.with_transition(face, top, f.transitions[face, top].compose(eta))
    return g


def random_problem(ambient: Structure, n: int, seed: int, tries: int = 200) -> DiagramFunctor:
    """Closed independent problem on P-(n) with random placements and twisted transitions.

    Every index set s gets a random injective placement of its elements; the
    covering shifts are a random solution of the elementarity and
    commutation equations.
    """
    if len(ambient.vertices) < n - 1:
        raise InvalidInputError("ambient structure too small for the problem")
    index = IndexFamily.proper(n)
    for attempt in range(tries):
        rng = rng_for(seed, "problem", n, attempt)
        place = {}
        for s in index.ordered():
            vs = rng.sample(list(ambient.vertices), len(s))
            place[s] = dict(zip(sorted(s), vs))
        assignment = {s: Substructure.closed(place[s].values()) for s in index.sets}
        cover = index.covering_pairs()
        var = {}
        for s, t in cover:
            for p in sorted(assignment[s].pairs):
                var[s, t, p] = len(var)
        system = GF2System(len(var))
        ok = True

        def vmap(s, t):
            return {place[s][i]: place[t][i] for i in s}

        for s, t in cover:
            vm = vmap(s, t)
            for tri in assignment[s].triangles():
                img = tuple(sorted(vm[v] for v in tri))
                a, b = ambient.status(tri), ambient.status(img)
                if (a is None) != (b is None):
                    ok = False
                    break
                if a is None:
                    continue
                mask = 0
                for p in triangle_pairs(tri):
                    mask ^= 1 << var[s, t, p]
                if not system.add(mask, a ^ b):
                    ok = False
                    break
            if not ok:
                break
        if not ok:
            continue
        for s, t in cover:
            for w in index.sets:
                if not (t < w and len(w) == len(t) + 1):
                    continue
                for x in sorted(w - t):
                    alt = s | {x}
                    # paths s->t->w and s->alt->w must agree on pairs of a(s)
                    vt, va = vmap(s, t), vmap(s, alt)
                    for p in sorted(assignment[s].pairs):
                        mask = (1 << var[s, t, p]) ^ (1 << var[t, w, pair(vt[p.a], vt[p.b])])
                        mask ^= (1 << var[s, alt, p]) ^ (1 << var[alt, w, pair(va[p.a], va[p.b])])
                        if not system.add(mask, 0):
                            ok = False
        if not ok:
            continue
        x = system.solution(rng.getrandbits(max(1, len(var))))
        given = {}
        for s, t in cover:
            sh = {p: (x >> var[s, t, p]) & 1 for p in assignment[s].pairs}
            given[s, t] = PartialMap(vmap(s, t), sh)
        return DiagramFunctor.build(index, ambient, assignment, given)
    raise InvalidInputError(f"no consistent random problem found in {tries} attempts")
