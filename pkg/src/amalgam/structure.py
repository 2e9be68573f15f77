"""Finite instances of the double-cover parity theories.

A structure has three sorts: vertices (sort I), unordered pairs of vertices
(sort K) and, above every pair, two fiber elements with parities 0 and 1.
The ternary relation Q lives on triples of fibers over the three edges of a
triangle and is encoded by one base status per 3-subset of vertices:

* ``example1``: every triangle carries a bit ``c`` (the R-bit of the random
  ternary graph) and Q holds iff the fiber parities sum to ``c`` mod 2.
* ``example2``: a triangle is either absent (R fails, Q never holds) or
  carries bit 0 (R holds, Q holds iff the parities sum to 0).

The closed substructure generated by a vertex set is all vertices, all pairs
over them and both fibers over each pair; for these theories it is also the
algebraic closure.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Mapping, NamedTuple, Union

from .errors import InvalidInputError, ResourceLimitError

EXAMPLE1 = "example1"
EXAMPLE2 = "example2"
FLAVORS = (EXAMPLE1, EXAMPLE2)

ABSENT = None

Triple = tuple  # sorted (i, j, k)
ParityTriple = tuple  # (d_ij, d_ik, d_jk) for a sorted triple (i, j, k)


class Vertex(NamedTuple):
    id: int


class Pair(NamedTuple):
    a: int
    b: int


class Fiber(NamedTuple):
    a: int
    b: int
    parity: int

    @property
    def pair(self) -> Pair:
        return Pair(self.a, self.b)

    def flipped(self) -> Fiber:
        return Fiber(self.a, self.b, 1 - self.parity)


Element = Union[Vertex, Pair, Fiber]


def pair(a: int, b: int) -> Pair:
    if a == b:
        raise InvalidInputError(f"pair needs distinct endpoints, got {a},{b}")
    return Pair(a, b) if a < b else Pair(b, a)


def fiber(a: int, b: int, parity: int) -> Fiber:
    p = pair(a, b)
    return Fiber(p.a, p.b, parity & 1)


def triple(a: int, b: int, c: int) -> Triple:
    t = tuple(sorted((a, b, c)))
    if len(set(t)) != 3:
        raise InvalidInputError(f"triangle needs three distinct vertices, got {t}")
    return t


def triangle_pairs(t: Triple) -> tuple[Pair, Pair, Pair]:
    i, j, k = t
    return Pair(i, j), Pair(i, k), Pair(j, k)


def parity_class(c: int) -> frozenset:
    return frozenset(p for p in _ALL_PARITIES if sum(p) % 2 == c)


_ALL_PARITIES = tuple((x, y, z) for x in (0, 1) for y in (0, 1) for z in (0, 1))


def vertex_support(elements: Iterable[Element]) -> frozenset:
    """Vertices of the elements plus endpoints of pairs and of fibers' pairs."""
    out = set()
    for e in elements:
        if isinstance(e, Vertex):
            out.add(e.id)
        elif isinstance(e, (Pair, Fiber)):
            out.add(e.a)
            out.add(e.b)
        else:
            raise InvalidInputError(f"not a structure element: {e!r}")
    return frozenset(out)


@dataclass(frozen=True)
class Substructure:
    """A vertex set together with some pairs over it and both fibers over each.

    Closed sets carry every pair over their vertices. Skeletal functors need
    unions of closed sets, which may omit pairs.
    """

    vertices: frozenset
    pairs: frozenset

    def __post_init__(self):
        for p in self.pairs:
            if p.a not in self.vertices or p.b not in self.vertices:
                raise InvalidInputError(f"pair {p} over vertices outside {sorted(self.vertices)}")

    @classmethod
    def closed(cls, vertices: Iterable[int]) -> Substructure:
        vs = frozenset(vertices)
        return cls(vs, frozenset(Pair(a, b) for a, b in combinations(sorted(vs), 2)))

    @property
    def is_closed(self) -> bool:
        n = len(self.vertices)
        return len(self.pairs) == n * (n - 1) // 2

    def triangles(self) -> list:
        """Sorted triples all of whose edges are present."""
        return [t for t in combinations(sorted(self.vertices), 3)
                if all(p in self.pairs for p in triangle_pairs(t))]

    def elements(self) -> frozenset:
        out = {Vertex(v) for v in self.vertices}
        for p in self.pairs:
            out.add(p)
            out.add(Fiber(p.a, p.b, 0))
            out.add(Fiber(p.a, p.b, 1))
        return frozenset(out)

    def __contains__(self, e) -> bool:
        if isinstance(e, Vertex):
            return e.id in self.vertices
        if isinstance(e, Pair):
            return e in self.pairs
        if isinstance(e, Fiber):
            return e.pair in self.pairs
        return False

    def __len__(self) -> int:
        return len(self.vertices) + 3 * len(self.pairs)

    def union(self, other: Substructure) -> Substructure:
        return Substructure(self.vertices | other.vertices, self.pairs | other.pairs)

    def intersection(self, other: Substructure) -> Substructure:
        return Substructure(self.vertices & other.vertices, self.pairs & other.pairs)

    def issubset(self, other: Substructure) -> bool:
        return self.vertices <= other.vertices and self.pairs <= other.pairs

    def to_json(self) -> dict:
        out = {"vertices": sorted(self.vertices)}
        if not self.is_closed:
            out["pairs"] = sorted([p.a, p.b] for p in self.pairs)
        return out

    @classmethod
    def from_json(cls, data: Mapping) -> Substructure:
        vs = [int(v) for v in data["vertices"]]
        if "pairs" not in data:
            return cls.closed(vs)
        return cls(frozenset(vs), frozenset(pair(int(a), int(b)) for a, b in data["pairs"]))


def closed_set(vertices: Iterable[int]) -> Substructure:
    return Substructure.closed(vertices)


@dataclass(frozen=True)
class Structure:
    """A finite model of the universal part of one of the two theories.

    ``base`` maps every sorted 3-subset to a bit or ``ABSENT``. ``q_override``
    replaces the Q table of individual triangles by an explicit set of
    satisfying parity triples; it exists so corrupted tables can be built
    and rejected by :func:`validate_axioms`.
    """

    flavor: str
    vertices: tuple
    base: Mapping
    q_override: Mapping = field(default_factory=dict)

    @classmethod
    def build(cls, flavor: str, vertices: Iterable[int], base: Mapping | None = None,
              q_override: Mapping | None = None) -> Structure:
        if flavor not in FLAVORS:
            raise InvalidInputError(f"unknown flavor {flavor!r}")
        vs = tuple(sorted(set(int(v) for v in vertices)))
        default = 0 if flavor == EXAMPLE1 else ABSENT
        given = dict(base or {})
        full = {}
        for t in combinations(vs, 3):
            full[t] = given.pop(t, default)
        if given:
            raise InvalidInputError(f"base entries over unknown vertices: {sorted(given)[:3]}")
        for t, st in full.items():
            if st is not ABSENT and st not in (0, 1):
                raise InvalidInputError(f"bad status {st!r} for {t}")
        return cls(flavor, vs, full, dict(q_override or {}))

    def status(self, t: Triple):
        try:
            return self.base[t]
        except KeyError:
            raise InvalidInputError(f"no triangle {t} in structure") from None

    def q_parities(self, t: Triple) -> frozenset:
        """Parity triples (d_ij, d_ik, d_jk) on which Q holds over triangle t."""
        if t in self.q_override:
            return self.q_override[t]
        st = self.status(t)
        return frozenset() if st is ABSENT else parity_class(st)

    @property
    def vertex_set(self) -> frozenset:
        return frozenset(self.vertices)

    def pairs(self) -> list:
        return [Pair(a, b) for a, b in combinations(self.vertices, 2)]

    def triangles(self) -> list:
        return list(self.base)

    def whole(self) -> Substructure:
        return Substructure.closed(self.vertices)

    def contains(self, e) -> bool:
        vs = self.vertex_set
        if isinstance(e, Vertex):
            return e.id in vs
        if isinstance(e, (Pair, Fiber)):
            return e.a in vs and e.b in vs and e.a < e.b and (not isinstance(e, Fiber) or e.parity in (0, 1))
        return False

    def restrict(self, vertices: Iterable[int]) -> Structure:
        keep = frozenset(vertices)
        base = {t: st for t, st in self.base.items() if set(t) <= keep}
        over = {t: q for t, q in self.q_override.items() if set(t) <= keep}
        return Structure(self.flavor, tuple(sorted(keep)), base, over)

    def with_status(self, t: Triple, status) -> Structure:
        base = dict(self.base)
        base[t] = status
        return Structure(self.flavor, self.vertices, base, dict(self.q_override))

    def with_q_table(self, t: Triple, parities: Iterable) -> Structure:
        over = dict(self.q_override)
        over[t] = frozenset(tuple(p) for p in parities)
        return Structure(self.flavor, self.vertices, dict(self.base), over)

    def to_json(self) -> dict:
        entries = []
        for t in sorted(self.base):
            st = self.base[t]
            entries.append({"triple": list(t), "status": "absent" if st is ABSENT else {"bit": st}})
        out = {"flavor": self.flavor, "vertices": list(self.vertices), "base": entries}
        if self.q_override:
            out["q_override"] = [{"triple": list(t), "parities": sorted(list(p) for p in q)}
                                 for t, q in sorted(self.q_override.items())]
        return out

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, separators=(",", ":")) + "\n"

    @classmethod
    def from_json(cls, data: Mapping) -> Structure:
        try:
            flavor = data["flavor"]
            vertices = data["vertices"]
            base = {}
            for entry in data.get("base", []):
                t = tuple(sorted(int(v) for v in entry["triple"]))
                st = entry["status"]
                if st == "absent":
                    base[t] = ABSENT
                elif isinstance(st, Mapping) and "bit" in st:
                    base[t] = int(st["bit"])
                else:
                    raise InvalidInputError(f"bad status {st!r}")
            over = {}
            for entry in data.get("q_override", []):
                t = tuple(sorted(int(v) for v in entry["triple"]))
                over[t] = frozenset(tuple(int(b) for b in p) for p in entry["parities"])
        except (KeyError, TypeError) as exc:
            raise InvalidInputError(f"malformed structure file: {exc}") from exc
        return cls.build(flavor, vertices, base, over)

    @classmethod
    def loads(cls, text: str) -> Structure:
        try:
            return cls.from_json(json.loads(text))
        except json.JSONDecodeError as exc:
            raise InvalidInputError(f"structure file is not JSON: {exc}") from exc


def _check_member(s: Structure, e) -> None:
    if not s.contains(e):
        raise InvalidInputError(f"{e!r} is not an element of the structure")


def compatible_triangle(x: Fiber, y: Fiber, z: Fiber) -> Triple | None:
    """The triangle whose three edges are the fibers' pairs, if they form one."""
    ps = {x.pair, y.pair, z.pair}
    if len(ps) != 3:
        return None
    vs = set()
    for p in ps:
        vs.update(p)
    if len(vs) != 3:
        return None
    return tuple(sorted(vs))


def eval_Q(s: Structure, x: Fiber, y: Fiber, z: Fiber) -> bool:
    for e in (x, y, z):
        if not isinstance(e, Fiber):
            raise InvalidInputError(f"Q takes fiber elements, got {e!r}")
        _check_member(s, e)
    t = compatible_triangle(x, y, z)
    if t is None:
        return False
    by_pair = {e.pair: e.parity for e in (x, y, z)}
    key = tuple(by_pair[p] for p in triangle_pairs(t))
    return key in s.q_parities(t)


def acl(s: Structure, c: Iterable[Element]) -> Substructure:
    """Closed substructure generated by the vertex support of ``c``."""
    c = list(c)
    for e in c:
        _check_member(s, e)
    return Substructure.closed(vertex_support(c))


def is_independent(s: Structure, a: Iterable[Element], b: Iterable[Element],
                   base: Iterable[Element] = ()) -> bool:
    a, b, base = list(a), list(b), list(base)
    left = acl(s, a + base)
    right = acl(s, b + base)
    return left.intersection(right).issubset(acl(s, base))


def q_propagation(s: Structure, c: Iterable[Element]) -> frozenset:
    """Fixpoint of the syntactic definability rules; a sound part of dcl."""
    d = set(c)
    for e in d:
        _check_member(s, e)
    changed = True
    while changed:
        changed = False
        new = set()
        verts = {e.id for e in d if isinstance(e, Vertex)}
        prs = {e for e in d if isinstance(e, Pair)}
        fibs = {e for e in d if isinstance(e, Fiber)}
        for a, b in combinations(sorted(verts), 2):
            new.add(Pair(a, b))
        for f in fibs:
            new.add(f.pair)
            new.add(f.flipped())
        for p in prs:
            if p.a in verts:
                new.add(Vertex(p.b))
            if p.b in verts:
                new.add(Vertex(p.a))
        for p, q in combinations(sorted(prs), 2):
            common = set(p) & set(q)
            if len(common) == 1:
                new.add(Vertex(common.pop()))
        fib_pairs = sorted({f.pair for f in fibs})
        for p, q in combinations(fib_pairs, 2):
            common = set(p) & set(q)
            if len(common) != 1:
                continue
            (u,) = set(p) - common
            (w,) = set(q) - common
            t = triple(common.pop(), u, w)
            if s.status(t) is not ABSENT:
                new.add(Fiber(min(u, w), max(u, w), 0))
                new.add(Fiber(min(u, w), max(u, w), 1))
        if not new <= d:
            d |= new
            changed = True
    return frozenset(d)


def dcl(s: Structure, c: Iterable[Element], *, ambient: bool = False,
        limit: int | None = None) -> frozenset:
    """Elements fixed by every automorphism that fixes ``c`` pointwise.

    By default the automorphisms are the elementary self-maps of the closed
    set ``acl(c)``; every such map extends to the whole model, and nothing
    outside ``acl(c)`` is definable from ``c``. With ``ambient=True`` the
    automorphisms of the finite structure ``s`` itself are used instead,
    which can report accidental definability in small structures.

    Raises ResourceLimitError (with the propagation fixpoint as ``partial``)
    when the vertex permutations to try exceed the cap.
    """
    from .embedding import fixed_elements

    c = list(c)
    for e in c:
        _check_member(s, e)
    moving = s.whole() if ambient else acl(s, c)
    try:
        return fixed_elements(s, moving, c, limit=limit)
    except ResourceLimitError as exc:
        raise ResourceLimitError(str(exc), partial=q_propagation(s, c)) from None


@dataclass(frozen=True)
class Violation:
    triple: tuple
    axiom: str
    message: str

    def to_json(self) -> dict:
        return {"triple": list(self.triple), "axiom": self.axiom, "message": self.message}


@dataclass(frozen=True)
class AxiomReport:
    violations: tuple

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_json(self) -> dict:
        return {"ok": self.ok, "violations": [v.to_json() for v in self.violations]}


def validate_axioms(s: Structure) -> AxiomReport:
    """Check compatibility, the one-flip axiom and flavor constraints.

    Q is stored per unordered triangle and looked up by edge, so symmetry
    under argument permutations holds by construction and is not rechecked.
    Each bad triangle yields one violation.
    """
    out = []
    if s.flavor not in FLAVORS:
        out.append(Violation((), "flavor", f"unknown flavor {s.flavor!r}"))
        return AxiomReport(tuple(out))
    for t in sorted(s.base):
        st = s.base[t]
        q = s.q_parities(t)
        if any(len(p) != 3 or any(b not in (0, 1) for b in p) for p in q):
            out.append(Violation(t, "compatibility", "Q table holds a non-parity entry"))
            continue
        if s.flavor == EXAMPLE2 and st is ABSENT:
            if q:
                out.append(Violation(t, "flavor", "Q holds on a triangle where R fails"))
            continue
        if st is ABSENT:
            out.append(Violation(t, "flavor", "example1 triangle without a base bit"))
            continue
        bad = next((p for p in _ALL_PARITIES for i in range(3)
                    if (p in q) == ((p[:i] + (1 - p[i],) + p[i + 1:]) in q)), None)
        if bad is not None:
            out.append(Violation(t, "one-flip", f"flipping one fiber does not toggle Q at {bad}"))
        elif s.flavor == EXAMPLE2 and st != 0:
            out.append(Violation(t, "flavor", f"example2 R-triangle with bit {st}"))
        elif q != parity_class(st):
            out.append(Violation(t, "flavor", f"Q table disagrees with base bit {st}"))
    return AxiomReport(tuple(out))
