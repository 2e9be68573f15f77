"""Partial elementary maps between substructures and automorphism groups.

Every fiber-respecting map is stored in normal form: an injective vertex map
plus one shift bit per source pair (image parity = source parity + shift).
For the two theories a map on a substructure is elementary exactly when it
matches triangle statuses (absent vs. present) and, on every triangle it
contains, the three shifts sum to the source bit plus the image bit mod 2.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from itertools import permutations
from typing import Iterable, Mapping

from .errors import InternalInvariantError, InvalidInputError, NoExtensionError, ResourceLimitError
from .gf2 import GF2System
from .structure import (
    ABSENT,
    Fiber,
    Pair,
    Structure,
    Substructure,
    Vertex,
    eval_Q,
    pair,
    triangle_pairs,
)

DEFAULT_MAX_ELEMS = 10**6


def max_elems() -> int:
    """Enumeration cap, from ``AMALGAM_MAX_ELEMS`` (default 10**6)."""
    raw = os.environ.get("AMALGAM_MAX_ELEMS")
    if not raw:
        return DEFAULT_MAX_ELEMS
    try:
        return max(1, int(raw))
    except ValueError:
        raise InvalidInputError(f"AMALGAM_MAX_ELEMS must be an integer, got {raw!r}") from None


@dataclass(frozen=True, eq=False)
class PartialMap:
    vertex_map: Mapping = field(default_factory=dict)
    shift: Mapping = field(default_factory=dict)

    def __post_init__(self):
        vm = self.vertex_map
        if len(set(vm.values())) != len(vm):
            raise InvalidInputError("vertex map is not injective")
        for p, bit in self.shift.items():
            if p.a not in vm or p.b not in vm:
                raise InvalidInputError(f"shift on {p} but its endpoints are not mapped")
            if bit not in (0, 1):
                raise InvalidInputError(f"shift bit must be 0/1, got {bit!r}")

    @classmethod
    def identity(cls, sub: Substructure) -> PartialMap:
        return cls({v: v for v in sub.vertices}, {p: 0 for p in sub.pairs})

    def key(self) -> tuple:
        return (tuple(sorted(self.vertex_map.items())), tuple(sorted(self.shift.items())))

    def __eq__(self, other) -> bool:
        return isinstance(other, PartialMap) and self.key() == other.key()

    def __hash__(self) -> int:
        return hash(self.key())

    def __repr__(self) -> str:
        moved = {v: w for v, w in sorted(self.vertex_map.items()) if v != w}
        flips = [tuple(p) for p, b in sorted(self.shift.items()) if b]
        return f"PartialMap(moved={moved}, flips={flips}, |dom|={len(self.vertex_map)})"

    @property
    def domain(self) -> Substructure:
        return Substructure(frozenset(self.vertex_map), frozenset(self.shift))

    @property
    def image(self) -> Substructure:
        return Substructure(frozenset(self.vertex_map.values()),
                            frozenset(self._pair_image(p) for p in self.shift))

    @property
    def is_identity(self) -> bool:
        return all(v == w for v, w in self.vertex_map.items()) and not any(self.shift.values())

    def _pair_image(self, p: Pair) -> Pair:
        return pair(self.vertex_map[p.a], self.vertex_map[p.b])

    def __call__(self, e):
        try:
            if isinstance(e, Vertex):
                return Vertex(self.vertex_map[e.id])
            if isinstance(e, Pair):
                if e not in self.shift:
                    raise KeyError(e)
                return self._pair_image(e)
            if isinstance(e, Fiber):
                q = self._pair_image(e.pair)
                return Fiber(q.a, q.b, e.parity ^ self.shift[e.pair])
        except KeyError:
            raise InvalidInputError(f"{e!r} is outside the map's domain") from None
        raise InvalidInputError(f"not an element: {e!r}")

    def compose(self, inner: PartialMap) -> PartialMap:
        """``self ∘ inner``: apply ``inner`` first."""
        vm = {}
        for v, w in inner.vertex_map.items():
            if w not in self.vertex_map:
                raise InvalidInputError(f"composition undefined: vertex {w} not in outer domain")
            vm[v] = self.vertex_map[w]
        sh = {}
        for p, b in inner.shift.items():
            q = inner._pair_image(p)
            if q not in self.shift:
                raise InvalidInputError(f"composition undefined: pair {tuple(q)} not in outer domain")
            sh[p] = b ^ self.shift[q]
        return PartialMap(vm, sh)

    def inverse(self) -> PartialMap:
        vm = {w: v for v, w in self.vertex_map.items()}
        return PartialMap(vm, {self._pair_image(p): b for p, b in self.shift.items()})

    def restrict(self, sub: Substructure) -> PartialMap:
        return PartialMap({v: w for v, w in self.vertex_map.items() if v in sub.vertices},
                          {p: b for p, b in self.shift.items() if p in sub.pairs})

    def merge(self, other: PartialMap) -> PartialMap | None:
        """Union of two maps, or None when they disagree somewhere."""
        vm = dict(self.vertex_map)
        for v, w in other.vertex_map.items():
            if vm.setdefault(v, w) != w:
                return None
        sh = dict(self.shift)
        for p, b in other.shift.items():
            if sh.setdefault(p, b) != b:
                return None
        if len(set(vm.values())) != len(vm):
            return None
        return PartialMap(vm, sh)

    def to_json(self) -> dict:
        return {
            "vertex_map": [[v, w] for v, w in sorted(self.vertex_map.items())],
            "shift": [{"pair": [p.a, p.b], "bit": b} for p, b in sorted(self.shift.items())],
        }

    @classmethod
    def from_json(cls, data: Mapping) -> PartialMap:
        try:
            vm = {int(v): int(w) for v, w in data.get("vertex_map", [])}
            sh = {pair(int(e["pair"][0]), int(e["pair"][1])): int(e["bit"]) for e in data.get("shift", [])}
        except (KeyError, TypeError, ValueError, IndexError) as exc:
            raise InvalidInputError(f"malformed map file: {exc}") from exc
        return cls(vm, sh)


def _plain(s: Structure) -> bool:
    return not s.q_override


def triangle_constraints(src: Structure, dst: Structure, vertex_map: Mapping, domain: Substructure):
    """Yield ``(triangle, image, rhs)`` per domain triangle; rhs None means a status clash."""
    for t in domain.triangles():
        img = tuple(sorted(vertex_map[v] for v in t))
        a, b = src.status(t), dst.status(img)
        if (a is ABSENT) != (b is ABSENT):
            yield t, img, None
        elif a is not ABSENT:
            yield t, img, a ^ b


def q_scan_preserves(m: PartialMap, src: Structure, dst: Structure | None = None) -> bool:
    """Direct oracle: Q agrees on every compatible fiber triple in the domain."""
    dst = src if dst is None else dst
    for t in m.domain.triangles():
        img = tuple(sorted(m.vertex_map[v] for v in t))
        if (src.status(t) is ABSENT) != (dst.status(img) is ABSENT):
            return False
        ps = triangle_pairs(t)
        for d in range(8):
            fs = [Fiber(p.a, p.b, (d >> i) & 1) for i, p in enumerate(ps)]
            if eval_Q(src, *fs) != eval_Q(dst, *(m(f) for f in fs)):
                return False
    return True


def is_elementary(m: PartialMap, src: Structure, dst: Structure | None = None) -> bool:
    """Quantifier-free preservation on the map's domain.

    For structures of the two shipped flavors this is elementarity; for
    structures carrying hand-edited Q tables it is only a syntactic
    isomorphism check.
    """
    dst = src if dst is None else dst
    for v, w in m.vertex_map.items():
        if v not in src.vertex_set or w not in dst.vertex_set:
            return False
    if set(m.shift) != set(m.domain.pairs):
        return False
    if not (_plain(src) and _plain(dst)):
        return q_scan_preserves(m, src, dst)
    for t, _img, rhs in triangle_constraints(src, dst, m.vertex_map, m.domain):
        if rhs is None:
            return False
        if (m.shift[Pair(t[0], t[1])] ^ m.shift[Pair(t[0], t[2])] ^ m.shift[Pair(t[1], t[2])]) != rhs:
            return False
    return True


@dataclass(frozen=True)
class Extension:
    map: PartialMap
    chosen: frozenset  # pairs whose shift was a free choice (set by the 0 tie-break)

    @property
    def unique(self) -> bool:
        return not self.chosen


def shift_system(src: Structure, dst: Structure, vertex_map: Mapping, domain: Substructure,
                 known: Mapping):
    """GF(2) system for the shifts of a map on ``domain`` extending ``known``.

    Returns ``(system, pairs, failure)`` where ``failure`` is None or the
    first triangle whose equation (or status) cannot be met.
    """
    pairs = sorted(domain.pairs)
    index = {p: i for i, p in enumerate(pairs)}
    system = GF2System(len(pairs))
    for p, b in sorted(known.items()):
        if p in index:
            system.add(1 << index[p], b)
    for t, _img, rhs in triangle_constraints(src, dst, vertex_map, domain):
        if rhs is None:
            return system, pairs, t
        mask = 0
        for p in triangle_pairs(t):
            mask ^= 1 << index[p]
        if not system.add(mask, rhs):
            return system, pairs, t
    return system, pairs, None


def extend_to_closure(m: PartialMap, target: Substructure, src: Structure,
                      dst: Structure | None = None) -> Extension:
    """Extend ``m`` to an elementary map on ``target``.

    The vertex map must already cover ``target``. Shifts forced by the
    triangle equations are filled in; unconstrained ones are set to 0 and
    reported in ``chosen``.
    """
    dst = src if dst is None else dst
    missing = target.vertices - set(m.vertex_map)
    if missing:
        raise InvalidInputError(f"vertex map does not cover {sorted(missing)}")
    if not m.domain.issubset(target):
        raise InvalidInputError("target does not contain the map's domain")
    vm = {v: m.vertex_map[v] for v in target.vertices}
    system, pairs, failure = shift_system(src, dst, vm, target, m.shift)
    if failure is not None:
        raise NoExtensionError(f"no elementary extension: triangle {failure} cannot be preserved",
                               triangle=failure)
    x = system.solution()
    forced = system.forced_mask()
    shift = {p: (x >> i) & 1 for i, p in enumerate(pairs)}
    chosen = frozenset(p for i, p in enumerate(pairs) if not (forced >> i) & 1 and p not in m.shift)
    return Extension(PartialMap(vm, shift), chosen)


def _vertex_candidates(moving: Substructure, fixed: Iterable):
    fixed = list(fixed)
    pinned = set()
    kept_pairs = set()
    zero_pairs = set()
    for e in fixed:
        if isinstance(e, Vertex):
            pinned.add(e.id)
        elif isinstance(e, Pair):
            kept_pairs.add(e)
        elif isinstance(e, Fiber):
            kept_pairs.add(e.pair)
            zero_pairs.add(e.pair)
    return pinned, kept_pairs, zero_pairs


def vertex_permutations(moving: Substructure, fixed: Iterable, limit: int | None = None):
    """Vertex bijections of ``moving`` respecting the fixed elements' vertex parts."""
    pinned, kept_pairs, zero_pairs = _vertex_candidates(moving, fixed)
    free = sorted(moving.vertices - pinned)
    limit = max_elems() if limit is None else limit
    if math.factorial(len(free)) > limit:
        raise ResourceLimitError(f"{len(free)}! vertex permutations exceed the cap {limit}")
    for perm in permutations(free):
        vm = {v: v for v in pinned & moving.vertices}
        vm.update(zip(free, perm))
        if any(pair(vm[p.a], vm[p.b]) != p for p in kept_pairs):
            continue
        if moving.pairs and not moving.is_closed:
            if {pair(vm[p.a], vm[p.b]) for p in moving.pairs} != set(moving.pairs):
                continue
        yield vm, {p: 0 for p in zero_pairs}


def enumerate_self_maps(s: Structure, moving: Substructure, fixed: Iterable = (),
                        limit: int | None = None):
    """Every elementary permutation of ``moving`` fixing ``fixed`` pointwise."""
    fixed = list(fixed)
    limit = max_elems() if limit is None else limit
    produced = 0
    for vm, known in vertex_permutations(moving, fixed, limit):
        system, pairs, failure = shift_system(s, s, vm, moving, known)
        if failure is not None:
            continue
        for x in system.solutions():
            produced += 1
            if produced > limit:
                raise ResourceLimitError(f"more than {limit} automorphisms")
            yield PartialMap(vm, {p: (x >> i) & 1 for i, p in enumerate(pairs)})


def fixed_elements(s: Structure, moving: Substructure, fixed: Iterable, limit: int | None = None) -> frozenset:
    """Elements of ``moving`` fixed by all its elementary permutations that fix ``fixed``.

    Walks the vertex permutations and reads off, from each GF(2) solution
    space, which fibers every solution keeps in place.
    """
    fixed = list(fixed)
    alive = set(moving.elements())
    for vm, known in vertex_permutations(moving, fixed, limit):
        system, pairs, failure = shift_system(s, s, vm, moving, known)
        if failure is not None:
            continue
        for v, w in vm.items():
            if v != w:
                alive.discard(Vertex(v))
        for i, p in enumerate(pairs):
            q = pair(vm[p.a], vm[p.b])
            if q != p:
                alive -= {p, Fiber(p.a, p.b, 0), Fiber(p.a, p.b, 1)}
            elif system.implied(1 << i) != 0:
                alive -= {Fiber(p.a, p.b, 0), Fiber(p.a, p.b, 1)}
    return frozenset(alive)


@dataclass(frozen=True)
class AutomorphismGroup:
    carrier: tuple
    table: Mapping  # (i, j) -> index of carrier[i] ∘ carrier[j]

    @property
    def order(self) -> int:
        return len(self.carrier)

    def index(self, m: PartialMap) -> int:
        return self.carrier.index(m)

    @property
    def identity(self) -> int:
        return next(i for i, m in enumerate(self.carrier) if m.is_identity)

    def is_abelian(self) -> bool:
        return all(self.table[i, j] == self.table[j, i] for i in range(self.order) for j in range(i))

    def orbit(self, e) -> frozenset:
        return frozenset(m(e) for m in self.carrier)

    def to_json(self) -> dict:
        return {"order": self.order, "carrier": [m.to_json() for m in self.carrier],
                "table": [[self.table[i, j] for j in range(self.order)] for i in range(self.order)]}


def aut_group(s: Structure, moving: Substructure, fixed: Iterable = (),
              limit: int | None = None) -> AutomorphismGroup:
    fixed = list(fixed)
    for e in fixed:
        if e not in moving:
            raise InvalidInputError(f"fixed element {e!r} lies outside the moving set")
    maps = sorted(set(enumerate_self_maps(s, moving, fixed, limit)), key=PartialMap.key)
    pos = {m: i for i, m in enumerate(maps)}
    table = {}
    for i, f in enumerate(maps):
        for j, g in enumerate(maps):
            h = f.compose(g)
            if h not in pos:
                raise InternalInvariantError("automorphism set not closed under composition")
            table[i, j] = pos[h]
    return AutomorphismGroup(tuple(maps), table)


@dataclass(frozen=True)
class PermutationGroup:
    """Automorphisms restricted to an element set that need not be closed."""

    points: tuple
    carrier: tuple  # each a tuple of images aligned with ``points``
    table: Mapping

    @property
    def order(self) -> int:
        return len(self.carrier)

    def is_abelian(self) -> bool:
        return all(self.table[i, j] == self.table[j, i] for i in range(self.order) for j in range(i))

    def to_json(self) -> dict:
        return {"order": self.order, "points": [list(p) for p in self.points],
                "carrier": [[list(e) for e in perm] for perm in self.carrier],
                "table": [[self.table[i, j] for j in range(self.order)] for i in range(self.order)]}


def _element_key(e) -> tuple:
    return (type(e).__name__, tuple(e))


def restricted_aut_group(s: Structure, points: Iterable, fixed: Iterable = (),
                         limit: int | None = None) -> PermutationGroup:
    """Restrictions to ``points`` of the self-maps of acl(points) that fix ``fixed`` and preserve ``points``."""
    from .structure import acl

    pts = tuple(sorted(set(points), key=_element_key))
    pset = set(pts)
    moving = acl(s, list(pts) + list(fixed))
    perms = set()
    for m in enumerate_self_maps(s, moving, list(fixed), limit):
        img = tuple(m(e) for e in pts)
        if set(img) == pset:
            perms.add(img)
    carrier = tuple(sorted(perms, key=lambda p: [_element_key(e) for e in p]))
    pos = {p: i for i, p in enumerate(carrier)}
    where = {e: i for i, e in enumerate(pts)}
    table = {}
    for i, f in enumerate(carrier):
        for j, g in enumerate(carrier):
            h = tuple(f[where[g[k]]] for k in range(len(pts)))
            if h not in pos:
                raise InternalInvariantError("restricted automorphisms not closed under composition")
            table[i, j] = pos[h]
    return PermutationGroup(pts, carrier, table)
