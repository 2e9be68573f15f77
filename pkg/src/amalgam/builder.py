"""Seeded random structures and on-demand instances of the extension axiom."""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass
from itertools import combinations
from typing import Mapping, Sequence

from .errors import InternalInvariantError, InvalidInputError, UnsupportedError
from .gf2 import GF2System
from .structure import (
    ABSENT,
    EXAMPLE1,
    EXAMPLE2,
    FLAVORS,
    Fiber,
    Structure,
    fiber,
    eval_Q,
    pair,
)

SEED_MASK = (1 << 64) - 1


def derive_seed(seed: int, *labels) -> int:
    """Sub-seed for one call site; stable across runs and Python versions."""
    h = hashlib.blake2b(digest_size=8)
    h.update(str(int(seed) & SEED_MASK).encode())
    for label in labels:
        h.update(b"\x1f")
        h.update(repr(label).encode())
    return int.from_bytes(h.digest(), "big")


def rng_for(seed: int, *labels) -> random.Random:
    return random.Random(derive_seed(seed, *labels))


def _status_from_bit(flavor: str, r: int):
    if flavor == EXAMPLE1:
        return r
    return 0 if r else ABSENT


def generate(flavor: str, n_vertices: int, seed: int, all_zero_base: bool = False) -> Structure:
    """Random structure on vertices 0..n-1.

    One R-bit per triple, in lexicographic order. Example1 stores it as the
    base bit; example2 keeps bit 0 on R-triples and marks the rest absent.
    With ``all_zero_base`` every R-bit is 0.
    """
    if flavor not in FLAVORS:
        raise InvalidInputError(f"unknown flavor {flavor!r}")
    if n_vertices < 0:
        raise InvalidInputError("n_vertices must be non-negative")
    rng = rng_for(seed, "generate", flavor, n_vertices)
    base = {}
    for t in combinations(range(n_vertices), 3):
        r = 0 if all_zero_base else rng.getrandbits(1)
        base[t] = _status_from_bit(flavor, r)
    return Structure.build(flavor, range(n_vertices), base)


def coboundary_structure(n_vertices: int, seed: int) -> Structure:
    """Example1 structure whose bits are the coboundary of a random pair labelling."""
    rng = rng_for(seed, "coboundary", n_vertices)
    label = {p: rng.getrandbits(1) for p in (pair(a, b) for a, b in combinations(range(n_vertices), 2))}
    base = {t: label[t[:2]] ^ label[(t[0], t[2])] ^ label[t[1:]] for t in combinations(range(n_vertices), 3)}
    return Structure.build(EXAMPLE1, range(n_vertices), base)


@dataclass(frozen=True)
class ExtensionRequest:
    """Anchors a_0..a_{n-1}, one chosen fiber per anchor pair, and a target pattern W.

    ``chosen`` and ``pattern`` are keyed by index pairs (i, j) with i < j.
    """

    anchors: tuple
    chosen: Mapping
    pattern: frozenset

    @classmethod
    def make(cls, anchors: Sequence[int], chosen: Mapping | None = None, pattern=()) -> ExtensionRequest:
        anchors = tuple(int(a) for a in anchors)
        n = len(anchors)
        idx = list(combinations(range(n), 2))
        given = dict(chosen or {})
        fibers = {}
        for i, j in idx:
            f = given.get((i, j), fiber(anchors[i], anchors[j], 0))
            if isinstance(f, int):
                f = fiber(anchors[i], anchors[j], f)
            fibers[i, j] = f
        return cls(anchors, fibers, frozenset(tuple(sorted(w)) for w in pattern))

    def validate(self, s: Structure) -> None:
        if len(set(self.anchors)) != len(self.anchors):
            raise InvalidInputError("anchors must be distinct")
        for a in self.anchors:
            if a not in s.vertex_set:
                raise InvalidInputError(f"anchor {a} is not a vertex")
        n = len(self.anchors)
        for i, j in combinations(range(n), 2):
            f = self.chosen.get((i, j))
            if not isinstance(f, Fiber) or f.pair != pair(self.anchors[i], self.anchors[j]):
                raise InvalidInputError(f"chosen fiber for ({i},{j}) must lie over the anchor pair")
        for w in self.pattern:
            if len(w) != 2 or not (0 <= w[0] < w[1] < n):
                raise InvalidInputError(f"pattern entry {w} is not an index pair")


@dataclass(frozen=True)
class Extension:
    structure: Structure
    vertex: int
    fibers: tuple  # y_i over (a_i, b)


def _fresh_id(s: Structure) -> int:
    return max(s.vertices, default=-1) + 1


def extend_axiom4(s: Structure, req: ExtensionRequest, seed: int = 0, all_zero: bool = False) -> Extension:
    """Add one vertex b and fibers y_i realizing Q(x_ij, y_i, y_j) exactly on W.

    Unknowns are the parities of y_i and the bits of the requested triangles
    (a_i, a_j, b); each anchor pair gives one equation. The y parities are
    left free and drawn from the stream (0 under ``all_zero``); every other
    new triangle gets a stream bit (0 under ``all_zero``).
    """
    if s.flavor != EXAMPLE1:
        raise UnsupportedError("the extension axiom belongs to example1 only")
    req.validate(s)
    n = len(req.anchors)
    rng = rng_for(seed, "axiom4", s.vertices, req.anchors, sorted(req.pattern))
    idx = list(combinations(range(n), 2))
    # bits 0..m-1: triangle bits c_ij; bits m..m+n-1: parities of y_i
    m = len(idx)
    system = GF2System(m + n)
    for k, (i, j) in enumerate(idx):
        target = 0 if (i, j) in req.pattern else 1
        rhs = req.chosen[i, j].parity ^ target
        system.add((1 << k) | (1 << (m + i)) | (1 << (m + j)), rhs)
    free = 0 if all_zero else rng.getrandbits(m + n)
    x = system.solution(free)
    if x is None:
        raise InternalInvariantError("extension system infeasible")
    b = _fresh_id(s)
    base = dict(s.base)
    solved = {}
    for k, (i, j) in enumerate(idx):
        solved[tuple(sorted((req.anchors[i], req.anchors[j], b)))] = (x >> k) & 1
    for u, v in combinations(s.vertices, 2):
        t = tuple(sorted((u, v, b)))
        base[t] = solved[t] if t in solved else (0 if all_zero else rng.getrandbits(1))
    ys = tuple(fiber(a, b, (x >> (m + i)) & 1) for i, a in enumerate(req.anchors))
    out = Structure(s.flavor, s.vertices + (b,), base, dict(s.q_override))
    return Extension(out, b, ys)


def add_vertex(s: Structure, statuses: Mapping | None = None, seed: int = 0,
               preserve_block: tuple | None = None) -> tuple[Structure, int]:
    """Add one vertex; ``statuses`` fixes some new triangles by their old pair (u, v).

    Unspecified triangles draw an R-bit from the stream. With
    ``preserve_block`` set to a triple T, triangles holding two vertices of T
    stay absent so T remains blocked.
    """
    statuses = {pair(*k): v for k, v in (statuses or {}).items()}
    rng = rng_for(seed, "add_vertex", s.vertices, preserve_block)
    b = _fresh_id(s)
    base = dict(s.base)
    block = set(preserve_block or ())
    for u, v in combinations(s.vertices, 2):
        p = pair(u, v)
        if p in statuses:
            st = statuses[p]
        elif u in block and v in block:
            st = ABSENT
        else:
            st = _status_from_bit(s.flavor, rng.getrandbits(1))
        if block and u in block and v in block and st is not ABSENT:
            raise InvalidInputError(f"status on ({u},{v},new) would unblock {tuple(sorted(block))}")
        if s.flavor == EXAMPLE2 and st not in (ABSENT, 0):
            raise InvalidInputError("example2 triangles are absent or bit 0")
        base[tuple(sorted((u, v, b)))] = st
    return Structure(s.flavor, s.vertices + (b,), base, dict(s.q_override)), b


def pad(s: Structure, count: int, seed: int) -> tuple[Structure, tuple]:
    """Add ``count`` buffer vertices: random bits in example1, absent triangles in example2."""
    added = []
    for k in range(count):
        if s.flavor == EXAMPLE2:
            b = _fresh_id(s)
            base = dict(s.base)
            for u, v in combinations(s.vertices, 2):
                base[tuple(sorted((u, v, b)))] = ABSENT
            s = Structure(s.flavor, s.vertices + (b,), base, dict(s.q_override))
        else:
            s, b = add_vertex(s, seed=derive_seed(seed, "pad", k))
        added.append(b)
    return s, tuple(added)


def blocks(s: Structure, t: tuple) -> bool:
    """R holds on t and fails on every triple sharing two of its vertices."""
    if s.status(t) is ABSENT:
        return False
    for u, v in combinations(t, 2):
        for w in s.vertices:
            if w not in t and s.status(tuple(sorted((u, v, w)))) is not ABSENT:
                return False
    return True


def blocked_configuration(seed: int, n_vertices: int = 6) -> tuple[Structure, tuple]:
    """Example2 structure on 0..n-1 where (0, 1, 2) is an R-triangle that no vertex extends."""
    if n_vertices < 3:
        raise InvalidInputError("blocked configuration needs at least three vertices")
    t = (0, 1, 2)
    rng = rng_for(seed, "blocked", n_vertices)
    base = {}
    for tri in combinations(range(n_vertices), 3):
        shared = len(set(tri) & set(t))
        if tri == t:
            base[tri] = 0
        elif shared >= 2:
            base[tri] = ABSENT
        else:
            base[tri] = _status_from_bit(EXAMPLE2, rng.getrandbits(1))
    s = Structure.build(EXAMPLE2, range(n_vertices), base)
    if not blocks(s, t):
        raise InternalInvariantError("blocked configuration lost its block")
    return s, t


def realized_pattern(ext: Extension, req: ExtensionRequest) -> frozenset:
    """Index pairs (i, j) on which Q(x_ij, y_i, y_j) holds in the extension."""
    return frozenset((i, j) for i, j in combinations(range(len(req.anchors)), 2)
                     if eval_Q(ext.structure, req.chosen[i, j], ext.fibers[i], ext.fibers[j]))
