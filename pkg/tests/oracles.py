"""Brute-force reference implementations used only by the tests.

They read the raw base bits and never call the library's Q tables, GF(2)
solver or automorphism code.
"""

from __future__ import annotations

from itertools import combinations, permutations, product

from amalgam.structure import ABSENT, Fiber, Pair, Vertex


def q_holds(bit, parities) -> bool:
    """Q over a triangle with the given status, on a parity triple."""
    return bit is not ABSENT and sum(parities) % 2 == bit


def q_of(s, x: Fiber, y: Fiber, z: Fiber) -> bool:
    verts = {x.a, x.b, y.a, y.b, z.a, z.b}
    pairs = {(x.a, x.b), (y.a, y.b), (z.a, z.b)}
    if len(verts) != 3 or len(pairs) != 3:
        return False
    return q_holds(s.base[tuple(sorted(verts))], (x.parity, y.parity, z.parity))


def all_elements(vertices) -> set:
    out = {Vertex(v) for v in vertices}
    for a, b in combinations(sorted(vertices), 2):
        out |= {Pair(a, b), Fiber(a, b, 0), Fiber(a, b, 1)}
    return out


def apply(vmap, shift, e):
    if isinstance(e, Vertex):
        return Vertex(vmap[e.id])
    a, b = sorted((vmap[e.a], vmap[e.b]))
    if isinstance(e, Pair):
        return Pair(a, b)
    return Fiber(a, b, e.parity ^ shift[(e.a, e.b)])


def elementary(src, dst, vmap, shift) -> bool:
    """Statuses agree and Q agrees on every fiber triple over every domain triangle."""
    dom = sorted(vmap)
    for t in combinations(dom, 3):
        img = tuple(sorted(vmap[v] for v in t))
        if (src.base[t] is ABSENT) != (dst.base[img] is ABSENT):
            return False
        a, b, c = t
        for d in product((0, 1), repeat=3):
            fx, fy, fz = Fiber(a, b, d[0]), Fiber(a, c, d[1]), Fiber(b, c, d[2])
            before = q_of(src, fx, fy, fz)
            after = q_of(dst, *(apply(vmap, shift, f) for f in (fx, fy, fz)))
            if before != after:
                return False
    return True


def self_maps(s, vertices, fixed=()):
    """All elementary self-maps of the closed set on ``vertices`` fixing ``fixed`` pointwise."""
    vs = sorted(vertices)
    prs = list(combinations(vs, 2))
    out = []
    for perm in permutations(vs):
        vmap = dict(zip(vs, perm))
        for bits in product((0, 1), repeat=len(prs)):
            shift = dict(zip(prs, bits))
            if all(apply(vmap, shift, e) == e for e in fixed) and elementary(s, s, vmap, shift):
                out.append((vmap, shift))
    return out


def dcl(s, c) -> frozenset:
    """Elements of acl(c) fixed by every elementary self-map fixing c."""
    support = set()
    for e in c:
        support |= {e.id} if isinstance(e, Vertex) else {e.a, e.b}
    maps = self_maps(s, support, c)
    return frozenset(e for e in all_elements(support) if all(apply(vm, sh, e) == e for vm, sh in maps))


def gf2_solutions(nvars, rows) -> list:
    """Every assignment (as an int) satisfying the rows (mask, rhs)."""
    return [x for x in range(1 << nvars) if all(bin(m & x).count("1") % 2 == r for m, r in rows)]


def composite_parity(s, a, b, c, dab, dbc) -> int:
    """Parity form of composition: d_ac = d_ab + d_bc + c(abc)."""
    if len({a, b, c}) < 3:
        return dab ^ dbc
    return (dab + dbc + s.base[tuple(sorted((a, b, c)))]) % 2
