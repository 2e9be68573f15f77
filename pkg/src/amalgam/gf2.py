"""Incremental linear systems over GF(2).

Rows are Python ints used as bit masks; bit ``i`` is variable ``i``.
"""

from __future__ import annotations

from itertools import product


class GF2System:
    """Echelon form keyed by lowest set bit, extended one equation at a time."""

    def __init__(self, nvars: int):
        self.nvars = nvars
        self._rows: dict[int, tuple[int, int]] = {}
        self.consistent = True

    def copy(self) -> GF2System:
        other = GF2System(self.nvars)
        other._rows = dict(self._rows)
        other.consistent = self.consistent
        return other

    def _reduce(self, mask: int, rhs: int) -> tuple[int, int]:
        while mask:
            low = mask & -mask
            row = self._rows.get(low)
            if row is None:
                break
            mask ^= row[0]
            rhs ^= row[1]
        return mask, rhs

    def add(self, mask: int, rhs: int) -> bool:
        """Add ``sum(x_i for i in mask) == rhs``. Returns False if this row made the system inconsistent."""
        mask, rhs = self._reduce(mask, rhs & 1)
        if mask == 0:
            if rhs:
                self.consistent = False
                return False
            return True
        self._rows[mask & -mask] = (mask, rhs)
        return True

    def implied(self, mask: int) -> int | None:
        """Value of the linear form ``mask`` if the system fixes it, else None."""
        mask, rhs = self._reduce(mask, 0)
        return rhs if mask == 0 else None

    @property
    def rank(self) -> int:
        return len(self._rows)

    def free_variables(self) -> list[int]:
        pivots = {low.bit_length() - 1 for low in self._rows}
        return [i for i in range(self.nvars) if i not in pivots]

    def _back_substitute(self, assignment: int, rhs_on: bool) -> int:
        x = assignment
        for low in sorted(self._rows, reverse=True):
            mask, rhs = self._rows[low]
            rest = mask ^ low
            bit = (bin(rest & x).count("1") + (rhs if rhs_on else 0)) & 1
            if bit:
                x |= low
            else:
                x &= ~low
        return x

    def solution(self, free_values: int = 0) -> int | None:
        """The solution whose free variables take the bits of ``free_values`` (default all 0)."""
        if not self.consistent:
            return None
        free = 0
        for f in self.free_variables():
            free |= 1 << f
        return self._back_substitute(free_values & free, True)

    def nullspace(self) -> list[int]:
        return [self._back_substitute(1 << f, False) for f in self.free_variables()]

    def forced_mask(self) -> int:
        """Bits of variables that take the same value in every solution."""
        moving = 0
        for v in self.nullspace():
            moving |= v
        return ((1 << self.nvars) - 1) & ~moving

    def solutions(self):
        """Iterate every solution (2**nullity of them)."""
        base = self.solution()
        if base is None:
            return
        basis = self.nullspace()
        for coeffs in product((0, 1), repeat=len(basis)):
            x = base
            for c, v in zip(coeffs, basis):
                if c:
                    x ^= v
            yield x


def bits(x: int, n: int) -> list[int]:
    return [(x >> i) & 1 for i in range(n)]
