"""Set partitions of [n], the refinement lattice, and its Möbius function.

Partitions are stored in restricted-growth normal form: position k (1-based)
is mapped to the index of its block, blocks numbered by smallest element.
The string form "0,0,1,0" therefore denotes {{1,2,4},{3}}.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import factorial

from .errors import InvalidArgumentError, ResourceLimitError

# Bell numbers B(0)..B(12); enumeration is capped at n = 12.
_BELL = (1, 1, 2, 5, 15, 52, 203, 877, 4140, 21147, 115975, 678570, 4213597)
ENUMERATION_CAP = 12


@dataclass(frozen=True)
class SetPartition:
    """A partition of {1,..,n} in restricted-growth normal form."""

    rgs: tuple[int, ...]

    def __post_init__(self):
        if len(self.rgs) < 1:
            raise InvalidArgumentError("partition ground set must be nonempty")
        mx = -1
        for b in self.rgs:
            if b < 0 or b > mx + 1:
                raise InvalidArgumentError(
                    f"not a restricted-growth string: {self.rgs}")
            mx = max(mx, b)

    @property
    def n(self) -> int:
        return len(self.rgs)

    @property
    def num_blocks(self) -> int:
        return max(self.rgs) + 1

    def block_of(self, position: int) -> int:
        """Block index of a 1-based position."""
        if not 1 <= position <= self.n:
            raise InvalidArgumentError(f"position {position} outside [1,{self.n}]")
        return self.rgs[position - 1]

    def blocks(self) -> tuple[tuple[int, ...], ...]:
        """Blocks as tuples of 1-based positions, in block-index order."""
        out: list[list[int]] = [[] for _ in range(self.num_blocks)]
        for pos, b in enumerate(self.rgs, start=1):
            out[b].append(pos)
        return tuple(tuple(blk) for blk in out)

    @classmethod
    def from_blocks(cls, n: int, blocks) -> "SetPartition":
        """Build from an iterable of blocks of 1-based positions."""
        assign = [-1] * n
        for i, blk in enumerate(blocks):
            for pos in blk:
                if not 1 <= pos <= n:
                    raise InvalidArgumentError(f"position {pos} outside [1,{n}]")
                if assign[pos - 1] != -1:
                    raise InvalidArgumentError(f"position {pos} appears twice")
                assign[pos - 1] = i
        if -1 in assign:
            raise InvalidArgumentError("blocks do not cover the ground set")
        return cls(_normalize(assign))

    @classmethod
    def from_values(cls, values) -> "SetPartition":
        """Partition whose blocks group equal entries of `values`."""
        seq = list(values)
        if not seq:
            raise InvalidArgumentError("need at least one value")
        return cls(_normalize([seq.index(v) for v in seq]))

    @classmethod
    def discrete(cls, n: int) -> "SetPartition":
        return cls(tuple(range(n)))

    @classmethod
    def full(cls, n: int) -> "SetPartition":
        return cls((0,) * n)

    @classmethod
    def from_string(cls, s: str) -> "SetPartition":
        return cls(tuple(int(tok) for tok in s.split(",")))

    def to_string(self) -> str:
        return ",".join(str(b) for b in self.rgs)

    def __str__(self) -> str:
        return self.to_string()


def _normalize(assign) -> tuple[int, ...]:
    """Relabel arbitrary block ids into restricted-growth normal form."""
    relabel: dict[int, int] = {}
    out = []
    for b in assign:
        if b not in relabel:
            relabel[b] = len(relabel)
        out.append(relabel[b])
    return tuple(out)


def bell_number(n: int) -> int:
    if n <= ENUMERATION_CAP:
        return _BELL[n]
    # Bell triangle, only needed for error messages beyond the cap
    row = [1]
    for _ in range(n - 1):
        nxt = [row[-1]]
        for v in row:
            nxt.append(nxt[-1] + v)
        row = nxt
    return row[-1]


def enumerate_partitions(n: int) -> list[SetPartition]:
    """All B(n) partitions of [n] in lexicographic restricted-growth order."""
    if n < 1:
        raise InvalidArgumentError("n must be >= 1")
    if n > ENUMERATION_CAP:
        raise ResourceLimitError(
            f"enumerating P({n}) needs Bell({n}) = {bell_number(n)} partitions; "
            f"the cap is n = {ENUMERATION_CAP}")
    out = []
    rgs = [0] * n

    def rec(k: int, mx: int):
        if k == n:
            out.append(SetPartition(tuple(rgs)))
            return
        for b in range(mx + 2):
            rgs[k] = b
            rec(k + 1, max(mx, b))

    rec(0, -1)
    return out


def _check_same_ground(p: SetPartition, q: SetPartition):
    if p.n != q.n:
        raise InvalidArgumentError(
            f"ground-set sizes differ: {p.n} vs {q.n}")


def leq(p: SetPartition, q: SetPartition) -> bool:
    """True iff every block of p is contained in a block of q (p refines q)."""
    _check_same_ground(p, q)
    # p <= q iff positions equal under p are equal under q
    seen: dict[int, int] = {}
    for pos in range(p.n):
        bp, bq = p.rgs[pos], q.rgs[pos]
        if bp in seen:
            if seen[bp] != bq:
                return False
        else:
            seen[bp] = bq
    return True


def meet(p: SetPartition, q: SetPartition) -> SetPartition:
    """Coarsest common refinement: blockwise intersections."""
    _check_same_ground(p, q)
    return SetPartition(_normalize([p.rgs[i] * (q.n + 1) + q.rgs[i]
                                    for i in range(p.n)]))


def join(p: SetPartition, q: SetPartition) -> SetPartition:
    """Finest common coarsening, via union-find on overlapping blocks."""
    _check_same_ground(p, q)
    parent = list(range(p.n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(x, y):
        rx, ry = find(x), find(y)
        if rx != ry:
            parent[max(rx, ry)] = min(rx, ry)

    first_p: dict[int, int] = {}
    first_q: dict[int, int] = {}
    for i in range(p.n):
        if p.rgs[i] in first_p:
            union(first_p[p.rgs[i]], i)
        else:
            first_p[p.rgs[i]] = i
        if q.rgs[i] in first_q:
            union(first_q[q.rgs[i]], i)
        else:
            first_q[q.rgs[i]] = i
    return SetPartition(_normalize([find(i) for i in range(p.n)]))


def mobius(p: SetPartition, q: SetPartition) -> int:
    """Möbius function of the interval [p, q] in the partition lattice.

    Closed form: the interval is a product of partition lattices, one per
    block B of q, each on the p-blocks inside B, so
    mu(p, q) = prod_B (-1)^(n_B - 1) (n_B - 1)!  with n_B = #{p-blocks in B}.
    """
    if not leq(p, q):
        raise InvalidArgumentError("mobius requires p <= q")
    counts: dict[int, set[int]] = {}
    for pos in range(p.n):
        counts.setdefault(q.rgs[pos], set()).add(p.rgs[pos])
    result = 1
    for sub in counts.values():
        m = len(sub)
        result *= (-1) ** (m - 1) * factorial(m - 1)
    return result


def interval(p: SetPartition, q: SetPartition) -> list[SetPartition]:
    """All partitions s with p <= s <= q.

    Built directly: coarsenings of p's blocks within each block of q.
    """
    if not leq(p, q):
        raise InvalidArgumentError("interval requires p <= q")
    # For each q-block, all ways of coarsening the p-blocks it contains.
    pb = p.blocks()
    per_block = []
    for qb in q.blocks():
        inner = sorted({p.rgs[pos - 1] for pos in qb})
        choices = []
        for grouping in _set_partitions_of_range(len(inner)):
            blocks = [set(itertools.chain.from_iterable(
                pb[inner[i]] for i in grp)) for grp in grouping]
            choices.append(blocks)
        per_block.append(choices)
    out = []
    for combo in itertools.product(*per_block):
        blocks = [blk for choice in combo for blk in choice]
        out.append(SetPartition.from_blocks(p.n, blocks))
    return out


def _set_partitions_of_range(m: int) -> list[list[list[int]]]:
    """All partitions of {0,..,m-1} as lists of index lists."""
    if m == 0:
        return [[]]
    out = []
    for sub in _set_partitions_of_range(m - 1):
        for i, blk in enumerate(sub):
            out.append([b + [m - 1] if j == i else list(b)
                        for j, b in enumerate(sub)])
        out.append([list(b) for b in sub] + [[m - 1]])
    return out
