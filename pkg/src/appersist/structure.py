"""Block lower triangular decomposition of the migration support.

Edge ``j -> i`` whenever ``a_ij`` is not identically zero.  Diagonal blocks
are the strongly connected components, listed in topological order (sources
first, ties broken by smallest original index), so every nonzero entry of the
permuted matrix lies on or below the diagonal blocks.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .signals import is_identically_zero


@dataclass(frozen=True)
class ZeroPattern:
    nonzero: tuple[tuple[bool, ...], ...]

    def __post_init__(self):
        rows = tuple(tuple(bool(x) for x in row) for row in self.nonzero)
        n = len(rows)
        if any(len(r) != n for r in rows):
            raise ValueError("zero pattern must be square")
        rows = tuple(tuple(x and i != j for j, x in enumerate(r)) for i, r in enumerate(rows))
        object.__setattr__(self, "nonzero", rows)

    @property
    def n(self) -> int:
        return len(self.nonzero)

    @classmethod
    def from_matrix(cls, m) -> "ZeroPattern":
        return cls(tuple(tuple(bool(x) for x in row) for row in np.asarray(m)))

    def as_array(self) -> np.ndarray:
        return np.array(self.nonzero, dtype=bool).reshape(self.n, self.n)

    def permuted(self, perm: Sequence[int]) -> "ZeroPattern":
        """Pattern of the matrix with rows and columns reordered by ``perm``."""
        a = self.as_array()[np.ix_(perm, perm)]
        return ZeroPattern.from_matrix(a)


@dataclass(frozen=True)
class BlockStructure:
    permutation: tuple[int, ...]
    blocks: tuple[tuple[int, ...], ...]
    I: frozenset
    J: frozenset

    @property
    def k(self) -> int:
        return len(self.blocks)

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(len(b) for b in self.blocks)

    def block_of(self) -> dict[int, int]:
        return {i: b for b, members in enumerate(self.blocks) for i in members}

    def to_dict(self) -> dict:
        return {
            "permutation": list(self.permutation),
            "blocks": [list(b) for b in self.blocks],
            "sizes": list(self.sizes),
            "I": sorted(self.I),
            "J": sorted(self.J),
        }

    @classmethod
    def from_dict(cls, d) -> "BlockStructure":
        return cls(tuple(d["permutation"]), tuple(tuple(b) for b in d["blocks"]),
                   frozenset(d["I"]), frozenset(d["J"]))


def zero_pattern(sys) -> ZeroPattern:
    n = sys.n
    return ZeroPattern(tuple(
        tuple(i != j and not is_identically_zero(sys.a[i][j]) for j in range(n)) for i in range(n)
    ))


def _successors(p: ZeroPattern):
    # edge j -> i iff nonzero[i][j]
    n = p.n
    return [[i for i in range(n) if p.nonzero[i][j]] for j in range(n)]


def strongly_connected_components(succ) -> list[list[int]]:
    """Iterative Tarjan; components come out in reverse topological order."""
    n = len(succ)
    index = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    stack: list[int] = []
    comps: list[list[int]] = []
    counter = 0
    for root in range(n):
        if index[root] != -1:
            continue
        work = [(root, 0)]
        while work:
            v, pos = work.pop()
            if pos == 0:
                index[v] = low[v] = counter
                counter += 1
                stack.append(v)
                on_stack[v] = True
            recurse = False
            nbrs = succ[v]
            while pos < len(nbrs):
                w = nbrs[pos]
                pos += 1
                if index[w] == -1:
                    work.append((v, pos))
                    work.append((w, 0))
                    recurse = True
                    break
                if on_stack[w]:
                    low[v] = min(low[v], index[w])
            if recurse:
                continue
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp.append(w)
                    if w == v:
                        break
                comps.append(sorted(comp))
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])
    return comps


def condense(p: ZeroPattern) -> BlockStructure:
    succ = _successors(p)
    comps = strongly_connected_components(succ)
    comp_of = [0] * p.n
    for c, members in enumerate(comps):
        for v in members:
            comp_of[v] = c
    out_edges = [set() for _ in comps]
    indeg = [0] * len(comps)
    for v in range(p.n):
        for w in succ[v]:
            a, b = comp_of[v], comp_of[w]
            if a != b and b not in out_edges[a]:
                out_edges[a].add(b)
                indeg[b] += 1
    heap = [(comps[c][0], c) for c in range(len(comps)) if indeg[c] == 0]
    heapq.heapify(heap)
    order = []
    while heap:
        _, c = heapq.heappop(heap)
        order.append(c)
        for b in out_edges[c]:
            indeg[b] -= 1
            if indeg[b] == 0:
                heapq.heappush(heap, (comps[b][0], b))
    blocks = tuple(tuple(comps[c]) for c in order)
    perm = tuple(v for b in blocks for v in b)
    I, J = _index_sets(blocks, p)
    return BlockStructure(perm, blocks, I, J)


def _index_sets(blocks, p: ZeroPattern):
    k = len(blocks)
    if k == 1:
        return frozenset({0}), frozenset({0})
    block_of = {v: b for b, members in enumerate(blocks) for v in members}
    has_in = [False] * k
    has_out = [False] * k
    for i in range(p.n):
        for j in range(p.n):
            if p.nonzero[i][j] and block_of[i] != block_of[j]:
                has_in[block_of[i]] = True  # block row of i has an off-diagonal entry
                has_out[block_of[j]] = True  # block column of j has an off-diagonal entry
    I = frozenset(b for b in range(k) if not has_in[b])
    J = frozenset(b for b in range(k) if not has_out[b])
    return I, J


def index_sets(b: BlockStructure, p: ZeroPattern):
    """(I, J): blocks whose off-diagonal block row (I) or column (J) vanishes."""
    members = sorted(v for blk in b.blocks for v in blk)
    if members != list(range(p.n)):
        raise ValueError("block structure does not partition the pattern's indices")
    if not is_block_lower_triangular(p, b):
        raise ValueError("block structure is not block lower triangular for this pattern")
    return _index_sets(b.blocks, p)


def is_block_lower_triangular(p: ZeroPattern, b: BlockStructure) -> bool:
    block_of = b.block_of()
    for i in range(p.n):
        for j in range(p.n):
            if p.nonzero[i][j] and block_of[j] > block_of[i]:
                return False
    return True


def is_irreducible_block(p: ZeroPattern, members: Sequence[int]) -> bool:
    """Every ordered pair inside ``members`` joined by a path within the block."""
    members = list(members)
    if len(members) == 1:
        return True
    inside = set(members)
    for src in members:
        seen = {src}
        frontier = [src]
        while frontier:
            v = frontier.pop()
            for w in inside:
                if w not in seen and p.nonzero[w][v]:
                    seen.add(w)
                    frontier.append(w)
        if seen != inside:
            return False
    return True


def structure_of(sys) -> tuple[ZeroPattern, BlockStructure]:
    p = zero_pattern(sys)
    return p, condense(p)
