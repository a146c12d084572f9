"""Brute-force reference implementations for differential testing.

Everything here is desk-scale by design and deliberately shares no algorithmic
machinery with the decomposition-based solver: the K4-minor test enumerates
vertex-to-branch-set assignments directly.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

from .multigraph import MultiGraph, delete_vertices


class OracleLimitError(ValueError):
    pass


@dataclass(frozen=True)
class OracleLimit:
    max_vertices: int = 10
    max_subset: int | None = None

    def check(self, n: int) -> None:
        if n > self.max_vertices:
            raise OracleLimitError(
                f"oracle limited to {self.max_vertices} vertices, got {n}"
            )


DEFAULT_LIMIT = OracleLimit()


def _simple_adj_masks(g: MultiGraph) -> tuple[list[int], list[int]]:
    verts = g.vertices
    idx = {v: i for i, v in enumerate(verts)}
    adj = [0] * len(verts)
    for _, u, v in g.iter_edges():
        adj[idx[u]] |= 1 << idx[v]
        adj[idx[v]] |= 1 << idx[u]
    return verts, adj


def _spans(members: int, allowed: int, adj: list[int]) -> bool:
    """True iff all 'members' bits lie in one component of the graph induced
    on 'allowed' (members must be a subset of allowed)."""
    if members == 0:
        return True
    start = members & -members
    reach = start
    while True:
        grow = 0
        m = reach
        while m:
            b = m & -m
            grow |= adj[b.bit_length() - 1]
            m ^= b
        new = reach | (grow & allowed)
        if new == reach:
            break
        reach = new
    return members & ~reach == 0


def minor_test_k4(g: MultiGraph, limit: OracleLimit = DEFAULT_LIMIT) -> bool:
    """True iff g has a K4 minor.

    Exhausts assignments of vertices to {unused, branch set 1..4}: the answer
    is yes iff some assignment yields four disjoint connected branch sets with
    every pair joined by an edge.  Branch sets are opened in vertex order,
    which quotients out the 4! symmetric relabelings.
    """
    n = g.num_vertices()
    limit.check(n)
    if n < 4:
        return False
    verts, adj = _simple_adj_masks(g)

    # fast path: a K4 subgraph is an assignment with singleton branch sets
    for quad in combinations(range(n), 4):
        ok = True
        for a, b in combinations(quad, 2):
            if not adj[a] >> b & 1:
                ok = False
                break
        if ok:
            return True

    full = (1 << n) - 1

    def feasible(classes: list[int], future: int) -> bool:
        for members in classes:
            if members and not _spans(members, members | future, adj):
                return False
        return True

    def complete(classes: list[int]) -> bool:
        if len(classes) < 4:
            return False
        for members in classes:
            if not members or not _spans(members, members, adj):
                return False
        for a, b in combinations(classes, 2):
            joined = False
            m = a
            while m:
                bit = m & -m
                if adj[bit.bit_length() - 1] & b:
                    joined = True
                    break
                m ^= bit
            if not joined:
                return False
        return True

    def rec(i: int, classes: list[int]) -> bool:
        if complete(classes):
            return True
        if i == n:
            return False
        remaining = n - i
        if 4 - len(classes) > remaining:
            return False
        future = (full >> i >> 1) << (i + 1) if i + 1 <= n else 0
        bit = 1 << i
        # join an existing class, open a new one, or stay unused
        for c in range(len(classes)):
            classes[c] |= bit
            if feasible(classes, future) and rec(i + 1, classes):
                return True
            classes[c] ^= bit
        if len(classes) < 4:
            classes.append(bit)
            if feasible(classes, future) and rec(i + 1, classes):
                return True
            classes.pop()
        if feasible(classes, future) and rec(i + 1, classes):
            return True
        return False

    return rec(0, [])


def min_cover(
    g: MultiGraph, limit: OracleLimit = DEFAULT_LIMIT
) -> tuple[int, set[int]]:
    """Smallest vertex set whose deletion leaves g K4-minor-free.

    Increasing-size subset enumeration, lexicographic tie-break.
    """
    limit.check(g.num_vertices())
    verts = g.vertices
    max_size = len(verts) if limit.max_subset is None else limit.max_subset
    for size in range(0, max_size + 1):
        for w in combinations(verts, size):
            if not minor_test_k4(delete_vertices(g, w), limit):
                return size, set(w)
    raise RuntimeError("unreachable: deleting all vertices is always a cover")


def min_disjoint_cover(
    g: MultiGraph, s_set, k: int, limit: OracleLimit = DEFAULT_LIMIT
) -> set[int] | None:
    """Smallest W from V minus s_set with |W| <= k-1 making g K4-minor-free,
    or None.  s_set must itself be a cover."""
    limit.check(g.num_vertices())
    s = set(s_set)
    if minor_test_k4(delete_vertices(g, s), limit):
        raise ValueError("s_set is not a K4-minor cover of g")
    f = [v for v in g.vertices if v not in s]
    budget = min(k - 1, len(f))
    for size in range(0, budget + 1):
        for w in combinations(f, size):
            if not minor_test_k4(delete_vertices(g, w), limit):
                return set(w)
    return None
