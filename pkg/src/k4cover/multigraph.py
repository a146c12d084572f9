"""Loopless undirected multigraph with stable vertex/edge ids.

Vertex ids are opaque non-negative integers allocated monotonically and never
reused within one lineage of derived graphs, so that solution lifting can map
vertices of reduced graphs back to their preimages. Edge multiplicity is kept
explicitly: every edge has its own id.
"""

from __future__ import annotations

from dataclasses import dataclass, field


class MultiGraph:
    """Undirected loopless multigraph."""

    __slots__ = ("_adj", "_edges", "_next_vertex_id", "_next_edge_id")

    def __init__(self):
        # vertex -> {edge id -> other endpoint}
        self._adj: dict[int, dict[int, int]] = {}
        # edge id -> (u, v) with u < v
        self._edges: dict[int, tuple[int, int]] = {}
        self._next_vertex_id = 0
        self._next_edge_id = 0

    # -- construction --------------------------------------------------------

    def add_vertex(self, v: int | None = None) -> int:
        if v is None:
            v = self._next_vertex_id
        if v in self._adj:
            raise ValueError(f"vertex {v} already present")
        self._adj[v] = {}
        self._next_vertex_id = max(self._next_vertex_id, v + 1)
        return v

    def add_edge(self, u: int, v: int) -> int:
        if u == v:
            raise ValueError("loops are not allowed")
        for w in (u, v):
            if w not in self._adj:
                self.add_vertex(w)
        eid = self._next_edge_id
        self._next_edge_id = eid + 1
        self._edges[eid] = (u, v) if u < v else (v, u)
        self._adj[u][eid] = v
        self._adj[v][eid] = u
        return eid

    @classmethod
    def from_edges(cls, edges, vertices=()) -> "MultiGraph":
        g = cls()
        for v in vertices:
            if v not in g._adj:
                g.add_vertex(v)
        for u, v in edges:
            g.add_edge(u, v)
        return g

    def copy(self) -> "MultiGraph":
        g = MultiGraph()
        g._adj = {v: dict(inc) for v, inc in self._adj.items()}
        g._edges = dict(self._edges)
        g._next_vertex_id = self._next_vertex_id
        g._next_edge_id = self._next_edge_id
        return g

    # -- mutation (used by the functional ops below) --------------------------

    def remove_edge(self, eid: int) -> None:
        u, v = self._edges.pop(eid)
        del self._adj[u][eid]
        del self._adj[v][eid]

    def remove_vertex(self, v: int) -> None:
        for eid in list(self._adj[v]):
            self.remove_edge(eid)
        del self._adj[v]

    # -- queries ---------------------------------------------------------------

    @property
    def vertices(self) -> list[int]:
        return sorted(self._adj)

    @property
    def edge_ids(self) -> list[int]:
        return sorted(self._edges)

    def has_vertex(self, v: int) -> bool:
        return v in self._adj

    def has_edge_id(self, eid: int) -> bool:
        return eid in self._edges

    def endpoints(self, eid: int) -> tuple[int, int]:
        return self._edges[eid]

    def num_vertices(self) -> int:
        return len(self._adj)

    def num_edges(self) -> int:
        return len(self._edges)

    def degree(self, v: int) -> int:
        """Degree counting edge multiplicity."""
        return len(self._adj[v])

    def neighbors(self, v: int) -> list[int]:
        """Distinct neighbors, sorted."""
        return sorted(set(self._adj[v].values()))

    def incident(self, v: int) -> dict[int, int]:
        """Edge id -> other endpoint for edges at v."""
        return self._adj[v]

    def edges_between(self, u: int, v: int) -> list[int]:
        if u not in self._adj or v not in self._adj:
            return []
        a, b = (u, v) if len(self._adj[u]) <= len(self._adj[v]) else (v, u)
        return sorted(eid for eid, w in self._adj[a].items() if w == b)

    def multiplicity(self, u: int, v: int) -> int:
        return len(self.edges_between(u, v))

    def iter_edges(self):
        """(eid, u, v) in increasing eid order."""
        for eid in sorted(self._edges):
            u, v = self._edges[eid]
            yield eid, u, v

    def edge_pairs(self) -> list[tuple[int, int]]:
        return [self._edges[eid] for eid in sorted(self._edges)]

    def __contains__(self, v: int) -> bool:
        return v in self._adj

    def __repr__(self):
        return f"MultiGraph(n={self.num_vertices()}, m={self.num_edges()})"

    def check_invariants(self) -> None:
        for eid, (u, v) in self._edges.items():
            assert u != v, "loop present"
            assert u in self._adj and v in self._adj, "dangling endpoint"
            assert self._adj[u].get(eid) == v and self._adj[v].get(eid) == u


@dataclass
class BlockCutForest:
    """Blocks (as edge-id sets) and cut vertices of a multigraph.

    ``blocks[i]`` is the sorted edge-id list of block i.  ``block_vertices[i]``
    is the sorted vertex list of block i.  A block and a cut vertex are
    adjacent iff the vertex lies in the block; orienting each component away
    from its root gives the oriented block tree.
    """

    blocks: list[list[int]]
    block_vertices: list[list[int]]
    cut_vertices: set[int]
    blocks_of_vertex: dict[int, list[int]]
    block_of_edge: dict[int, int]
    component_roots: list[int]  # smallest cut vertex per component, or -1 - block index

    def vertex_block_sets(self) -> dict[int, frozenset[int]]:
        return {v: frozenset(bs) for v, bs in self.blocks_of_vertex.items()}


def blocks_and_cuts(g: MultiGraph) -> BlockCutForest:
    """Hopcroft-Tarjan block decomposition, iterative, parallel-edge aware."""
    disc: dict[int, int] = {}
    low: dict[int, int] = {}
    timer = 0
    edge_stack: list[int] = []
    blocks: list[list[int]] = []
    cut_vertices: set[int] = set()
    block_of_edge: dict[int, int] = {}
    component_of_vertex: dict[int, int] = {}
    comp_id = -1

    for root in g.vertices:
        if root in disc:
            continue
        comp_id += 1
        disc[root] = low[root] = timer
        timer += 1
        component_of_vertex[root] = comp_id
        root_children = 0
        # stack frames: (vertex, parent edge id, iterator over incident items)
        stack = [(root, -1, iter(sorted(g.incident(root).items())))]
        while stack:
            v, pe, it = stack[-1]
            advanced = False
            for eid, w in it:
                if eid == pe:
                    continue
                if w not in disc:
                    disc[w] = low[w] = timer
                    timer += 1
                    component_of_vertex[w] = comp_id
                    edge_stack.append(eid)
                    if v == root:
                        root_children += 1
                    stack.append((w, eid, iter(sorted(g.incident(w).items()))))
                    advanced = True
                    break
                elif disc[w] < disc[v]:
                    # back edge (or parallel edge to an ancestor)
                    edge_stack.append(eid)
                    if disc[w] < low[v]:
                        low[v] = disc[w]
            if advanced:
                continue
            stack.pop()
            if stack:
                u, _, _ = stack[-1]
                if low[v] < low[u]:
                    low[u] = low[v]
                if low[v] >= disc[u]:
                    # u closes a block; pop edges down to (and incl.) edge pe
                    blk: list[int] = []
                    while edge_stack:
                        eid2 = edge_stack.pop()
                        blk.append(eid2)
                        if eid2 == pe:
                            break
                    bidx = len(blocks)
                    blocks.append(sorted(blk))
                    for eid2 in blk:
                        block_of_edge[eid2] = bidx
                    if u != root:
                        cut_vertices.add(u)
        if root_children > 1:
            cut_vertices.add(root)

    block_vertices: list[list[int]] = []
    blocks_of_vertex: dict[int, list[int]] = {v: [] for v in g.vertices}
    for bidx, blk in enumerate(blocks):
        vs = set()
        for eid in blk:
            u, v = g.endpoints(eid)
            vs.add(u)
            vs.add(v)
        vlist = sorted(vs)
        block_vertices.append(vlist)
        for v in vlist:
            blocks_of_vertex[v].append(bidx)

    # orientation root per component: smallest cut vertex, else -1 - (block idx)
    n_comp = comp_id + 1
    roots = [None] * n_comp
    for v in sorted(cut_vertices):
        c = component_of_vertex[v]
        if roots[c] is None:
            roots[c] = v
    for bidx, vlist in enumerate(block_vertices):
        if vlist:
            c = component_of_vertex[vlist[0]]
            if roots[c] is None:
                roots[c] = -1 - bidx
    component_roots = [r for r in roots if r is not None]

    return BlockCutForest(
        blocks=blocks,
        block_vertices=block_vertices,
        cut_vertices=cut_vertices,
        blocks_of_vertex=blocks_of_vertex,
        block_of_edge=block_of_edge,
        component_roots=component_roots,
    )


def contract_edge(g: MultiGraph, eid: int) -> tuple[MultiGraph, dict[int, int]]:
    """Contract edge eid; returns (new graph, merge record old id -> new id).

    The merged vertex gets a fresh id. Loops arising from the merge are
    dropped, parallel edges are kept.
    """
    if not g.has_edge_id(eid):
        raise ValueError(f"unknown edge id {eid}")
    u, v = g.endpoints(eid)
    h = g.copy()
    w = h.add_vertex()
    for x in (u, v):
        for e2 in list(h._adj[x]):
            other = h._adj[x][e2]
            h.remove_edge(e2)
            if other in (u, v):
                continue  # loop after merge
            nid = h._next_edge_id
            h._next_edge_id = nid + 1
            h._edges[nid] = (w, other) if w < other else (other, w)
            h._adj[w][nid] = other
            h._adj[other][nid] = w
    del h._adj[u]
    del h._adj[v]
    return h, {u: w, v: w}


def boundary(g: MultiGraph, x) -> set[int]:
    """Vertices of x adjacent to at least one vertex outside x."""
    xs = set(x)
    for v in xs:
        if v not in g._adj:
            raise ValueError(f"vertex {v} not in graph")
    out = set()
    for v in xs:
        for w in g._adj[v].values():
            if w not in xs:
                out.add(v)
                break
    return out


def induced_subgraph(g: MultiGraph, x) -> MultiGraph:
    xs = set(x)
    for v in xs:
        if v not in g._adj:
            raise ValueError(f"vertex {v} not in graph")
    h = MultiGraph()
    h._adj = {v: {} for v in xs}
    for eid, (u, v) in g._edges.items():
        if u in xs and v in xs:
            h._edges[eid] = (u, v)
            h._adj[u][eid] = v
            h._adj[v][eid] = u
    h._next_vertex_id = g._next_vertex_id
    h._next_edge_id = g._next_edge_id
    return h


def delete_vertices(g: MultiGraph, x) -> MultiGraph:
    xs = set(x)
    for v in xs:
        if v not in g._adj:
            raise ValueError(f"vertex {v} not in graph")
    return induced_subgraph(g, set(g._adj) - xs)


def connected_components(g: MultiGraph) -> list[set[int]]:
    """Maximal connected vertex sets, ordered by smallest member."""
    seen: set[int] = set()
    comps: list[set[int]] = []
    for s in g.vertices:
        if s in seen:
            continue
        comp = {s}
        queue = [s]
        while queue:
            v = queue.pop()
            for w in g._adj[v].values():
                if w not in comp:
                    comp.add(w)
                    queue.append(w)
        seen |= comp
        comps.append(comp)
    return comps


def is_connected(g: MultiGraph) -> bool:
    n = g.num_vertices()
    if n <= 1:
        return True
    comps = connected_components(g)
    return len(comps) == 1
