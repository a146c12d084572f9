"""Series-parallel recognition, canonical SP-trees, extended SP-decompositions,
K4-minor-freeness tests and K4 certificate extraction.

The recognition engine is reduction-based: series-merge unprotected degree-2
vertices, collapse parallel edge pairs, and read the composition tree off the
merge history.  A biconnected multigraph is series-parallel iff the reduction
dissolves it to a single edge; protecting one designated vertex from series
merges makes it a terminal of the final edge, which forces the canonical
P-rooted shape for nontrivial blocks.
"""

from __future__ import annotations

import heapq
from collections import deque
from dataclasses import dataclass, field

from .multigraph import (
    MultiGraph,
    blocks_and_cuts,
    connected_components,
    is_connected,
)


class NotDecomposableError(ValueError):
    """Extended SP-decomposition requested for a graph with a K4 minor."""


# ---------------------------------------------------------------------------
# SP-trees


class SPNode:
    """Node of an SP-tree.

    ``x`` is the terminal pair; for S-nodes it is ordered along the series
    path (children run x[0] -> x[1]), otherwise sorted.  Children of S-nodes
    built by the reduction engine live in a deque so series compositions can
    splice small-into-large.
    """

    __slots__ = ("kind", "x", "children", "edge_id")

    def __init__(self, kind, x, children=(), edge_id=None):
        self.kind = kind  # 'S' | 'P' | 'E'
        self.x = tuple(x)
        self.children = children if isinstance(children, deque) else list(children)
        self.edge_id = edge_id

    @property
    def terminals(self) -> frozenset:
        return frozenset(self.x)

    def leaves(self):
        out = []
        stack = [self]
        while stack:
            t = stack.pop()
            if t.kind == "E":
                out.append(t)
            else:
                stack.extend(t.children)
        out.sort(key=lambda l: l.edge_id)
        return out

    def structure(self):
        """Hashable structural form (iterative; used for test equality)."""
        res: dict[int, object] = {}
        stack = [(self, False)]
        while stack:
            node, done = stack.pop()
            if node.kind == "E":
                res[id(node)] = ("E", tuple(sorted(node.x)), node.edge_id)
                continue
            if not done:
                stack.append((node, True))
                stack.extend((c, False) for c in node.children)
                continue
            res[id(node)] = (
                node.kind,
                tuple(sorted(node.x)),
                tuple(res[id(c)] for c in node.children),
            )
        return res[id(self)]

    def __eq__(self, other):
        return isinstance(other, SPNode) and self.structure() == other.structure()

    def __hash__(self):
        return hash(self.structure())

    def __repr__(self):
        return f"SPNode({self.kind}, x={self.x}, deg={len(self.children)})"


def _iter_span(t: SPNode, src, dst):
    """Items of t read in src->dst order (one flattened level for S nodes)."""
    if t.kind != "S":
        return (t,)
    if t.x == (src, dst):
        return iter(t.children)
    return reversed(t.children)


def _series_compose(t1: SPNode, t2: SPNode, a, w, b) -> SPNode:
    """Series composition at w of t1 spanning {a,w} and t2 spanning {w,b}.

    Splices the smaller S-child list into the larger one, so repeated series
    merges stay near-linear in total."""
    s1, s2 = t1.kind == "S", t2.kind == "S"
    if not s1 and not s2:
        return SPNode("S", (a, b), deque((t1, t2)))
    if s1 and (not s2 or len(t1.children) >= len(t2.children)):
        base, base_is_t1 = t1, True
    else:
        base, base_is_t1 = t2, False
    if base_is_t1:
        if base.x == (a, w):
            base.children.extend(_iter_span(t2, w, b))
            base.x = (a, b)
        else:
            base.children.extendleft(_iter_span(t2, w, b))
            base.x = (b, a)
    else:
        if base.x == (w, b):
            base.children.extendleft(_iter_span(t1, w, a))
            base.x = (a, b)
        else:
            base.children.extend(_iter_span(t1, w, a))
            base.x = (b, a)
    return base


def _sp_reduce(adj, wedges, trees, protected, next_wid):
    """Run series/parallel reductions to exhaustion (in place).

    adj: vertex -> {work-edge id -> other endpoint}
    wedges: work-edge id -> (u, v) normalized
    trees: work-edge id -> SPNode, or None to skip tree building
    protected: vertices excluded from series reduction
    """
    pair_edges: dict[tuple[int, int], set[int]] = {}
    for wid, p in wedges.items():
        pair_edges.setdefault(p, set()).add(wid)

    par_heap = [p for p, s in pair_edges.items() if len(s) >= 2]
    heapq.heapify(par_heap)
    ser_heap = [v for v, inc in adj.items() if len(inc) == 2 and v not in protected]
    heapq.heapify(ser_heap)

    def add_work_edge(u, v, tree):
        nonlocal next_wid
        wid = next_wid
        next_wid += 1
        p = (u, v) if u < v else (v, u)
        wedges[wid] = p
        adj[u][wid] = v
        adj[v][wid] = u
        bucket = pair_edges.setdefault(p, set())
        bucket.add(wid)
        if len(bucket) >= 2:
            heapq.heappush(par_heap, p)
        if trees is not None:
            trees[wid] = tree
        return wid

    def drop_work_edge(wid):
        p = wedges.pop(wid)
        u, v = p
        del adj[u][wid]
        del adj[v][wid]
        pair_edges[p].discard(wid)
        for z in (u, v):
            if len(adj[z]) == 2 and z not in protected:
                heapq.heappush(ser_heap, z)
        if trees is not None:
            return trees.pop(wid)
        return None

    while par_heap or ser_heap:
        if par_heap:
            p = heapq.heappop(par_heap)
            bucket = pair_edges.get(p, ())
            if len(bucket) < 2:
                continue
            w1, w2 = sorted(bucket)[:2]
            u, v = p
            t1 = drop_work_edge(w1)
            t2 = drop_work_edge(w2)
            tree = SPNode("P", p, [t1, t2]) if trees is not None else None
            add_work_edge(u, v, tree)
            continue

        w = heapq.heappop(ser_heap)
        if w not in adj or w in protected or len(adj[w]) != 2:
            continue
        (e1, a), (e2, b) = sorted(adj[w].items())
        if a == b:
            # two parallel edges through w; the parallel rule owns this
            pr = (w, a) if w < a else (a, w)
            if len(pair_edges.get(pr, ())) >= 2:
                heapq.heappush(par_heap, pr)
            continue
        t1 = drop_work_edge(e1)
        t2 = drop_work_edge(e2)
        del adj[w]
        tree = _series_compose(t1, t2, a, w, b) if trees is not None else None
        add_work_edge(a, b, tree)

    return next_wid


def _make_state(edge_triples, with_trees):
    adj: dict[int, dict[int, int]] = {}
    wedges: dict[int, tuple[int, int]] = {}
    trees = {} if with_trees else None
    max_eid = -1
    for eid, u, v in edge_triples:
        adj.setdefault(u, {})[eid] = v
        adj.setdefault(v, {})[eid] = u
        p = (u, v) if u < v else (v, u)
        wedges[eid] = p
        if with_trees:
            trees[eid] = SPNode("E", p, edge_id=eid)
        if eid > max_eid:
            max_eid = eid
    return adj, wedges, trees, max_eid + 1


def _edges_dissolve(edge_triples, protected=frozenset()) -> bool:
    """True iff the (connected) edge set reduces to a single edge."""
    adj, wedges, trees, nw = _make_state(edge_triples, with_trees=False)
    _sp_reduce(adj, wedges, trees, protected, nw)
    return len(wedges) == 1


def is_k4_minor_free(g: MultiGraph) -> bool:
    """True iff g has no K4 minor: every block must be series-parallel."""
    bcf = blocks_and_cuts(g)
    for blk in bcf.blocks:
        if len(blk) <= 1:
            continue
        triples = [(eid,) + g.endpoints(eid) for eid in blk]
        if not _edges_dissolve(triples):
            return False
    return True


def recognize_sp(g: MultiGraph, s: int, t: int) -> SPNode | None:
    """SP-tree of (g, s, t) if g is two-terminal series-parallel with these
    terminals, else None."""
    if not g.has_vertex(s) or not g.has_vertex(t):
        raise ValueError("terminal not in graph")
    if not is_connected(g):
        raise ValueError("recognize_sp requires a connected graph")
    if s == t or g.num_edges() == 0:
        return None
    adj, wedges, trees, nw = _make_state(
        ((eid, u, v) for eid, u, v in g.iter_edges()), with_trees=True
    )
    _sp_reduce(adj, wedges, trees, {s, t}, nw)
    if len(wedges) != 1:
        return None
    wid, (u, v) = next(iter(wedges.items()))
    if {u, v} != {s, t}:
        return None
    return _normalize(trees[wid])


def _block_sptree(edge_triples, designated: int) -> SPNode | None:
    """SP-tree of a biconnected edge set with the designated vertex as a root
    terminal (root is a P-node unless the block is a single edge).  None if
    the block is not series-parallel."""
    if len(edge_triples) == 1:
        eid, u, v = edge_triples[0]
        return SPNode("E", (min(u, v), max(u, v)), edge_id=eid)
    adj, wedges, trees, nw = _make_state(edge_triples, with_trees=True)
    _sp_reduce(adj, wedges, trees, {designated}, nw)
    if len(wedges) != 1:
        return None
    wid = next(iter(wedges))
    return trees[wid]


# ---------------------------------------------------------------------------
# Canonical form


def _graph_of_tree(t: SPNode) -> MultiGraph:
    """Materialize the represented multigraph, preserving leaf edge ids."""
    g = MultiGraph()
    max_v = -1
    max_e = -1
    for leaf in t.leaves():
        u, v = leaf.x
        for z in (u, v):
            if z not in g._adj:
                g._adj[z] = {}
                max_v = max(max_v, z)
        eid = leaf.edge_id
        g._edges[eid] = (u, v) if u < v else (v, u)
        g._adj[u][eid] = v
        g._adj[v][eid] = u
        max_e = max(max_e, eid)
    g._next_vertex_id = max_v + 1
    g._next_edge_id = max_e + 1
    return g


def _normalize(t: SPNode) -> SPNode:
    """Flatten S-chains, binarize P-nodes (children ordered by smallest leaf
    edge id), collapse unary nodes.  Iterative; returns a fresh tree sharing
    leaf nodes."""
    res: dict[int, SPNode] = {}
    mineid: dict[int, int] = {}
    stack = [(t, False)]
    while stack:
        node, done = stack.pop()
        if node.kind == "E":
            res[id(node)] = node
            mineid[id(node)] = node.edge_id
            continue
        if not done:
            stack.append((node, True))
            stack.extend((c, False) for c in node.children)
            continue
        pairs = [(res[id(c)], mineid[id(c)]) for c in node.children]
        if len(pairs) == 1:
            res[id(node)] = pairs[0][0]
            mineid[id(node)] = pairs[0][1]
            continue
        mineid[id(node)] = min(e for _, e in pairs)
        if node.kind == "S":
            flat: list[SPNode] = []
            cur = node.x[0]
            for c, _ in pairs:
                ends = set(c.x)
                nxt = (ends - {cur}).pop() if len(ends) == 2 else cur
                if c.kind == "S":
                    flat.extend(_iter_span(c, cur, nxt))
                else:
                    flat.append(c)
                cur = nxt
            res[id(node)] = SPNode("S", (node.x[0], node.x[-1]), flat)
        else:
            pairs.sort(key=lambda p: p[1])
            x = tuple(sorted(node.x))
            while len(pairs) > 2:
                (a, ea) = pairs.pop(0)
                (b, eb) = pairs.pop(0)
                pairs.insert(0, (SPNode("P", x, [a, b]), min(ea, eb)))
            res[id(node)] = SPNode("P", x, [c for c, _ in pairs])
    out = res[id(t)]
    return out


def canonicalize(t: SPNode, s: int) -> SPNode:
    """Canonical SP-tree: S-nodes have no S-children, P-nodes are binary and,
    when the represented graph is biconnected (and more than a lone edge), the
    root is a P-node with s among its terminals.  The represented graph is
    unchanged."""
    out = _normalize(t)
    g = _graph_of_tree(out)
    if g.num_edges() >= 2:
        bcf = blocks_and_cuts(g)
        if is_connected(g) and not bcf.cut_vertices and not (
            out.kind == "P" and s in out.x
        ):
            triples = [(eid,) + g.endpoints(eid) for eid in g.edge_ids]
            rebuilt = _block_sptree(triples, s)
            if rebuilt is None:
                raise ValueError("tree does not represent a series-parallel graph")
            out = _normalize(rebuilt)
    return out


# ---------------------------------------------------------------------------
# Extended SP-decomposition


CUT, SNODE, PNODE, EDGE, ISOLATED = "cut", "S", "P", "edge", "isolated"


class DecompNode:
    __slots__ = ("id", "kind", "x", "parent", "children", "edge_id", "block_id", "depth")

    def __init__(self, id, kind, x, parent=None, edge_id=None, block_id=None):
        self.id = id
        self.kind = kind
        self.x = tuple(x)
        self.parent = parent
        self.children: list[int] = []
        self.edge_id = edge_id
        self.block_id = block_id
        self.depth = 0

    def __repr__(self):
        return f"DecompNode({self.id}, {self.kind}, X={self.x})"


class ExtendedSPDecomposition:
    """Forest of block SP-trees linked through cut nodes, one tree per
    connected component of the decomposed graph.  Carries the mark bits used
    by the branch-or-reduce sweep."""

    def __init__(self, graph: MultiGraph):
        self.graph = graph
        self.nodes: list[DecompNode] = []
        self.roots: list[int] = []
        self._marks: list[bool] = []
        self._unmarked = 0
        self._v_cache: dict[int, frozenset] = {}
        self._e_cache: dict[int, frozenset] = {}
        self._vb_cache: dict[int, frozenset] = {}
        self._order: list[int] | None = None

    # construction helpers --------------------------------------------------

    def _new_node(self, kind, x, parent=None, edge_id=None, block_id=None) -> int:
        nid = len(self.nodes)
        node = DecompNode(nid, kind, x, parent, edge_id, block_id)
        self.nodes.append(node)
        self._marks.append(False)
        self._unmarked += 1
        if parent is not None:
            self.nodes[parent].children.append(nid)
            node.depth = self.nodes[parent].depth + 1
        return nid

    def _attach_sptree(self, t: SPNode, parent: int | None, block_id: int) -> int:
        kinds = {"S": SNODE, "P": PNODE, "E": EDGE}
        root_nid = None
        stack = [(t, parent)]
        while stack:
            node, par = stack.pop()
            nid = self._new_node(
                kinds[node.kind],
                tuple(sorted(node.x)),
                par,
                edge_id=node.edge_id,
                block_id=block_id,
            )
            if root_nid is None:
                root_nid = nid
            for c in reversed(node.children):
                stack.append((c, nid))
        return root_nid

    # queries ----------------------------------------------------------------

    def subtree(self, nid: int):
        stack = [nid]
        while stack:
            i = stack.pop()
            yield i
            stack.extend(self.nodes[i].children)

    def v_alpha(self, nid: int) -> frozenset:
        got = self._v_cache.get(nid)
        if got is None:
            vs = set()
            for i in self.subtree(nid):
                vs.update(self.nodes[i].x)
            got = frozenset(vs)
            self._v_cache[nid] = got
        return got

    def e_alpha(self, nid: int) -> frozenset:
        got = self._e_cache.get(nid)
        if got is None:
            es = set()
            for i in self.subtree(nid):
                if self.nodes[i].kind == EDGE:
                    es.add(self.nodes[i].edge_id)
            got = frozenset(es)
            self._e_cache[nid] = got
        return got

    def y_alpha(self, nid: int) -> frozenset:
        return self.v_alpha(nid) - set(self.nodes[nid].x)

    def v_block_alpha(self, nid: int) -> frozenset:
        """Vertex set of the SP-graph represented by the same-block subtree."""
        got = self._vb_cache.get(nid)
        if got is None:
            vs = set()
            stack = [nid]
            while stack:
                i = stack.pop()
                node = self.nodes[i]
                if node.kind == CUT and i != nid:
                    continue
                vs.update(node.x)
                stack.extend(node.children)
            got = frozenset(vs)
            self._vb_cache[nid] = got
        return got

    # marks -------------------------------------------------------------------

    def mark(self, nid: int) -> None:
        if not self._marks[nid]:
            self._marks[nid] = True
            self._unmarked -= 1

    def is_marked(self, nid: int) -> bool:
        return self._marks[nid]

    def all_marked(self) -> bool:
        return self._unmarked == 0

    def reset_marks(self) -> None:
        self._marks = [False] * len(self.nodes)
        self._unmarked = len(self.nodes)

    def unmarked_deepest_first(self):
        if self._order is None:
            self._order = sorted(
                range(len(self.nodes)), key=lambda i: (-self.nodes[i].depth, i)
            )
        for i in self._order:
            if not self._marks[i]:
                yield i

    # diagnostics --------------------------------------------------------------

    def check_invariants(self) -> None:
        g = self.graph
        union_x = set()
        for node in self.nodes:
            union_x.update(node.x)
            if node.kind == CUT:
                assert len(node.x) == 1
            if node.kind == PNODE:
                assert len(node.children) == 2, "P-node not binary"
            if node.kind == SNODE:
                for c in node.children:
                    assert self.nodes[c].kind != SNODE, "S-node has S-child"
        assert union_x == set(g.vertices), "labels do not cover the graph"
        for node in self.nodes:
            va = self.v_alpha(node.id)
            ea = self.e_alpha(node.id)
            if len(va) > 1:
                adj: dict[int, list[int]] = {v: [] for v in va}
                for eid in ea:
                    u, v = g.endpoints(eid)
                    adj[u].append(v)
                    adj[v].append(u)
                start = next(iter(va))
                seen = {start}
                stack = [start]
                while stack:
                    v = stack.pop()
                    for w in adj[v]:
                        if w not in seen:
                            seen.add(w)
                            stack.append(w)
                assert seen == va, f"G_alpha disconnected at node {node.id}"
            xa = set(node.x)
            for v in va:
                if v in xa:
                    continue
                for w in g.incident(v).values():
                    assert w in va, f"boundary leak at node {node.id} vertex {v}"

    def to_dot(self) -> str:
        lines = ["digraph decomposition {"]
        for node in self.nodes:
            label = f"{node.kind}:{','.join(map(str, node.x))}"
            lines.append(f'  n{node.id} [label="{label}"];')
        for node in self.nodes:
            for c in node.children:
                lines.append(f"  n{node.id} -> n{c};")
        lines.append("}")
        return "\n".join(lines)


def build_extended_decomposition(g: MultiGraph) -> ExtendedSPDecomposition:
    """Extended SP-decomposition of a K4-minor-free multigraph (a forest,
    one tree per connected component; isolated vertices become leaf nodes of
    their own)."""
    dec = ExtendedSPDecomposition(g)
    bcf = blocks_and_cuts(g)

    def block_tree(bidx: int, designated: int) -> SPNode:
        triples = [(eid,) + g.endpoints(eid) for eid in bcf.blocks[bidx]]
        t = _block_sptree(triples, designated)
        if t is None:
            raise NotDecomposableError("input has a K4 minor")
        return _normalize(t)

    for comp in connected_components(g):
        if len(comp) == 1 and not g.incident(next(iter(comp))):
            v = next(iter(comp))
            dec.roots.append(dec._new_node(ISOLATED, (v,)))
            continue
        comp_cuts = sorted(v for v in comp if v in bcf.cut_vertices)
        if not comp_cuts:
            bidx = bcf.blocks_of_vertex[min(comp)][0]
            dec.roots.append(dec._attach_sptree(block_tree(bidx, min(comp)), None, bidx))
            continue
        c_root = comp_cuts[0]
        root_nid = dec._new_node(CUT, (c_root,))
        dec.roots.append(root_nid)
        cut_nodes = {c_root: root_nid}
        done_blocks = set()
        queue = deque([c_root])
        while queue:
            c = queue.popleft()
            cnid = cut_nodes[c]
            for bidx in bcf.blocks_of_vertex[c]:
                if bidx in done_blocks:
                    continue
                done_blocks.add(bidx)
                broot = dec._attach_sptree(block_tree(bidx, c), cnid, bidx)
                needed = {
                    v
                    for v in bcf.block_vertices[bidx]
                    if v != c and v in bcf.cut_vertices
                }
                if not needed:
                    continue
                best: dict[int, int] = {}
                for i in dec.subtree(broot):
                    node = dec.nodes[i]
                    if node.kind != EDGE:
                        continue
                    for v in node.x:
                        if v in needed:
                            cur = best.get(v)
                            if cur is None or node.edge_id < dec.nodes[cur].edge_id:
                                best[v] = i
                for c2 in sorted(needed):
                    cut_nodes[c2] = dec._new_node(CUT, (c2,), parent=best[c2])
                    queue.append(c2)
    return dec


# ---------------------------------------------------------------------------
# K4 witnesses


@dataclass(frozen=True)
class K4Witness:
    """A K4 model: four branch sets plus six pairwise internally-disjoint
    connecting paths (path (i, j) runs from branch set i to branch set j)."""

    branch_sets: tuple[frozenset, ...]
    paths: dict[tuple[int, int], tuple[int, ...]] = field(hash=False, default_factory=dict)

    def vertices(self) -> set[int]:
        out = set()
        for bs in self.branch_sets:
            out |= set(bs)
        for p in self.paths.values():
            out |= set(p)
        return out


def verify_witness(g: MultiGraph, w: K4Witness) -> bool:
    """True iff w is a valid K4 model in g."""
    if len(w.branch_sets) != 4:
        return False
    allv: set[int] = set()
    for bs in w.branch_sets:
        if not bs:
            return False
        for v in bs:
            if not g.has_vertex(v) or v in allv:
                return False
            allv.add(v)
        if len(bs) > 1:
            start = next(iter(bs))
            seen = {start}
            stack = [start]
            while stack:
                v = stack.pop()
                for u in g.incident(v).values():
                    if u in bs and u not in seen:
                        seen.add(u)
                        stack.append(u)
            if seen != set(bs):
                return False
    if set(w.paths) != {(i, j) for i in range(4) for j in range(i + 1, 4)}:
        return False
    used_internal: set[int] = set()
    for (i, j), path in w.paths.items():
        if len(path) < 2 or len(set(path)) != len(path):
            return False
        if path[0] not in w.branch_sets[i] or path[-1] not in w.branch_sets[j]:
            return False
        for a, b in zip(path, path[1:]):
            if not g.has_vertex(a) or not g.has_vertex(b) or g.multiplicity(a, b) < 1:
                return False
        for v in path[1:-1]:
            if v in allv or v in used_internal:
                return False
            used_internal.add(v)
    return True


def find_k4_model(g: MultiGraph) -> K4Witness | None:
    """None iff g is K4-minor-free; otherwise a verified witness.

    Deletes edges greedily while a K4 minor survives; the edge-minimal
    remainder is exactly a K4-subdivision, which is read off directly."""
    if is_k4_minor_free(g):
        return None
    h = g.copy()
    for eid in list(h.edge_ids):
        u, v = h.endpoints(eid)
        h.remove_edge(eid)
        if is_k4_minor_free(h):
            # the edge is needed, put it back
            h._edges[eid] = (u, v) if u < v else (v, u)
            h._adj[u][eid] = v
            h._adj[v][eid] = u
    for v in list(h.vertices):
        if h.degree(v) == 0:
            h.remove_vertex(v)

    branch = sorted(v for v in h.vertices if h.degree(v) == 3)
    assert len(branch) == 4, "edge-minimal remainder is not a K4-subdivision"
    assert all(h.degree(v) in (2, 3) for v in h.vertices)
    index = {v: i for i, v in enumerate(branch)}

    paths: dict[tuple[int, int], tuple[int, ...]] = {}
    used_edges: set[int] = set()
    for a in branch:
        for eid0 in sorted(h.incident(a)):
            if eid0 in used_edges:
                continue
            path = [a]
            prev_edge, cur = eid0, h.incident(a)[eid0]
            used_edges.add(eid0)
            while h.degree(cur) == 2:
                path.append(cur)
                nxt = [(e, o) for e, o in sorted(h.incident(cur).items()) if e != prev_edge]
                prev_edge, cur = nxt[0]
                used_edges.add(prev_edge)
            path.append(cur)
            i, j = index[a], index[cur]
            key = (min(i, j), max(i, j))
            assert i != j and key not in paths
            paths[key] = tuple(path) if i < j else tuple(reversed(path))
    assert len(paths) == 6
    witness = K4Witness(tuple(frozenset({v}) for v in branch), paths)
    assert verify_witness(g, witness)
    return witness
