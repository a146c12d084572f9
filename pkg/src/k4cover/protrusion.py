"""Protrusion detection and disposal.

A protrusion here is the vertex set of the SP-graph under a large P-node of
the decomposition sweep: its interior avoids S and its boundary in the whole
graph has at most four vertices.  Disposal is a configurable strategy:

* ``branch`` (default): exact and conservative.  If S plus the protrusion
  already holds a K4 minor, branch on the witness; otherwise the node is
  simply marked and the sweep moves on.
* ``replace`` (experimental): compute a boundary-rooted-minor signature of
  the protrusion, swap it for the smallest cataloged graph with the same
  signature, and re-derive the concrete cover afterwards with the branch
  strategy.  Every replacement is cross-checked against the brute-force
  oracle when the instance is small enough.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from itertools import permutations

from .multigraph import MultiGraph, boundary, delete_vertices, induced_subgraph
from .decompose import PNODE, find_k4_model, is_k4_minor_free
from .rules import Instance, RuleError
from . import oracle as oracle_mod

log = logging.getLogger("k4cover.protrusion")


class ProtrusionError(AssertionError):
    """Boundary bound promised by the sweep context failed."""


@dataclass(frozen=True)
class ProtrusionConfig:
    threshold: int = 64  # stand-in for the existential size bound
    strategy: str = "branch"  # 'branch' | 'replace'
    replace_size_cap: int = 12  # largest protrusion the signature machinery accepts
    catalog_extra: int = 2  # extra non-boundary vertices allowed in replacements

    def __post_init__(self):
        if self.threshold < 5:
            raise ValueError("threshold must be at least 5")
        if self.strategy not in ("branch", "replace"):
            raise ValueError(f"unknown strategy {self.strategy!r}")


@dataclass(frozen=True)
class Protrusion:
    x_set: frozenset
    boundary: frozenset
    node: int  # owning P-node id in the decomposition


@dataclass(frozen=True)
class DisposeResult:
    instances: tuple
    marked: bool = False
    replaced: bool = False
    k_offset: int = 0
    note: str = ""


@dataclass(frozen=True)
class ReplaceStep:
    """Trace record for a protrusion replacement.  Solutions cannot be lifted
    through it directly; the solver re-derives covers with the branch
    strategy instead."""

    x0: frozenset
    boundary: tuple
    new_vertices: tuple
    new_edges: tuple  # ((edge id, u, v), ...)
    k_offset: int


def detect(inst: Instance, decomp, alpha: int, cfg: ProtrusionConfig) -> Protrusion | None:
    """Protrusion at P-node alpha if its block subgraph is large enough."""
    node = decomp.nodes[alpha]
    if node.kind != PNODE:
        raise RuleError("protrusions are detected at P-nodes only")
    xs = decomp.v_block_alpha(alpha)
    if len(xs) < cfg.threshold:
        return None
    if xs & inst.s_set:
        raise ProtrusionError("protrusion intersects S")
    bd = frozenset(boundary(inst.g, xs))
    if len(bd - set(node.x)) > 2:
        raise ProtrusionError(
            f"boundary beyond the node label has {len(bd - set(node.x))} vertices"
        )
    if len(bd) > 4:
        raise ProtrusionError("protrusion boundary exceeds 4")
    if not is_k4_minor_free(induced_subgraph(inst.g, xs)):
        raise ProtrusionError("protrusion interior is not treewidth-2")
    return Protrusion(frozenset(xs), bd, alpha)


# ---------------------------------------------------------------------------
# Rooted-minor signatures (replace strategy)

_SIZE_CAP = 8


def _canon(n: int, b: int, edges: frozenset) -> tuple:
    """Canonical code of a simple graph on 0..n-1 whose first b vertices are
    individually-labeled roots; non-roots are interchangeable."""
    if n <= b + 1:
        return (n, b, tuple(sorted(edges)))
    adj = [set() for _ in range(n)]
    for i, j in edges:
        adj[i].add(j)
        adj[j].add(i)
    color = [v if v < b else b for v in range(n)]
    while True:
        sigs = {}
        for v in range(b, n):
            sigs[v] = (color[v], tuple(sorted(color[w] for w in adj[v])))
        ranking = {s: b + r for r, s in enumerate(sorted(set(sigs.values())))}
        new = color[:b] + [ranking[sigs[v]] for v in range(b, n)]
        if new == color:
            break
        color = new
    classes: dict[int, list[int]] = {}
    for v in range(b, n):
        classes.setdefault(color[v], []).append(v)
    fixed_order = sorted(range(b, n), key=lambda v: (color[v], v))
    if all(len(c) == 1 for c in classes.values()):
        relab = {v: b + i for i, v in enumerate(fixed_order)}
        for v in range(b):
            relab[v] = v
        code = tuple(
            sorted(tuple(sorted((relab[i], relab[j]))) for i, j in edges)
        )
        return (n, b, code)
    # small ambiguous classes: brute-force the minimum code
    best = None
    groups = [classes[c] for c in sorted(classes)]
    def rec(gi, mapping):
        nonlocal best
        if gi == len(groups):
            relab = dict(mapping)
            for v in range(b):
                relab[v] = v
            code = tuple(
                sorted(tuple(sorted((relab[i], relab[j]))) for i, j in edges)
            )
            if best is None or code < best:
                best = code
            return
        start = b + sum(len(g) for g in groups[:gi])
        for perm in permutations(groups[gi]):
            m2 = dict(mapping)
            for off, v in enumerate(perm):
                m2[v] = start + off
            rec(gi + 1, m2)
    rec(0, {})
    return (n, b, best)


def _drop_isolated(n, b, edges):
    used = set(range(b))
    for i, j in edges:
        used.add(i)
        used.add(j)
    if len(used) == n:
        return n, edges
    keep = sorted(used)
    relab = {v: i for i, v in enumerate(keep)}
    return len(keep), frozenset(
        (min(relab[i], relab[j]), max(relab[i], relab[j])) for i, j in edges
    )


def _delete_vertex(n, b, edges, v):
    keep = [u for u in range(n) if u != v]
    relab = {u: i for i, u in enumerate(keep)}
    return n - 1, frozenset(
        (min(relab[i], relab[j]), max(relab[i], relab[j]))
        for i, j in edges
        if v not in (i, j)
    )


def _contract_edge(n, b, edges, i, j):
    # keep the root endpoint (roots never merge with each other)
    keep, drop = (i, j) if (i < b or j >= b and i < j) else (j, i)
    out = set()
    for p, q in edges:
        p2 = keep if p == drop else p
        q2 = keep if q == drop else q
        if p2 != q2:
            out.add((min(p2, q2), max(p2, q2)))
    return _delete_vertex_relabel_only(n, drop, out)


def _delete_vertex_relabel_only(n, v, edges):
    keep = [u for u in range(n) if u != v]
    relab = {u: i for i, u in enumerate(keep)}
    return n - 1, frozenset(
        (min(relab[i], relab[j]), max(relab[i], relab[j])) for i, j in edges
    )


def rooted_minor_signature(n: int, b: int, edges: frozenset, dcap: int) -> tuple:
    """For each deletion budget d in 0..dcap, the set of boundary-rooted
    minors on at most eight vertices realizable after some d non-root vertex
    deletions (edge deletions and contractions are free)."""
    import heapq

    start_n, start_e = _drop_isolated(n, b, edges)
    start = _canon(start_n, b, start_e)
    seen = {start: 0}
    heap = [(0, start)]
    found: dict[tuple, int] = {}
    while heap:
        d, code = heapq.heappop(heap)
        if d > seen.get(code, 1 << 30):
            continue
        cn, cb, cedges = code
        if cn <= _SIZE_CAP:
            if code not in found or d < found[code]:
                found[code] = d
        nxt = []
        for e in cedges:
            nxt.append((d, _delete_vertex_noop(cn, cb, frozenset(cedges) - {e})))
            i, j = e
            if not (i < cb and j < cb):
                nxt.append((d, _contract_edge(cn, cb, frozenset(cedges), i, j)))
        if d < dcap:
            for v in range(cb, cn):
                nxt.append((d + 1, _delete_vertex(cn, cb, frozenset(cedges), v)))
        for nd, (nn, ne) in nxt:
            nn2, ne2 = _drop_isolated(nn, cb, ne)
            ncode = _canon(nn2, cb, ne2)
            if nd < seen.get(ncode, 1 << 30):
                seen[ncode] = nd
                heapq.heappush(heap, (nd, ncode))
    return tuple(
        frozenset(c for c, dm in found.items() if dm <= d) for d in range(dcap + 1)
    )


def _delete_vertex_noop(n, b, edges):
    return n, edges


def signature_of_subgraph(g: MultiGraph, x_set, bd, dcap: int) -> tuple:
    """Signature of G[X] rooted at its sorted boundary vertices."""
    xs = sorted(x_set)
    roots = sorted(bd)
    order = roots + [v for v in xs if v not in bd]
    relab = {v: i for i, v in enumerate(order)}
    edges = set()
    sub = induced_subgraph(g, x_set)
    for _, u, v in sub.iter_edges():
        a, b2 = relab[u], relab[v]
        edges.add((min(a, b2), max(a, b2)))
    return rooted_minor_signature(len(order), len(roots), frozenset(edges), dcap)


_catalog_cache: dict = {}


def _catalog_lookup(b: int, dcap: int, want_sig: tuple, max_extra: int):
    """Smallest replacement graph (n, edges) on b roots with the wanted
    signature; candidates ordered by vertex count, then edge count, then
    lexicographically."""
    for extra in range(0, max_extra + 1):
        n = b + extra
        pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
        masks = sorted(range(1 << len(pairs)), key=lambda m: (bin(m).count("1"), m))
        for mask in masks:
            edges = frozenset(p for bit, p in enumerate(pairs) if mask >> bit & 1)
            touched = {v for e in edges for v in e}
            if any(v not in touched for v in range(b, n)):
                continue  # isolated non-root adds nothing
            key = (b, n, edges, dcap)
            sig = _catalog_cache.get(key)
            if sig is None:
                scratch = MultiGraph()
                for v in range(n):
                    scratch.add_vertex(v)
                for i, j in edges:
                    scratch.add_edge(i, j)
                if not is_k4_minor_free(scratch):
                    _catalog_cache[key] = False
                    continue
                sig = rooted_minor_signature(n, b, edges, dcap)
                _catalog_cache[key] = sig
            if sig is False:
                continue
            if sig == want_sig:
                return n, edges
    return None


def _branch_dispose(inst: Instance, p: Protrusion, note: str = "") -> DisposeResult:
    joint = induced_subgraph(inst.g, inst.s_set | p.x_set)
    witness = find_k4_model(joint)
    if witness is None:
        return DisposeResult((inst,), marked=True, note=note)
    from .branching import branch_rule1

    x = frozenset(witness.vertices() - inst.s_set)
    bs = branch_rule1(inst, x)
    return DisposeResult(bs.children, note=note)


def dispose(inst: Instance, p: Protrusion, cfg: ProtrusionConfig) -> DisposeResult:
    """Dispose of a protrusion under the configured strategy.

    branch: never rewrites the graph; yields rule-1 children when S plus the
    protrusion holds a K4 minor and otherwise reports 'marked'.
    replace: swap the protrusion for a signature-equivalent small graph;
    falls back to branch when the protrusion is too large, the catalog has no
    entry, or the oracle cross-check disagrees."""
    if cfg.strategy == "branch":
        return _branch_dispose(inst, p)

    if len(p.x_set) > cfg.replace_size_cap:
        note = "replace: protrusion exceeds size cap, branch fallback"
        log.warning(note)
        return _branch_dispose(inst, p, note)
    bd = sorted(p.boundary)
    dcap = len(bd) + 1
    want = signature_of_subgraph(inst.g, p.x_set, bd, dcap)
    hit = _catalog_lookup(len(bd), dcap, want, cfg.catalog_extra)
    if hit is None:
        note = "replace: no catalog entry matches, branch fallback"
        log.warning(note)
        return _branch_dispose(inst, p, note)
    rn, redges = hit
    h = delete_vertices(inst.g, p.x_set - set(bd))
    vmap = {i: v for i, v in enumerate(bd)}
    new_vertices = []
    for i in range(len(bd), rn):
        nv = h.add_vertex()
        vmap[i] = nv
        new_vertices.append(nv)
    new_edges = []
    existing = {tuple(sorted(e)) for e in h.edge_pairs()}
    for i, j in sorted(redges):
        u, v = vmap[i], vmap[j]
        if (min(u, v), max(u, v)) in existing and i < len(bd) and j < len(bd):
            continue  # root-root edge already present outside the protrusion
        eid = h.add_edge(u, v)
        new_edges.append((eid, u, v))
    step = ReplaceStep(
        frozenset(p.x_set - set(bd)),
        tuple(bd),
        tuple(new_vertices),
        tuple(new_edges),
        0,
    )
    new_inst = inst.evolve(g=h, trace=inst.trace + (step,))

    limit = oracle_mod.DEFAULT_LIMIT
    if (
        inst.g.num_vertices() <= limit.max_vertices
        and new_inst.g.num_vertices() <= limit.max_vertices
    ):
        big_k = inst.g.num_vertices() + 2
        before = oracle_mod.min_disjoint_cover(inst.g, inst.s_set, big_k)
        after = oracle_mod.min_disjoint_cover(new_inst.g, new_inst.s_set, big_k)
        if (before is None) != (after is None) or (
            before is not None and len(before) != len(after)
        ):
            note = "replace: oracle cross-check failed, branch fallback"
            log.error(note)
            return _branch_dispose(inst, p, note)
    return DisposeResult((new_inst,), replaced=True, note="replace applied")
