"""Branching rules, vertex classification against S, singleton simplification
and independence detection.

Rule 1 deletes a vertex of a set X for which G[S+X] already has a K4 minor;
rules 2 and 3 additionally offer the child that commits a connected X to S,
exploiting that X bridges distinct connected (rule 2) or biconnected (rule 3)
components of G[S].
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from .multigraph import (
    MultiGraph,
    blocks_and_cuts,
    connected_components,
    delete_vertices,
    induced_subgraph,
)
from .decompose import is_k4_minor_free
from .rules import DeleteStep, Instance, RuleError, lift_solution


class StructuralInvariantError(AssertionError):
    """A structural fact promised by the theory failed; implementation bug."""


# ---------------------------------------------------------------------------
# Indices over G[S]


class ComponentIndex:
    """Connected- and biconnected-component indices of G[S]."""

    def __init__(self, inst: Instance):
        gs = induced_subgraph(inst.g, inst.s_set)
        self.cc: dict[int, int] = {}
        for i, comp in enumerate(connected_components(gs)):
            for v in comp:
                self.cc[v] = i
        bcf = blocks_and_cuts(gs)
        self.bc: dict[int, frozenset] = {
            v: frozenset(bs) for v, bs in bcf.blocks_of_vertex.items()
        }
        self.num_cc = len(connected_components(gs))
        self.num_bc = len(bcf.blocks)

    def same_cc(self, s1: int, s2: int) -> bool:
        return self.cc[s1] == self.cc[s2]

    def share_block(self, s1: int, s2: int) -> bool:
        if s1 == s2:
            return True
        return bool(self.bc[s1] & self.bc[s2])


OVERFLOW = 3


@dataclass
class Classification:
    """|N_S(v)| buckets for the F-vertices; counts of 3 or more land in the
    overflow bucket."""

    bucket: dict[int, int]

    @classmethod
    def of(cls, inst: Instance) -> "Classification":
        return cls({v: min(len(inst.n_s(v)), OVERFLOW) for v in inst.f_set})

    def n(self, i: int) -> set[int]:
        return {v for v, b in self.bucket.items() if b == i}

    @property
    def n0(self) -> set[int]:
        return self.n(0)

    @property
    def n1(self) -> set[int]:
        return self.n(1)

    @property
    def n2(self) -> set[int]:
        return self.n(2)

    @property
    def overflow(self) -> set[int]:
        return self.n(OVERFLOW)


def classify(inst: Instance) -> Classification:
    return Classification.of(inst)


# ---------------------------------------------------------------------------
# Branch sets


@dataclass(frozen=True)
class BranchSet:
    x_set: frozenset
    kind: str  # 'rule1' | 'rule2' | 'rule3'
    children: tuple
    x_connected: bool = True  # recorded, not enforced, for rule 1


def _deletion_child(inst: Instance, x: int) -> Instance:
    lifted = lift_solution(inst.trace, {x})
    return inst.evolve(
        g=delete_vertices(inst.g, {x}),
        k=inst.k - 1,
        committed=inst.committed | frozenset(lifted),
        trace=inst.trace + (DeleteStep(x),),
    )


def _x_connected(inst: Instance, xs: frozenset) -> bool:
    sub = induced_subgraph(inst.g, xs)
    return len(connected_components(sub)) <= 1


def branch_rule1(inst: Instance, x) -> BranchSet:
    xs = frozenset(x)
    if not xs or xs & inst.s_set or not all(inst.g.has_vertex(v) for v in xs):
        raise RuleError("X must be a nonempty live subset of F")
    if is_k4_minor_free(induced_subgraph(inst.g, inst.s_set | xs)):
        raise RuleError("G[S+X] has no K4 minor")
    children = tuple(_deletion_child(inst, v) for v in sorted(xs))
    return BranchSet(xs, "rule1", children, _x_connected(inst, xs))


def _bridge_pair(inst: Instance, xs: frozenset, idx: ComponentIndex, kind: str):
    """S-vertex pair witnessing the rule-2/3 precondition, or None."""
    s_nbrs = set()
    for v in xs:
        s_nbrs |= inst.n_s(v)
    s_nbrs = sorted(s_nbrs)
    for i, s1 in enumerate(s_nbrs):
        for s2 in s_nbrs[i + 1 :]:
            if kind == "rule2":
                if not idx.same_cc(s1, s2):
                    return s1, s2
            else:
                if idx.same_cc(s1, s2) and not idx.share_block(s1, s2):
                    return s1, s2
    return None


def _branch_rule23(inst: Instance, x, kind: str) -> BranchSet:
    xs = frozenset(x)
    if not xs or xs & inst.s_set or not all(inst.g.has_vertex(v) for v in xs):
        raise RuleError("X must be a nonempty live subset of F")
    if not _x_connected(inst, xs):
        raise RuleError("X must be connected")
    idx = ComponentIndex(inst)
    if _bridge_pair(inst, xs, idx, kind) is None:
        raise RuleError(f"no S-pair witnesses {kind}")
    children = [_deletion_child(inst, v) for v in sorted(xs)]
    children.append(inst.evolve(s_set=inst.s_set | xs))
    return BranchSet(xs, kind, tuple(children))


def branch_rule2(inst: Instance, x) -> BranchSet:
    return _branch_rule23(inst, x, "rule2")


def branch_rule3(inst: Instance, x) -> BranchSet:
    return _branch_rule23(inst, x, "rule3")


# ---------------------------------------------------------------------------
# Simplification and independence


def simplify(inst: Instance):
    """Fire the first applicable branching rule on a singleton, or certify the
    instance simplified (returning it unchanged)."""
    idx = ComponentIndex(inst)
    gs_plus_cache = inst.s_set
    for v in sorted(inst.f_set):
        if not is_k4_minor_free(induced_subgraph(inst.g, gs_plus_cache | {v})):
            return branch_rule1(inst, {v})
        ns = sorted(inst.n_s(v))
        fired = None
        for i, s1 in enumerate(ns):
            for s2 in ns[i + 1 :]:
                if not idx.same_cc(s1, s2):
                    fired = "rule2"
                    break
                if not idx.share_block(s1, s2):
                    fired = fired or "rule3"
            if fired == "rule2":
                break
        if fired == "rule2":
            return branch_rule2(inst, {v})
        if fired == "rule3":
            return branch_rule3(inst, {v})
    for v in inst.f_set:
        if len(inst.n_s(v)) > 2:
            raise StructuralInvariantError(
                f"simplified instance has F-vertex {v} with more than two "
                "S-neighbors"
            )
    return inst


def is_independent(inst: Instance) -> bool:
    """F independent, all of it in N2, each vertex's S-neighbors sharing a
    biconnected component of G[S], and every single addition K4-minor-free."""
    f = inst.f_set
    for v in f:
        for w in inst.g.incident(v).values():
            if w in f and w != v:
                return False
    idx = ComponentIndex(inst)
    for v in f:
        ns = sorted(inst.n_s(v))
        if len(ns) != 2:
            return False
        if not (idx.same_cc(ns[0], ns[1]) and idx.share_block(ns[0], ns[1])):
            return False
    for v in sorted(f):
        if not is_k4_minor_free(induced_subgraph(inst.g, inst.s_set | {v})):
            return False
    return True


# ---------------------------------------------------------------------------
# Branch-path discovery for the decomposition sweep


def find_branch_path(inst: Instance, decomp, alpha: int, kind: str) -> list[int]:
    """Path in G_alpha between two vertices whose S-neighbors witness rule 2
    (different components of G[S]) or rule 3 (same component, no shared
    block), with interior vertices in N0 whenever such a path exists.

    Prefers the shortest interior-clean path; if every qualifying pair is
    blocked by S-attached interior vertices (possible for rule 3), falls back
    to the shortest unconstrained path, which is still safe to branch on."""
    va = decomp.v_alpha(alpha)
    ea = decomp.e_alpha(alpha)
    g = inst.g
    adj: dict[int, list[int]] = {v: [] for v in va}
    for eid in ea:
        u, v = g.endpoints(eid)
        adj[u].append(v)
        adj[v].append(u)

    idx = ComponentIndex(inst)
    labeled = {v: sorted(inst.n_s(v)) for v in va if inst.n_s(v)}

    def qualifies(u: int, v: int) -> bool:
        for s1 in labeled[u]:
            for s2 in labeled[v]:
                if kind == "rule2":
                    if not idx.same_cc(s1, s2):
                        return True
                else:
                    if idx.same_cc(s1, s2) and not idx.share_block(s1, s2):
                        return True
        return False

    # singleton path
    for v in sorted(labeled):
        if qualifies(v, v):
            return [v]

    n0 = {v for v in va if not inst.n_s(v)}

    best: tuple[int, list[int]] | None = None
    for constrained in (True, False):
        for u in sorted(labeled):
            interior = n0 if constrained else set(va)
            prev = {u: u}
            dist = {u: 0}
            dq = deque([u])
            while dq:
                v = dq.popleft()
                for w in adj[v]:
                    if w in prev:
                        continue
                    prev[w] = v
                    dist[w] = dist[v] + 1
                    if w in labeled and qualifies(u, w):
                        path = [w]
                        while path[-1] != u:
                            path.append(prev[path[-1]])
                        path.reverse()
                        cand = (dist[w], path)
                        if best is None or cand < best:
                            best = cand
                    if w in interior:
                        dq.append(w)
        if best is not None:
            return best[1]
    raise RuleError("no qualifying pair joined by a path in G_alpha")
