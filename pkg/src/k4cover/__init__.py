"""Exact solver for the K4-minor cover problem (treewidth-2 vertex deletion)."""

from .multigraph import (
    MultiGraph,
    BlockCutForest,
    blocks_and_cuts,
    boundary,
    connected_components,
    contract_edge,
    delete_vertices,
    induced_subgraph,
)

__all__ = [
    "MultiGraph",
    "BlockCutForest",
    "blocks_and_cuts",
    "boundary",
    "connected_components",
    "contract_edge",
    "delete_vertices",
    "induced_subgraph",
]
