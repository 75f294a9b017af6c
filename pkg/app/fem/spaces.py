"""
Degree-of-freedom maps for the continuous P1 and P2 spaces on a submesh.
"""
from dataclasses import dataclass

import numpy as np

from app.fem.elements import P2_EDGES, p2_values


@dataclass(frozen=True)
class P2Space:
    """P2 nodes: the submesh vertices first, then one node per edge."""
    n_vertices: int
    edges: np.ndarray        # (E, 2) local vertex ids, ascending
    cell_dofs: np.ndarray    # (C, 10)
    coordinates: np.ndarray  # (n_nodes, 3)

    @property
    def n_nodes(self) -> int:
        return self.n_vertices + len(self.edges)

    def edge_nodes(self, pairs: np.ndarray) -> np.ndarray:
        """Node ids of edges given as (k, 2) vertex pairs (any order)."""
        pairs = np.sort(np.asarray(pairs), axis=1)
        keys = self.edges[:, 0] * self.n_vertices + self.edges[:, 1]
        wanted = pairs[:, 0] * self.n_vertices + pairs[:, 1]
        order = np.argsort(keys)
        position = np.searchsorted(keys, wanted, sorter=order)
        return self.n_vertices + order[position]

    def evaluate(self, nodal: np.ndarray, cells: np.ndarray, bary: np.ndarray) -> np.ndarray:
        """Field values at barycentric points: bary (Q, 4) or (len(cells), Q, 4)."""
        values = p2_values(bary)
        local = nodal[self.cell_dofs[cells]]
        if values.ndim == 2:
            return np.einsum("qa,ca...->cq...", values, local)
        return np.einsum("cqa,ca...->cq...", values, local)


def build_p2_space(vertices: np.ndarray, cells: np.ndarray) -> P2Space:
    n_vertices = len(vertices)
    local_edges = np.array(P2_EDGES)
    cell_edges = np.sort(cells[:, local_edges], axis=2)          # (C, 6, 2)
    flat = cell_edges.reshape(-1, 2)
    edges, inverse = np.unique(flat, axis=0, return_inverse=True)
    inverse = inverse.ravel().reshape(len(cells), 6)
    cell_dofs = np.hstack([cells, n_vertices + inverse])
    midpoints = 0.5 * (vertices[edges[:, 0]] + vertices[edges[:, 1]])
    return P2Space(n_vertices=n_vertices, edges=edges, cell_dofs=cell_dofs,
                   coordinates=np.vstack([vertices, midpoints]))
