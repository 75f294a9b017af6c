"""
Shared assembly machinery: quadrature geometry on cells and facets, COO
accumulation into CSR matrices and ordered chunked execution.

Chunks are always concatenated in cell order, so the assembled matrices do
not depend on the number of workers.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, List, Sequence, Tuple, TypeVar

import numpy as np
from scipy import sparse as sp

from app.fem.elements import physical_points, tet_geometry
from app.fem.quadrature import QuadratureRule

logger = logging.getLogger(__name__)

T = TypeVar("T")


@dataclass(frozen=True)
class CellQuadrature:
    bary: np.ndarray       # (Q, 4)
    points: np.ndarray     # (C, Q, 3)
    jxw: np.ndarray        # (C, Q)
    grads: np.ndarray      # (C, 4, 3) barycentric gradients
    volumes: np.ndarray    # (C,)


@dataclass(frozen=True)
class FacetQuadrature:
    bary: np.ndarray       # (F, Q, 4) in the owning cell
    points: np.ndarray     # (F, Q, 3)
    jxw: np.ndarray        # (F, Q)
    normals: np.ndarray    # (F, 3)
    cells: np.ndarray      # (F,)


def cell_quadrature(vertices: np.ndarray, cells: np.ndarray, rule: QuadratureRule) -> CellQuadrature:
    coords = vertices[cells]
    grads, signed = tet_geometry(coords)
    volumes = np.abs(signed)
    points = physical_points(coords, rule.points)
    jxw = 6.0 * volumes[:, None] * rule.weights[None, :]
    return CellQuadrature(bary=rule.points, points=points, jxw=jxw, grads=grads, volumes=volumes)


def facet_quadrature(vertices: np.ndarray, cells: np.ndarray, facet_cells: np.ndarray,
                     facet_vertices: np.ndarray, normals: np.ndarray,
                     rule: QuadratureRule) -> FacetQuadrature:
    """Quadrature on facets given by owning cell and an ordered vertex triple.

    Two facet sets listing the same triples in the same order produce the
    same physical points, which is what the interface coupling relies on.
    """
    owner = cells[facet_cells]                                   # (F, 4)
    position = np.argmax(owner[:, :, None] == facet_vertices[:, None, :], axis=1)  # (F, 3)
    n_facets = len(facet_cells)
    bary = np.zeros((n_facets, rule.size, 4))
    rows = np.arange(n_facets)[:, None]
    for k in range(3):
        bary[rows, np.arange(rule.size)[None, :], position[:, k:k + 1]] = rule.points[None, :, k]
    corners = vertices[facet_vertices]                            # (F, 3, 3)
    points = np.einsum("qk,fkd->fqd", rule.points, corners)
    areas = 0.5 * np.linalg.norm(np.cross(corners[:, 1] - corners[:, 0],
                                          corners[:, 2] - corners[:, 0]), axis=1)
    jxw = 2.0 * areas[:, None] * rule.weights[None, :]
    return FacetQuadrature(bary=bary, points=points, jxw=jxw, normals=normals,
                           cells=np.asarray(facet_cells))


class SparseAssembler:
    """Collects local blocks as COO triplets; duplicates are summed on conversion."""

    def __init__(self, shape: Tuple[int, int]):
        self.shape = shape
        self._rows: List[np.ndarray] = []
        self._cols: List[np.ndarray] = []
        self._vals: List[np.ndarray] = []

    def add(self, rows, cols, values) -> None:
        self._rows.append(np.asarray(rows, dtype=np.int64).ravel())
        self._cols.append(np.asarray(cols, dtype=np.int64).ravel())
        self._vals.append(np.asarray(values, dtype=float).ravel())

    def add_local(self, row_dofs: np.ndarray, col_dofs: np.ndarray, local: np.ndarray) -> None:
        """Scatter local matrices (C, n, m) with dof maps (C, n) and (C, m)."""
        n, m = row_dofs.shape[1], col_dofs.shape[1]
        rows = np.broadcast_to(row_dofs[:, :, None], (len(row_dofs), n, m))
        cols = np.broadcast_to(col_dofs[:, None, :], (len(col_dofs), n, m))
        self.add(rows, cols, local)

    def extend(self, other: "SparseAssembler") -> None:
        self._rows.extend(other._rows)
        self._cols.extend(other._cols)
        self._vals.extend(other._vals)

    def tocsr(self) -> sp.csr_matrix:
        if not self._vals:
            return sp.csr_matrix(self.shape)
        matrix = sp.coo_matrix(
            (np.concatenate(self._vals), (np.concatenate(self._rows), np.concatenate(self._cols))),
            shape=self.shape,
        )
        return matrix.tocsr()


def assemble_vector(dofs: np.ndarray, local: np.ndarray, size: int) -> np.ndarray:
    return np.bincount(np.asarray(dofs).ravel(), weights=np.asarray(local).ravel(), minlength=size)


def chunk_ranges(n_items: int, chunk_size: int) -> List[Tuple[int, int]]:
    chunk_size = max(1, int(chunk_size))
    return [(start, min(start + chunk_size, n_items)) for start in range(0, n_items, chunk_size)]


def map_chunks(func: Callable[[slice], T], n_items: int, chunk_size: int = 512,
               workers: int = 1) -> List[T]:
    """Apply func to consecutive slices; results come back in slice order."""
    slices: Sequence[slice] = [slice(a, b) for a, b in chunk_ranges(n_items, chunk_size)]
    if workers <= 1 or len(slices) <= 1:
        return [func(s) for s in slices]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, slices))
