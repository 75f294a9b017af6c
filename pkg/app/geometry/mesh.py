"""
Reference mesh of the box (0, L) x (-1/2, 1/2)^2 conforming to the cylinder
|x_bar| = R0.

The butterfly cross-section is extruded along x1 and every prism is split
into three tetrahedra by the global vertex order rule, which makes shared
quad faces pick the same diagonal on both sides.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Tuple

import numpy as np

from app.errors import MeshError
from app.fem.elements import TET_FACES, tet_geometry
from app.geometry.cross_section import build_cross_section
from app.geometry.quality import min_dihedral_angles
from app.params.models import ModelParams

logger = logging.getLogger(__name__)

FLUID, SOLID = 0, 1
SIGMA, GAMMA_F, GAMMA_D, GAMMA_N = "sigma", "gamma_f", "gamma_d", "gamma_n"
BOUNDARY_TAGS = (GAMMA_F, GAMMA_D, GAMMA_N)

_PLANE_TOL = 1e-12


@dataclass(frozen=True)
class Resolution:
    n_axial: int = 4
    n_angular: int = 16
    n_radial: int = 2
    n_outer: int = 2

    def validate(self) -> None:
        if self.n_axial < 2:
            raise MeshError("n_axial must be at least 2", details={"n_axial": self.n_axial})
        if self.n_angular < 8 or self.n_angular % 4:
            raise MeshError("n_angular must be a multiple of 4 and at least 8",
                            details={"n_angular": self.n_angular})
        if self.n_radial < 1 or self.n_outer < 1:
            raise MeshError("n_radial and n_outer must be at least 1",
                            details={"n_radial": self.n_radial, "n_outer": self.n_outer})

    def as_tuple(self) -> Tuple[int, int, int, int]:
        return self.n_axial, self.n_angular, self.n_radial, self.n_outer


@dataclass(frozen=True)
class FacetSet:
    """Facets as (owning cell, ordered global vertex triple) with outward normals."""
    cells: np.ndarray      # (F,) global cell ids
    vertices: np.ndarray   # (F, 3) global vertex ids
    normals: np.ndarray    # (F, 3) outward w.r.t. the owning cell
    areas: np.ndarray      # (F,)

    def __len__(self) -> int:
        return len(self.cells)

    def subset(self, mask: np.ndarray) -> "FacetSet":
        return FacetSet(self.cells[mask], self.vertices[mask], self.normals[mask], self.areas[mask])


@dataclass(frozen=True)
class SubMesh:
    """Fluid or solid part with its own vertex numbering."""
    name: str
    vertices: np.ndarray       # (n, 3)
    cells: np.ndarray          # (C, 4) local vertex ids
    global_ids: np.ndarray     # (n,) local -> global vertex
    cell_ids: np.ndarray       # (C,) global cell ids
    global_to_local: np.ndarray = field(repr=False)  # (N,) global -> local or -1

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    def localize(self, global_vertices: np.ndarray) -> np.ndarray:
        local = self.global_to_local[np.asarray(global_vertices)]
        if np.any(local < 0):
            raise MeshError(f"Vertex not part of the {self.name} mesh")
        return local

    def local_cells(self, global_cells: np.ndarray) -> np.ndarray:
        global_cells = np.asarray(global_cells)
        size = int(max(self.cell_ids.max(), global_cells.max(initial=0))) + 1
        lookup = np.full(size, -1, dtype=np.int64)
        lookup[self.cell_ids] = np.arange(self.n_cells)
        local = lookup[global_cells]
        if np.any(local < 0):
            raise MeshError(f"Cell not part of the {self.name} mesh")
        return local

    def vertex_volumes(self) -> np.ndarray:
        """Exact P1 integration weights: each cell gives a quarter of its volume to a vertex."""
        _, signed = tet_geometry(self.vertices[self.cells])
        weights = np.zeros(self.n_vertices)
        np.add.at(weights, self.cells.ravel(), np.repeat(np.abs(signed) / 4.0, 4))
        return weights

    def volume(self) -> float:
        _, signed = tet_geometry(self.vertices[self.cells])
        return float(np.abs(signed).sum())


@dataclass(frozen=True)
class ReferenceMesh:
    vertices: np.ndarray
    cells: np.ndarray
    cell_tags: np.ndarray
    facets: Dict[str, FacetSet]
    sigma_solid: FacetSet
    fluid: SubMesh
    solid: SubMesh
    resolution: Resolution
    R0: float
    L: float
    fluid_section_area: float

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    def cell_volumes(self) -> np.ndarray:
        _, signed = tet_geometry(self.vertices[self.cells])
        return signed

    def volume(self) -> float:
        return float(np.abs(self.cell_volumes()).sum())

    def facet_area(self, tag: str) -> float:
        return float(self.facets[tag].areas.sum())

    def boundary_area(self) -> float:
        return sum(self.facet_area(tag) for tag in BOUNDARY_TAGS)

    @property
    def fluid_volume_defect(self) -> float:
        """Volume lost by the inscribed polygon against the cylinder of radius R0."""
        return abs(np.pi * self.R0 ** 2 - self.fluid_section_area) * self.L

    def sigma_vertices(self) -> np.ndarray:
        return np.unique(self.facets[SIGMA].vertices)

    def min_dihedral_angle(self) -> float:
        return float(np.degrees(min_dihedral_angles(self.vertices[self.cells]).min()))


def _submesh(name: str, vertices: np.ndarray, cells: np.ndarray, cell_ids: np.ndarray) -> SubMesh:
    used = np.unique(cells[cell_ids])
    global_to_local = np.full(len(vertices), -1, dtype=np.int64)
    global_to_local[used] = np.arange(len(used))
    return SubMesh(name=name, vertices=vertices[used], cells=global_to_local[cells[cell_ids]],
                   global_ids=used, cell_ids=cell_ids, global_to_local=global_to_local)


def _facet_normals(vertices: np.ndarray, cells: np.ndarray, facet_cells: np.ndarray,
                   facet_vertices: np.ndarray, opposite: np.ndarray):
    a, b, c = (vertices[facet_vertices[:, k]] for k in range(3))
    normal = np.cross(b - a, c - a)
    area2 = np.linalg.norm(normal, axis=1)
    normal = normal / area2[:, None]
    flip = np.einsum("fd,fd->f", normal, vertices[opposite] - a) > 0.0
    normal[flip] *= -1.0
    return normal, 0.5 * area2


def build_reference_mesh(params: ModelParams, resolution: Resolution,
                         min_dihedral_deg: float = 0.0) -> ReferenceMesh:
    resolution.validate()
    R0, L = params.R0, params.L
    section = build_cross_section(R0, resolution.n_angular, resolution.n_radial, resolution.n_outer)
    n2d = len(section.points)
    n_axial = resolution.n_axial

    layers = np.linspace(0.0, L, n_axial + 1)
    vertices = np.column_stack([
        np.repeat(layers, n2d),
        np.tile(section.points[:, 0], n_axial + 1),
        np.tile(section.points[:, 1], n_axial + 1),
    ])

    tets: List[np.ndarray] = []
    tags: List[np.ndarray] = []
    v0, v1, v2 = section.triangles.T
    section_tags = np.where(section.fluid, FLUID, SOLID)
    for layer in range(n_axial):
        b, t = layer * n2d, (layer + 1) * n2d
        prism = [
            np.column_stack([v0 + b, v1 + b, v2 + b, v2 + t]),
            np.column_stack([v0 + b, v1 + b, v1 + t, v2 + t]),
            np.column_stack([v0 + b, v0 + t, v1 + t, v2 + t]),
        ]
        tets.append(np.stack(prism, axis=1).reshape(-1, 4))
        tags.append(np.repeat(section_tags, 3))
    cells = np.vstack(tets)
    cell_tags = np.concatenate(tags)

    _, signed = tet_geometry(vertices[cells])
    negative = signed < 0.0
    cells[negative] = cells[negative][:, [0, 1, 3, 2]]
    volumes = np.abs(signed)
    if np.any(volumes <= 1e-14 * L):
        raise MeshError("Cells with non-positive volume", details={"min_volume": float(volumes.min())})

    # facets: every (cell, local face) keyed by its sorted vertex triple
    local_faces = np.array(TET_FACES)
    face_vertices = cells[:, local_faces].reshape(-1, 3)
    face_cells = np.repeat(np.arange(len(cells)), 4)
    face_opposite = cells.reshape(-1)
    keys = np.sort(face_vertices, axis=1)
    _, inverse, counts = np.unique(keys, axis=0, return_inverse=True, return_counts=True)
    inverse = inverse.ravel()
    multiplicity = counts[inverse]
    if np.any(multiplicity > 2):
        raise MeshError("Non-manifold face in reference mesh")

    normals, areas = _facet_normals(vertices, cells, face_cells, keys, face_opposite)

    # interface: interior faces whose two cells carry different tags
    interior = np.flatnonzero(multiplicity == 2)
    order = np.argsort(inverse[interior], kind="stable")
    pairs = interior[order].reshape(-1, 2)
    first, second = pairs[:, 0], pairs[:, 1]
    crossing = cell_tags[face_cells[first]] != cell_tags[face_cells[second]]
    first, second = first[crossing], second[crossing]
    first_is_fluid = cell_tags[face_cells[first]] == FLUID
    fluid_side = np.where(first_is_fluid, first, second)
    solid_side = np.where(first_is_fluid, second, first)

    def facet_set(index: np.ndarray) -> FacetSet:
        return FacetSet(face_cells[index], keys[index], normals[index], areas[index])

    boundary = np.flatnonzero(multiplicity == 1)
    centroid = vertices[keys[boundary]].mean(axis=1)
    on_end = (centroid[:, 0] < _PLANE_TOL) | (centroid[:, 0] > L - _PLANE_TOL)
    in_fluid = cell_tags[face_cells[boundary]] == FLUID
    on_top = centroid[:, 2] > 0.5 - _PLANE_TOL
    facets = {
        SIGMA: facet_set(fluid_side),
        GAMMA_F: facet_set(boundary[on_end & in_fluid]),
        GAMMA_D: facet_set(boundary[~on_end & on_top]),
        GAMMA_N: facet_set(boundary[~(on_end & in_fluid) & ~(~on_end & on_top)]),
    }
    sigma_solid = facet_set(solid_side)

    fluid = _submesh("fluid", vertices, cells, np.flatnonzero(cell_tags == FLUID))
    solid = _submesh("solid", vertices, cells, np.flatnonzero(cell_tags == SOLID))

    circle = section.points[section.circle]
    polygon = 0.5 * abs(np.sum(circle[:, 0] * np.roll(circle[:, 1], -1)
                               - np.roll(circle[:, 0], -1) * circle[:, 1]))
    mesh = ReferenceMesh(vertices=vertices, cells=cells, cell_tags=cell_tags, facets=facets,
                         sigma_solid=sigma_solid, fluid=fluid, solid=solid,
                         resolution=resolution, R0=R0, L=L, fluid_section_area=polygon)

    quality = mesh.min_dihedral_angle()
    if quality < min_dihedral_deg:
        raise MeshError("Mesh quality below floor",
                        details={"min_dihedral_deg": quality, "floor": min_dihedral_deg})
    logger.info(f"Reference mesh {resolution.as_tuple()}: {len(vertices)} vertices, "
                f"{fluid.n_cells} fluid / {solid.n_cells} solid cells, "
                f"min dihedral {quality:.1f} deg")
    return mesh


def interface_pairs(mesh: ReferenceMesh) -> List[Tuple[int, int, np.ndarray]]:
    """(fluid dof, solid dof, coordinate) for every vertex on the interface."""
    sigma = mesh.sigma_vertices()
    fluid_ids = mesh.fluid.global_to_local[sigma]
    solid_ids = mesh.solid.global_to_local[sigma]
    if np.any(fluid_ids < 0) or np.any(solid_ids < 0):
        raise MeshError("Unmatched interface vertex",
                        details={"unmatched": int(np.sum((fluid_ids < 0) | (solid_ids < 0)))})
    return [(int(f), int(s), mesh.vertices[g].copy()) for f, s, g in zip(fluid_ids, solid_ids, sigma)]
