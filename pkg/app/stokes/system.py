"""
Taylor-Hood P2/P1 discretization of the transformed quasi-stationary Stokes
problem on the reference fluid domain.

Velocity unknowns are blocked by component (dof = comp * n_nodes + node) and
followed by the P1 pressure unknowns. The velocity vanishes on the interface.
"""
import logging
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import sparse as sp

from app.fem.assembly import (
    SparseAssembler, assemble_vector, cell_quadrature, facet_quadrature, map_chunks,
)
from app.fem.elements import p2_gradients, p2_values
from app.fem.quadrature import tet_rule, triangle_rule
from app.fem.spaces import P2Space, build_p2_space
from app.geometry.mesh import GAMMA_F, SIGMA, ReferenceMesh

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class StokesSpace:
    mesh: ReferenceMesh
    p2: P2Space
    sigma_nodes: np.ndarray     # P2 nodes on the interface
    inlet_facets: np.ndarray    # indices into the gamma_f facet set at x1 = 0
    outlet_facets: np.ndarray   # ... at x1 = L

    @property
    def n_velocity_nodes(self) -> int:
        return self.p2.n_nodes

    @property
    def n_pressure(self) -> int:
        return self.mesh.fluid.n_vertices

    @property
    def n_dofs(self) -> int:
        return 3 * self.n_velocity_nodes + self.n_pressure

    @property
    def pressure_offset(self) -> int:
        return 3 * self.n_velocity_nodes

    def velocity_dofs(self, nodes: np.ndarray) -> np.ndarray:
        nodes = np.asarray(nodes)
        return np.concatenate([comp * self.n_velocity_nodes + nodes for comp in range(3)])

    @property
    def constrained_dofs(self) -> np.ndarray:
        return self.velocity_dofs(self.sigma_nodes)


def build_stokes_space(mesh: ReferenceMesh) -> StokesSpace:
    fluid = mesh.fluid
    p2 = build_p2_space(fluid.vertices, fluid.cells)
    sigma = fluid.localize(mesh.facets[SIGMA].vertices)            # (F, 3)
    edges = np.vstack([sigma[:, [0, 1]], sigma[:, [0, 2]], sigma[:, [1, 2]]])
    sigma_nodes = np.unique(np.concatenate([sigma.ravel(), p2.edge_nodes(edges)]))
    ends = mesh.facets[GAMMA_F]
    x1 = mesh.vertices[ends.vertices].mean(axis=1)[:, 0]
    return StokesSpace(mesh=mesh, p2=p2, sigma_nodes=sigma_nodes,
                       inlet_facets=np.flatnonzero(x1 < 0.5 * mesh.L),
                       outlet_facets=np.flatnonzero(x1 >= 0.5 * mesh.L))


@dataclass(frozen=True)
class StokesSource:
    """Reference-domain data replacing the physical right-hand side (verification)."""
    volume: Callable[[np.ndarray], np.ndarray]                 # (N, 3) -> (N, 3)
    traction: Callable[[np.ndarray, np.ndarray], np.ndarray]   # points, normals -> (N, 3)
    mass: Callable[[np.ndarray], np.ndarray]                   # (N, 3) -> (N,)
    dirichlet: Optional[Callable[[np.ndarray], np.ndarray]] = None


@dataclass(frozen=True)
class StokesSystem:
    t: float
    space: StokesSpace
    matrix: sp.csr_matrix           # [[K, B^T], [B, 0]]
    rhs: np.ndarray
    velocity_block: sp.csr_matrix   # K
    divergence_block: sp.csr_matrix  # B
    pressure_mass: sp.csr_matrix    # J-weighted P1 mass
    constrained: np.ndarray
    constrained_values: np.ndarray

    @property
    def momentum_rhs(self) -> np.ndarray:
        return self.rhs[:self.space.pressure_offset]

    @property
    def mass_rhs(self) -> np.ndarray:
        return self.rhs[self.space.pressure_offset:]


@dataclass
class _CellBlocks:
    vel_dofs: np.ndarray
    pre_dofs: np.ndarray
    K: np.ndarray
    B: np.ndarray
    Mp: np.ndarray
    f: np.ndarray
    g: np.ndarray


def _cell_blocks(t, space: StokesSpace, deformation, radius_field, params, rule,
                 source: Optional[StokesSource], cells: slice) -> _CellBlocks:
    fluid = space.mesh.fluid
    local_cells = fluid.cells[cells]
    cq = cell_quadrature(fluid.vertices, local_cells, rule)
    n_cells, n_q = cq.jxw.shape
    points = cq.points.reshape(-1, 3)
    coeffs = deformation.eval_coeffs(t, points, radius_field)

    J = coeffs.J.reshape(n_cells, n_q)
    Finv = coeffs.Finv.reshape(n_cells, n_q, 3, 3)
    A = coeffs.A.reshape(n_cells, n_q, 3, 3)
    dN = p2_gradients(cq.bary, cq.grads)                          # (C, Q, 10, 3)
    N = p2_values(cq.bary)                                        # (Q, 10)
    M = cq.bary                                                   # (Q, 4)
    g = np.einsum("cqji,cqaj->cqai", Finv, dN)                    # F^-T grad N
    wJ = params.mu * J * cq.jxw

    gram = np.einsum("cq,cqad,cqbd->cab", wJ, g, g)
    K = np.einsum("cq,cqaj,cqbi->caibj", wJ, g, g)
    K += np.einsum("cab,ij->caibj", gram, np.eye(3))
    B = -np.einsum("cq,qp,cqai->cpai", J * cq.jxw, M, g)
    Mp = np.einsum("cq,qp,qs->cps", J * cq.jxw, M, M)

    if source is None:
        grad_fb = params.fb.gradient(points, params.L).reshape(n_cells, n_q, 3)
        AT_grad_fb = np.einsum("cqki,cqk->cqi", A, grad_fb)
        Dv = coeffs.Dv_b.reshape(n_cells, n_q, 3, 3)
        E = np.einsum("cqik,cqkj->cqij", Dv, Finv)
        E = 0.5 * (E + np.swapaxes(E, -1, -2))
        f = -np.einsum("cq,cqi,qa->cai", cq.jxw, AT_grad_fb, N)
        f -= 2.0 * np.einsum("cq,cqij,cqaj->cai", wJ, E, g)
        g_rhs = np.einsum("cq,cq,qp->cp", cq.jxw, coeffs.dJdt.reshape(n_cells, n_q), M)
    else:
        volume = source.volume(points).reshape(n_cells, n_q, 3)
        f = np.einsum("cq,cqi,qa->cai", cq.jxw, volume, N)
        g_rhs = np.einsum("cq,cq,qp->cp", cq.jxw, source.mass(points).reshape(n_cells, n_q), M)

    nodes = space.p2.cell_dofs[cells]                             # (C, 10)
    n_v = space.n_velocity_nodes
    vel_dofs = (nodes[:, :, None] + n_v * np.arange(3)[None, None, :]).reshape(n_cells, 30)
    return _CellBlocks(vel_dofs=vel_dofs, pre_dofs=local_cells,
                       K=K.reshape(n_cells, 30, 30), B=B.reshape(n_cells, 4, 30), Mp=Mp,
                       f=f.reshape(n_cells, 30), g=g_rhs)


def _traction_rhs(space: StokesSpace, source: StokesSource, rule) -> np.ndarray:
    mesh = space.mesh
    ends = mesh.facets[GAMMA_F]
    fluid = mesh.fluid
    cells = fluid.local_cells(ends.cells)
    fq = facet_quadrature(fluid.vertices, fluid.cells, cells, fluid.localize(ends.vertices),
                          ends.normals, rule)
    n_f, n_q = fq.jxw.shape
    normals = np.repeat(ends.normals[:, None, :], n_q, axis=1).reshape(-1, 3)
    traction = source.traction(fq.points.reshape(-1, 3), normals).reshape(n_f, n_q, 3)
    N = p2_values(fq.bary)                                        # (F, Q, 10)
    local = np.einsum("fq,fqi,fqa->fai", fq.jxw, traction, N)
    nodes = space.p2.cell_dofs[cells]
    dofs = nodes[:, :, None] + space.n_velocity_nodes * np.arange(3)[None, None, :]
    return assemble_vector(dofs, local, 3 * space.n_velocity_nodes)


def assemble_stokes(t: float, space: StokesSpace, deformation, radius_field, params,
                    quadrature_degree: int = 4, source: Optional[StokesSource] = None,
                    workers: int = 1, chunk_size: int = 512) -> StokesSystem:
    """Assemble a(t), b(t) and the right-hand sides f(t), g(t)."""
    rule = tet_rule(quadrature_degree)
    fluid = space.mesh.fluid
    blocks = map_chunks(
        lambda cells: _cell_blocks(t, space, deformation, radius_field, params, rule, source, cells),
        fluid.n_cells, chunk_size=chunk_size, workers=workers,
    )
    n_u = space.pressure_offset
    n_p = space.n_pressure
    K = SparseAssembler((n_u, n_u))
    B = SparseAssembler((n_p, n_u))
    Mp = SparseAssembler((n_p, n_p))
    f = np.zeros(n_u)
    g = np.zeros(n_p)
    for block in blocks:
        pre = block.pre_dofs
        K.add_local(block.vel_dofs, block.vel_dofs, block.K)
        B.add_local(pre, block.vel_dofs, block.B)
        Mp.add_local(pre, pre, block.Mp)
        f += assemble_vector(block.vel_dofs, block.f, n_u)
        g += assemble_vector(pre, block.g, n_p)

    constrained = space.constrained_dofs
    values = np.zeros(len(constrained))
    if source is not None:
        f += _traction_rhs(space, source, triangle_rule(quadrature_degree))
        if source.dirichlet is not None:
            prescribed = source.dirichlet(space.p2.coordinates[space.sigma_nodes])   # (S, 3)
            values = np.asarray(prescribed, dtype=float).T.ravel()

    K = K.tocsr()
    B = B.tocsr()
    matrix = sp.bmat([[K, B.T], [B, None]], format="csr")
    logger.debug(f"Stokes system at t={t:.4f}: {matrix.shape[0]} dofs, {matrix.nnz} nonzeros")
    return StokesSystem(t=t, space=space, matrix=matrix, rhs=np.concatenate([f, g]),
                        velocity_block=K, divergence_block=B, pressure_mass=Mp.tocsr(),
                        constrained=constrained, constrained_values=values)
