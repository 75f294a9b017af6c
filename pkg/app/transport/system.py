"""
Implicit-Euler step of the coupled fluid/solid heat transport on the
reference domain. P1 on each side, unknowns ordered [theta_f ; theta_s].
"""
import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional

import numpy as np
from scipy import sparse as sp

from app.errors import ParameterError
from app.fem.assembly import (
    SparseAssembler, assemble_vector, cell_quadrature, facet_quadrature, map_chunks,
)
from app.fem.elements import p2_values
from app.fem.quadrature import tet_rule, triangle_rule
from app.geometry.mesh import GAMMA_D, GAMMA_F, GAMMA_N, SIGMA, ReferenceMesh, SubMesh

logger = logging.getLogger(__name__)

PECLET_WARN = 2.0


@dataclass(frozen=True)
class TransportSpace:
    mesh: ReferenceMesh
    dirichlet_dofs: np.ndarray

    @property
    def n_fluid(self) -> int:
        return self.mesh.fluid.n_vertices

    @property
    def n_solid(self) -> int:
        return self.mesh.solid.n_vertices

    @property
    def n_dofs(self) -> int:
        return self.n_fluid + self.n_solid

    def side(self, name: str) -> SubMesh:
        return self.mesh.fluid if name == "fluid" else self.mesh.solid

    def offset(self, name: str) -> int:
        return 0 if name == "fluid" else self.n_fluid

    def split(self, vector: np.ndarray):
        return vector[:self.n_fluid], vector[self.n_fluid:]


def build_transport_space(mesh: ReferenceMesh) -> TransportSpace:
    gamma_d = np.unique(mesh.solid.localize(mesh.facets[GAMMA_D].vertices))
    return TransportSpace(mesh=mesh, dirichlet_dofs=mesh.fluid.n_vertices + gamma_d)


@dataclass(frozen=True)
class TransportState:
    t: float
    theta_f: np.ndarray
    theta_s: np.ndarray

    @property
    def vector(self) -> np.ndarray:
        return np.concatenate([self.theta_f, self.theta_s])


def initial_transport_state(space: TransportSpace, params) -> TransportState:
    return TransportState(t=0.0,
                          theta_f=np.full(space.n_fluid, params.initial.theta_f0, dtype=float),
                          theta_s=np.full(space.n_solid, params.initial.theta_s0, dtype=float))


@dataclass(frozen=True)
class TransportSource:
    """Manufactured data at the new time level, for verification runs with w = 0.

    `volume(side, points)` is the volume source; `flux(tag, points, normals)`
    the boundary flux for tags gamma_f, gamma_n, sigma_fluid and sigma_solid;
    `dirichlet(points)` the solid temperature on gamma_d.
    """
    volume: Callable[[str, np.ndarray], np.ndarray]
    flux: Callable[[str, np.ndarray, np.ndarray], np.ndarray]
    dirichlet: Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class TransportSystem:
    t_old: float
    t_new: float
    space: TransportSpace
    matrix: sp.csr_matrix
    rhs: np.ndarray
    dirichlet_values: np.ndarray
    blocks: Dict[str, sp.csr_matrix] = field(repr=False)
    peclet: float = 0.0


@dataclass
class _SideBlocks:
    dofs: np.ndarray
    mass_new: np.ndarray
    mass_old: np.ndarray
    diffusion: np.ndarray
    convection: Optional[np.ndarray]
    load: np.ndarray
    peclet: float


def _side_blocks(side: str, t_old: float, t_new: float, space: TransportSpace, deformation,
                 radius_field, velocity, rule, source: Optional[TransportSource],
                 cells: slice) -> _SideBlocks:
    sub = space.side(side)
    local_cells = sub.cells[cells]
    cq = cell_quadrature(sub.vertices, local_cells, rule)
    n_cells, n_q = cq.jxw.shape
    points = cq.points.reshape(-1, 3)
    new = deformation.eval_coeffs(t_new, points, radius_field, side=side)
    J_old = deformation.eval_coeffs(t_old, points, radius_field).J.reshape(n_cells, n_q)
    J_new = new.J.reshape(n_cells, n_q)
    K = new.K.reshape(n_cells, n_q, 3, 3)
    phi = cq.bary                                                   # (Q, 4)
    grads = cq.grads                                                # (C, 4, 3)

    mass_new = np.einsum("cq,qa,qb->cab", J_new * cq.jxw, phi, phi)
    mass_old = np.einsum("cq,qa,qb->cab", J_old * cq.jxw, phi, phi)
    diffusion = np.einsum("cq,cqij,cbj,cai->cab", cq.jxw, K, grads, grads)

    convection = None
    peclet = 0.0
    if side == "fluid" and velocity is not None:
        w = velocity.space.p2.evaluate(velocity.w, np.arange(n_cells) + cells.start, cq.bary)
        Aw = np.einsum("cqij,cqj->cqi", new.A.reshape(n_cells, n_q, 3, 3), w)
        convection = -np.einsum("cq,qb,cqi,cai->cab", cq.jxw, phi, Aw, grads)
        coords = sub.vertices[local_cells]
        h = np.max(np.linalg.norm(coords[:, :, None, :] - coords[:, None, :, :], axis=-1), axis=(1, 2))
        kappa = np.min(np.linalg.eigvalsh(0.5 * (K + np.swapaxes(K, -1, -2))), axis=-1)
        peclet = float(np.max(np.linalg.norm(Aw, axis=-1) * h[:, None] / (2.0 * kappa), initial=0.0))

    load = np.zeros((n_cells, 4))
    if source is not None:
        values = source.volume(side, points).reshape(n_cells, n_q)
        load = np.einsum("cq,cq,qa->ca", cq.jxw, values, phi)

    return _SideBlocks(dofs=space.offset(side) + local_cells, mass_new=mass_new, mass_old=mass_old,
                       diffusion=diffusion, convection=convection, load=load, peclet=peclet)


def facet_setup(space: TransportSpace, side: str, facets, rule):
    sub = space.side(side)
    cells = sub.local_cells(facets.cells)
    fq = facet_quadrature(sub.vertices, sub.cells, cells, sub.localize(facets.vertices),
                          facets.normals, rule)
    return cells, fq, space.offset(side) + sub.cells[cells]


def interface_block(t: float, space: TransportSpace, deformation, radius_field, alpha: float,
                    rule) -> sp.csr_matrix:
    """alpha * integral over Sigma of factor (phi_f - phi_s)(psi_f - psi_s)."""
    mesh = space.mesh
    _, fq_f, dofs_f = facet_setup(space, "fluid", mesh.facets[SIGMA], rule)
    _, fq_s, dofs_s = facet_setup(space, "solid", mesh.sigma_solid, rule)
    factor = deformation.interface_factor(t, fq_f.points[..., 0], radius_field)
    weight = alpha * factor * fq_f.jxw                                       # (F, Q)
    basis = np.concatenate([fq_f.bary, -fq_s.bary], axis=-1)                 # (F, Q, 8)
    local = np.einsum("fq,fqa,fqb->fab", weight, basis, basis)
    dofs = np.hstack([dofs_f, dofs_s])
    block = SparseAssembler((space.n_dofs, space.n_dofs))
    block.add_local(dofs, dofs, local)
    return block.tocsr()


def _end_face_terms(t: float, space: TransportSpace, deformation, radius_field, velocity,
                    inflow, rule):
    """Outflow matrix (w.n)^+ J and inflow load -f_in (w.n)^- J on the end faces."""
    ends = space.mesh.facets[GAMMA_F]
    cells, fq, dofs = facet_setup(space, "fluid", ends, rule)
    n_f, n_q = fq.jxw.shape
    J = deformation.eval_coeffs(t, fq.points.reshape(-1, 3), radius_field).J.reshape(n_f, n_q)
    w = np.einsum("fqa,fai->fqi", p2_values(fq.bary), velocity.w[velocity.space.p2.cell_dofs[cells]])
    wn = np.einsum("fqi,fi->fq", w, ends.normals)
    outflow = np.einsum("fq,fqa,fqb->fab", np.maximum(wn, 0.0) * J * fq.jxw, fq.bary, fq.bary)
    f_in = inflow.evaluate(fq.points, t)
    load = -np.einsum("fq,fqa->fa", f_in * np.minimum(wn, 0.0) * J * fq.jxw, fq.bary)
    block = SparseAssembler((space.n_dofs, space.n_dofs))
    block.add_local(dofs, dofs, outflow)
    return block.tocsr(), assemble_vector(dofs, load, space.n_dofs)


def _source_flux_load(space: TransportSpace, source: TransportSource, rule) -> np.ndarray:
    mesh = space.mesh
    pieces = (("gamma_f", "fluid", mesh.facets[GAMMA_F]),
              ("sigma_fluid", "fluid", mesh.facets[SIGMA]),
              ("sigma_solid", "solid", mesh.sigma_solid),
              ("gamma_n", "solid", mesh.facets[GAMMA_N]))
    load = np.zeros(space.n_dofs)
    for tag, side, facets in pieces:
        if not len(facets):
            continue
        _, fq, dofs = facet_setup(space, side, facets, rule)
        n_q = fq.jxw.shape[1]
        normals = np.repeat(facets.normals[:, None, :], n_q, axis=1)
        values = source.flux(tag, fq.points.reshape(-1, 3), normals.reshape(-1, 3))
        local = np.einsum("fq,fq,fqa->fa", fq.jxw, values.reshape(fq.jxw.shape), fq.bary)
        load += assemble_vector(dofs, local, space.n_dofs)
    return load


def assemble_step(t_old: float, t_new: float, state: TransportState, space: TransportSpace,
                  deformation, radius_field, params, velocity=None, quadrature_degree: int = 4,
                  source: Optional[TransportSource] = None, workers: int = 1,
                  chunk_size: int = 512) -> TransportSystem:
    """Fully implicit system for theta at t_new; only J^n theta^n is explicit.

    `velocity` is the Stokes solution at t_new. It may be omitted only for
    manufactured-source runs, which are posed with w = 0.
    """
    dt = t_new - t_old
    if dt <= 0.0:
        raise ParameterError("Transport step needs t_new > t_old", details={"dt": dt})
    if velocity is None and source is None:
        raise ParameterError("Transport step needs the Stokes velocity at the new level",
                             details={"t": t_new})

    rule = tet_rule(quadrature_degree)
    face_rule = triangle_rule(quadrature_degree)
    n = space.n_dofs
    names = ("mass_new", "mass_old", "diffusion", "convection")
    assemblers = {name: SparseAssembler((n, n)) for name in names}
    load = np.zeros(n)
    peclet = 0.0
    for side in ("fluid", "solid"):
        chunks = map_chunks(
            lambda cells: _side_blocks(side, t_old, t_new, space, deformation, radius_field,
                                       velocity, rule, source, cells),
            space.side(side).n_cells, chunk_size=chunk_size, workers=workers,
        )
        for chunk in chunks:
            for name in names:
                local = getattr(chunk, name)
                if local is not None:
                    assemblers[name].add_local(chunk.dofs, chunk.dofs, local)
            load += assemble_vector(chunk.dofs, chunk.load, n)
            peclet = max(peclet, chunk.peclet)

    blocks = {name: assembler.tocsr() for name, assembler in assemblers.items()}
    blocks["interface"] = interface_block(t_new, space, deformation, radius_field,
                                          params.alpha, face_rule)
    if velocity is not None:
        blocks["outflow"], inflow_load = _end_face_terms(t_new, space, deformation, radius_field,
                                                         velocity, params.fin, face_rule)
        load += inflow_load
    else:
        blocks["outflow"] = sp.csr_matrix((n, n))
    if source is not None:
        load += _source_flux_load(space, source, face_rule)

    matrix = (blocks["mass_new"] / dt + blocks["diffusion"] + blocks["convection"]
              + blocks["outflow"] + blocks["interface"]).tocsr()
    rhs = blocks["mass_old"] @ state.vector / dt + load

    solid_points = space.mesh.solid.vertices[space.dirichlet_dofs - space.n_fluid]
    values = (np.asarray(source.dirichlet(solid_points), dtype=float) if source is not None
              else np.zeros(len(space.dirichlet_dofs)))
    if peclet > PECLET_WARN:
        logger.warning(f"Cell Peclet number {peclet:.2f} exceeds {PECLET_WARN} at t={t_new:.4f}")
    return TransportSystem(t_old=t_old, t_new=t_new, space=space, matrix=matrix, rhs=rhs,
                           dirichlet_values=values, blocks=blocks, peclet=peclet)
