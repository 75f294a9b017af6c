"""
Post-processing of Stokes solutions: physical fields, flow rates through the
end faces, weak boundary residuals and an inf-sup diagnostic.
"""
import logging
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh
from scipy.sparse.linalg import splu

from app.fem.assembly import facet_quadrature
from app.fem.elements import p2_values
from app.fem.quadrature import triangle_rule
from app.geometry.mesh import GAMMA_F
from app.stokes.solver import StokesSolution
from app.stokes.system import StokesSpace, StokesSystem, assemble_stokes

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PhysicalFlow:
    """v = w + v_b at the P2 nodes and p = q + f_b at the vertices, with deformed coordinates."""
    node_points: np.ndarray
    v: np.ndarray
    vertex_points: np.ndarray
    p: np.ndarray


def reconstruct_physical(solution: StokesSolution, deformation, radius_field, params) -> PhysicalFlow:
    space = solution.space
    nodes = space.p2.coordinates
    coeffs = deformation.eval_coeffs(solution.t, nodes, radius_field)
    vertices = space.mesh.fluid.vertices
    return PhysicalFlow(
        node_points=coeffs.S,
        v=solution.w + coeffs.v_b,
        vertex_points=coeffs.S[:space.p2.n_vertices],
        p=solution.q + params.fb.evaluate(vertices, params.L),
    )


def flow_rates(solution: StokesSolution, deformation, radius_field, degree: int = 4) -> dict:
    """Q = integral of J w.n over each end face; negative means inflow."""
    space = solution.space
    mesh = space.mesh
    fluid = mesh.fluid
    ends = mesh.facets[GAMMA_F]
    cells = fluid.local_cells(ends.cells)
    fq = facet_quadrature(fluid.vertices, fluid.cells, cells, fluid.localize(ends.vertices),
                          ends.normals, triangle_rule(degree))
    n_f, n_q = fq.jxw.shape
    J = deformation.eval_coeffs(solution.t, fq.points.reshape(-1, 3), radius_field).J.reshape(n_f, n_q)
    w = np.einsum("fqa,fai->fqi", p2_values(fq.bary), solution.w[space.p2.cell_dofs[cells]])
    flux = np.einsum("fq,fq,fqi,fi->f", fq.jxw, J, w, ends.normals)
    return {"inlet": float(flux[space.inlet_facets].sum()),
            "outlet": float(flux[space.outlet_facets].sum())}


def poiseuille_flow_rate(params) -> float:
    """pi R0^4 (P_in - P_out) / (8 mu L)."""
    return np.pi * params.R0 ** 4 * (params.fb.p_in - params.fb.p_out) / (8.0 * params.mu * params.L)


def end_face_nodes(space: StokesSpace) -> np.ndarray:
    """Unconstrained P2 nodes on the end faces."""
    fluid = space.mesh.fluid
    tri = fluid.localize(space.mesh.facets[GAMMA_F].vertices)
    edges = np.vstack([tri[:, [0, 1]], tri[:, [0, 2]], tri[:, [1, 2]]])
    nodes = np.unique(np.concatenate([tri.ravel(), space.p2.edge_nodes(edges)]))
    return np.setdiff1d(nodes, space.sigma_nodes)


def momentum_boundary_residual(system: StokesSystem, solution: StokesSolution) -> float:
    """Relative weak momentum residual on the end-face test functions.

    It vanishes when the natural condition (zero traction for q, i.e. p = f_b)
    holds in the discrete sense.
    """
    space = system.space
    x = solution.vector
    n_u = space.pressure_offset
    residual = system.matrix[:n_u] @ x - system.momentum_rhs
    dofs = space.velocity_dofs(end_face_nodes(space))
    scale = max(float(np.abs(system.momentum_rhs).max()), 1e-300)
    return float(np.abs(residual[dofs]).max(initial=0.0)) / scale


def infsup_from_system(system: StokesSystem) -> float:
    """Smallest nonzero generalized singular value of B in the a(t)- and J-mass norms."""
    space = system.space
    n_u = space.pressure_offset
    free = np.setdiff1d(np.arange(n_u), system.constrained)
    K_ff = system.velocity_block[free][:, free].tocsc()
    B_f = system.divergence_block[:, free]
    X = splu(K_ff).solve(B_f.T.toarray())
    schur = B_f @ X
    schur = 0.5 * (schur + schur.T)
    eigenvalues = eigh(schur, system.pressure_mass.toarray(), eigvals_only=True)
    positive = eigenvalues[eigenvalues > 1e-12 * eigenvalues.max()]
    beta = float(np.sqrt(positive.min()))
    logger.info(f"inf-sup estimate {beta:.4f} ({len(eigenvalues)} pressure modes)")
    return beta


def infsup_estimate(space: StokesSpace, deformation, t: float, radius_field, params,
                    quadrature_degree: int = 4) -> float:
    system = assemble_stokes(t, space, deformation, radius_field, params,
                             quadrature_degree=quadrature_degree)
    return infsup_from_system(system)
