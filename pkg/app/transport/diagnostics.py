"""
Scalar diagnostics of a temperature state.
"""
import logging
from typing import Callable

import numpy as np
from scipy import sparse as sp

from app.fem.assembly import SparseAssembler, cell_quadrature
from app.fem.elements import p2_values
from app.fem.quadrature import tet_rule, triangle_rule
from app.geometry.mesh import GAMMA_F, SIGMA, SubMesh
from app.transport.system import TransportSpace, TransportState, facet_setup

logger = logging.getLogger(__name__)


def weighted_mass(space: TransportSpace, deformation, t: float, radius_field,
                  degree: int = 4) -> sp.csr_matrix:
    """J-weighted P1 mass matrix over both sides."""
    mass = SparseAssembler((space.n_dofs, space.n_dofs))
    for side in ("fluid", "solid"):
        sub = space.side(side)
        cq = cell_quadrature(sub.vertices, sub.cells, tet_rule(degree))
        J = deformation.eval_coeffs(t, cq.points.reshape(-1, 3), radius_field).J.reshape(cq.jxw.shape)
        local = np.einsum("cq,qa,qb->cab", J * cq.jxw, cq.bary, cq.bary)
        dofs = space.offset(side) + sub.cells
        mass.add_local(dofs, dofs, local)
    return mass.tocsr()


def energy_norm(state: TransportState, space: TransportSpace, deformation, radius_field,
                degree: int = 4) -> float:
    """Integral of J |theta|^2 over fluid and solid."""
    theta = state.vector
    return float(theta @ (weighted_mass(space, deformation, state.t, radius_field, degree) @ theta))


def interface_heat_flux(state: TransportState, space: TransportSpace, deformation, radius_field,
                        alpha: float, degree: int = 4) -> float:
    """Heat leaving the fluid through the interface, alpha (theta_f - theta_s) factor."""
    rule = triangle_rule(degree)
    mesh = space.mesh
    _, fq_f, dofs_f = facet_setup(space, "fluid", mesh.facets[SIGMA], rule)
    _, fq_s, dofs_s = facet_setup(space, "solid", mesh.sigma_solid, rule)
    theta = state.vector
    jump = (np.einsum("fqa,fa->fq", fq_f.bary, theta[dofs_f])
            - np.einsum("fqa,fa->fq", fq_s.bary, theta[dofs_s]))
    factor = deformation.interface_factor(state.t, fq_f.points[..., 0], radius_field)
    return float(alpha * np.sum(fq_f.jxw * factor * jump))


def outlet_advective_flux(state: TransportState, space: TransportSpace, velocity, deformation,
                          radius_field, degree: int = 4) -> float:
    """Integral of theta_f J w.n over the outlet face x1 = L."""
    ends = space.mesh.facets[GAMMA_F]
    cells, fq, dofs = facet_setup(space, "fluid", ends, triangle_rule(degree))
    outlet = velocity.space.outlet_facets
    n_f, n_q = fq.jxw.shape
    J = deformation.eval_coeffs(state.t, fq.points.reshape(-1, 3), radius_field).J.reshape(n_f, n_q)
    w = np.einsum("fqa,fai->fqi", p2_values(fq.bary), velocity.w[velocity.space.p2.cell_dofs[cells]])
    theta = np.einsum("fqa,fa->fq", fq.bary, state.vector[dofs])
    flux = np.einsum("fq,fq,fq,fqi,fi->f", fq.jxw, J, theta, w, ends.normals)
    return float(flux[outlet].sum())


def outlet_mean_temperature(state: TransportState, space: TransportSpace, degree: int = 4) -> float:
    ends = space.mesh.facets[GAMMA_F]
    _, fq, dofs = facet_setup(space, "fluid", ends, triangle_rule(degree))
    x1 = fq.points[..., 0].mean(axis=1)
    outlet = x1 > 0.5 * space.mesh.L
    theta = np.einsum("fqa,fa->fq", fq.bary, state.vector[dofs])
    return float(np.sum(fq.jxw[outlet] * theta[outlet]) / np.sum(fq.jxw[outlet]))


def l2_error(values: np.ndarray, exact: Callable[[np.ndarray], np.ndarray], submesh: SubMesh,
             degree: int = 6) -> float:
    """Reference-domain L2 distance between a P1 field and an exact function."""
    cq = cell_quadrature(submesh.vertices, submesh.cells, tet_rule(degree))
    discrete = np.einsum("qa,ca->cq", cq.bary, np.asarray(values)[submesh.cells])
    reference = exact(cq.points.reshape(-1, 3)).reshape(cq.jxw.shape)
    return float(np.sqrt(np.sum(cq.jxw * (discrete - reference) ** 2)))
