"""
Staggered time stepping of the coupled system.

Within a step the averaged temperature at the new level is lagged on the
first pass and refreshed with the latest solid temperature on later passes.
"""
import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
import structlog
from scipy import sparse as sp

from app.chemistry.averaging import AveragedHistory, spatial_average, temporal_convolve
from app.chemistry.ode import ConcentrationState, advance as advance_concentration, initial_state
from app.chemistry.radius_field import RadiusField, radius_from_states
from app.config import RunConfig, check_run_config
from app.deformation.coefficients import Deformation, deformed_volume
from app.deformation.table_cache import RhoTableCache
from app.errors import InvariantViolation
from app.fem.assembly import SparseAssembler, cell_quadrature
from app.fem.quadrature import tet_rule
from app.geometry.mesh import ReferenceMesh, SubMesh, build_reference_mesh
from app.io.reports import StepRecord
from app.params.models import ModelParams
from app.params.validation import validate
from app.state.coupled_state import CoupledNode, CoupledState
from app.stokes.postprocess import flow_rates
from app.stokes.solver import StokesSolution, solve_stokes
from app.stokes.system import StokesSpace, assemble_stokes, build_stokes_space
from app.transport.diagnostics import energy_norm, interface_heat_flux, outlet_advective_flux
from app.transport.solver import advance as advance_transport
from app.transport.system import (
    TransportSpace, TransportState, assemble_step, build_transport_space, initial_transport_state,
)

logger = logging.getLogger(__name__)
log = structlog.get_logger(__name__)

VOLUME_SLACK = 1e-8


def reference_mass(submesh: SubMesh, degree: int = 2) -> sp.csr_matrix:
    """Reference-domain P1 mass matrix, the L2(Omega_s) inner product."""
    cq = cell_quadrature(submesh.vertices, submesh.cells, tet_rule(degree))
    local = np.einsum("cq,qa,qb->cab", cq.jxw, cq.bary, cq.bary)
    mass = SparseAssembler((submesh.n_vertices, submesh.n_vertices))
    mass.add_local(submesh.cells, submesh.cells, local)
    return mass.tocsr()


@dataclass
class SimulationContext:
    """Everything that stays fixed during a run."""
    config: RunConfig
    params: ModelParams
    mesh: ReferenceMesh
    stokes_space: StokesSpace
    transport_space: TransportSpace
    deformation: Deformation
    x_nodes: np.ndarray
    solid_weights: np.ndarray
    solid_mass: sp.csr_matrix
    probe_points: np.ndarray

    @property
    def dt(self) -> float:
        return self.config.dt

    def time(self, step: int) -> float:
        return step * self.config.dt

    @property
    def plateau(self) -> float:
        """T1 on t <= 0: mean of the initial solid temperature."""
        theta0 = np.full(self.mesh.solid.n_vertices, self.params.initial.theta_s0)
        return spatial_average(theta0, self.mesh.solid, self.solid_weights)

    def l2_solid(self, values: np.ndarray) -> float:
        return float(np.sqrt(max(values @ (self.solid_mass @ values), 0.0)))

    def assemble_kwargs(self) -> dict:
        return {"quadrature_degree": self.config.quadrature_degree,
                "workers": self.config.effective_workers, "chunk_size": self.config.chunk_size}


def build_context(config: RunConfig, params: Optional[ModelParams] = None) -> SimulationContext:
    """Validate the configuration, then build the mesh, tables and spaces of a run."""
    check_run_config(config)
    if params is None:
        params = config.to_params()
    else:
        validate(params, seed=config.seed).raise_for_failures()
    mesh = build_reference_mesh(params, config.resolution_spec,
                                min_dihedral_deg=config.min_dihedral_deg)
    table = RhoTableCache.get_table(params, n_R=config.rho_n_R, n_r=config.rho_n_r)
    cq = cell_quadrature(mesh.vertices, mesh.cells, tet_rule(config.quadrature_degree))
    return SimulationContext(
        config=config, params=params, mesh=mesh,
        stokes_space=build_stokes_space(mesh),
        transport_space=build_transport_space(mesh),
        deformation=Deformation(params, table),
        x_nodes=np.linspace(0.0, params.L, config.n_x1),
        solid_weights=mesh.solid.vertex_volumes(),
        solid_mass=reference_mass(mesh.solid),
        probe_points=cq.points.reshape(-1, 3),
    )


def initial_coupled_state(context: SimulationContext) -> CoupledState:
    history = AveragedHistory.start(context.params.kernel, context.plateau)
    T0 = temporal_convolve(history, 0.0)
    node = CoupledNode(step=0, t=0.0,
                       concentration=initial_state(context.params, context.x_nodes, T0),
                       transport=initial_transport_state(context.transport_space, context.params))
    return CoupledState(history=history, nodes=[node])


def solve_flow(context: SimulationContext, t: float, radius: RadiusField) -> StokesSolution:
    system = assemble_stokes(t, context.stokes_space, context.deformation, radius, context.params,
                             **context.assemble_kwargs())
    return solve_stokes(system, tol=context.config.stokes_tol)


def transport_step(context: SimulationContext, t_old: float, t_new: float, state: TransportState,
                   radius: RadiusField, flow: StokesSolution) -> Tuple[TransportState, float]:
    system = assemble_step(t_old, t_new, state, context.transport_space, context.deformation,
                           radius, context.params, velocity=flow, **context.assemble_kwargs())
    return advance_transport(system, tol=context.config.transport_tol), system.peclet


@dataclass(frozen=True)
class StepResult:
    node: CoupledNode
    history: AveragedHistory
    radius: RadiusField
    residuals: List[float]
    peclet: float


def step_coupled(context: SimulationContext, state: CoupledState, n_subiter: int) -> StepResult:
    """Advance the committed state by one time step."""
    node = state.current
    t_old, t_new = node.t, context.time(node.step + 1)
    params = context.params
    guess = node.transport.theta_s
    residuals: List[float] = []
    for _ in range(n_subiter):
        T1 = spatial_average(guess, context.mesh.solid, context.solid_weights)
        history = state.history.extended(t_new, T1)
        T_new = temporal_convolve(history, t_new)
        concentration = advance_concentration(params, node.concentration, t_new, T_new)
        radius = radius_from_states(params, [node.concentration, concentration])
        flow = solve_flow(context, t_new, radius)
        transport, peclet = transport_step(context, t_old, t_new, node.transport, radius, flow)
        residuals.append(context.l2_solid(transport.theta_s - guess))
        guess = transport.theta_s

    history = state.history.extended(
        t_new, spatial_average(transport.theta_s, context.mesh.solid, context.solid_weights))
    new_node = CoupledNode(step=node.step + 1, t=t_new, concentration=concentration,
                           transport=transport, stokes=flow)
    return StepResult(node=new_node, history=history, radius=radius, residuals=residuals,
                      peclet=peclet)


def volume_check(context: SimulationContext, t: float, radius) -> Tuple[float, float]:
    """|vol(S(t, fluid)) - integral of pi R^2| and the tolerance it must meet."""
    mesh = context.mesh
    computed = deformed_volume(context.deformation, t, mesh.fluid, radius,
                               context.config.quadrature_degree)
    analytic = radius.at(t).deformed_volume(mesh.L)
    return abs(computed - analytic), 3.0 * mesh.fluid_volume_defect + VOLUME_SLACK


def step_record(context: SimulationContext, result: StepResult) -> StepRecord:
    node = result.node
    t = node.t
    radius = result.radius
    deformation = context.deformation
    J_min = deformation.jacobian_floor(t, context.probe_points, radius)
    if J_min < deformation.eta:
        raise InvariantViolation("Jacobian below eta", details={"J_min": J_min, "eta": deformation.eta,
                                                               "t": t})
    volume_error, volume_tol = volume_check(context, t, radius)
    if volume_error > volume_tol:
        raise InvariantViolation("Deformed fluid volume disagrees with the radius field",
                                 details={"error": volume_error, "tolerance": volume_tol, "t": t})
    R_min, R_mean, R_max = radius.at(t).bounds(context.params.L)
    rates = flow_rates(node.stokes, deformation, radius, context.config.quadrature_degree)
    space = context.transport_space
    return StepRecord(
        step=node.step, t=t,
        T1=float(result.history.values[-1]), T=node.concentration.T,
        R_min=R_min, R_mean=R_mean, R_max=R_max, J_min=J_min, eta=deformation.eta,
        Q_in=rates["inlet"], Q_out=rates["outlet"],
        interface_flux=interface_heat_flux(node.transport, space, deformation, radius,
                                           context.params.alpha),
        outlet_flux=outlet_advective_flux(node.transport, space, node.stokes, deformation, radius),
        energy=energy_norm(node.transport, space, deformation, radius),
        stokes_residual=node.stokes.residual,
        subiteration_residuals=result.residuals,
        volume_error=volume_error, peclet=result.peclet,
    )


def run_staggered(context: SimulationContext, state: Optional[CoupledState] = None,
                  n_steps: Optional[int] = None, on_commit=None) -> CoupledState:
    """Step from the current node until T_final (or for n_steps steps)."""
    state = state or initial_coupled_state(context)
    total = context.config.n_steps
    last = total if n_steps is None else min(total, state.current.step + n_steps)
    while state.current.step < last:
        result = step_coupled(context, state, context.config.n_subiter)
        record = step_record(context, result)
        state.commit(result.node, result.history, record)
        log.info("step_committed", step=record.step, t=record.t, T=record.T,
                 R_mean=record.R_mean, J_min=record.J_min, residuals=record.subiteration_residuals)
        if on_commit is not None:
            on_commit(state, result)
    return state
