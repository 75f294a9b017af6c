"""
Global Picard iteration on space-time solid temperatures.

One application of the solution operator runs the whole pipeline over
[0, T_final]: averaging and chemistry for all times, then the Stokes and
transport solves step by step with the resulting radius field.
"""
import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
import structlog

from app.chemistry.averaging import AveragedHistory, spatial_average, temporal_convolve
from app.chemistry.ode import advance as advance_concentration, initial_state
from app.chemistry.radius_field import RadiusField, radius_from_states
from app.driver.staggered import (
    SimulationContext, initial_coupled_state, solve_flow, transport_step,
)
from app.io.reports import PicardRecord
from app.state.coupled_state import CoupledNode, CoupledState

logger = logging.getLogger(__name__)
log = structlog.get_logger(__name__)


@dataclass
class Trajectory:
    """Result of one application of the solution operator."""
    state: CoupledState
    radius: RadiusField

    @property
    def theta_s(self) -> np.ndarray:
        return self.state.theta_s_trajectory()


@dataclass
class PicardResult:
    trajectory: Trajectory
    converged: bool
    iterations: int
    records: List[PicardRecord] = field(default_factory=list)

    @property
    def residuals(self) -> List[float]:
        return [r.residual for r in self.records]


def time_grid(context: SimulationContext) -> np.ndarray:
    return np.array([context.time(n) for n in range(context.config.n_steps + 1)])


def constant_guess(context: SimulationContext, value: Optional[float] = None) -> np.ndarray:
    """theta_s extended constantly in time (the initial data by default)."""
    value = context.params.initial.theta_s0 if value is None else value
    return np.full((context.config.n_steps + 1, context.mesh.solid.n_vertices), float(value))


def history_from_trajectory(context: SimulationContext, theta_s: np.ndarray) -> AveragedHistory:
    times = time_grid(context)
    values = np.array([spatial_average(row, context.mesh.solid, context.solid_weights)
                       for row in theta_s])
    # theta_s(0) is the initial datum whatever the guess
    values[0] = context.plateau
    return AveragedHistory(times=times, values=values, plateau=context.plateau,
                           kernel=context.params.kernel)


def space_time_norm(context: SimulationContext, difference: np.ndarray) -> float:
    """L2(0, T; L2(Omega_s)) norm with trapezoidal weights in time."""
    per_step = np.array([context.l2_solid(row) ** 2 for row in difference])
    weights = np.full(len(per_step), context.dt)
    weights[[0, -1]] *= 0.5
    return float(np.sqrt(np.sum(weights * per_step)))


def apply_solution_operator(context: SimulationContext, theta_s: np.ndarray) -> Trajectory:
    """F(theta_s): the solid temperature produced by the pipeline driven by theta_s."""
    params = context.params
    history = history_from_trajectory(context, theta_s)
    times = history.times
    initial = initial_coupled_state(context)
    states = [initial_state(params, context.x_nodes, temporal_convolve(history, 0.0))]
    for t in times[1:]:
        states.append(advance_concentration(params, states[-1], t, temporal_convolve(history, t)))
    radius = radius_from_states(params, states)

    state = CoupledState(history=history, nodes=[initial.current])
    for n in range(1, len(times)):
        node = state.current
        flow = solve_flow(context, times[n], radius)
        transport, _ = transport_step(context, times[n - 1], times[n], node.transport, radius, flow)
        state.commit(CoupledNode(step=n, t=times[n], concentration=states[n],
                                 transport=transport, stokes=flow), history)
    return Trajectory(state=state, radius=radius)


def global_picard(context: SimulationContext, initial_guess: Optional[np.ndarray] = None,
                  tol: Optional[float] = None, max_iter: Optional[int] = None) -> PicardResult:
    """Iterate theta_s <- F(theta_s) until the space-time change drops below tol.

    Without convergence the iterate with the smallest residual is returned
    with converged=False.
    """
    tol = context.config.picard_tol if tol is None else tol
    max_iter = context.config.picard_max_iter if max_iter is None else max_iter
    current = constant_guess(context) if initial_guess is None else np.asarray(initial_guess, float)

    records: List[PicardRecord] = []
    best: Optional[Trajectory] = None
    best_residual = np.inf
    for iteration in range(1, max_iter + 1):
        trajectory = apply_solution_operator(context, current)
        residual = space_time_norm(context, trajectory.theta_s - current)
        records.append(PicardRecord(iteration=iteration, residual=residual))
        log.info("picard_iteration", iteration=iteration, residual=residual)
        if residual < best_residual:
            best, best_residual = trajectory, residual
        current = trajectory.theta_s
        if residual < tol:
            return PicardResult(trajectory=trajectory, converged=True, iterations=iteration,
                                records=records)

    logger.warning(f"Global Picard did not reach {tol:.1e} in {max_iter} iterations "
                   f"(best residual {best_residual:.3e})")
    return PicardResult(trajectory=best, converged=False, iterations=max_iter, records=records)


def mode_consistency(context: SimulationContext, staggered: CoupledState) -> dict:
    """One Picard application from the staggered trajectory, against its sub-iteration residuals."""
    theta = staggered.theta_s_trajectory()
    change = space_time_norm(context, apply_solution_operator(context, theta).theta_s - theta)
    last = np.array([0.0] + [record.subiteration_residuals[-1] for record in staggered.records])
    weights = np.full(len(last), context.dt)
    weights[[0, -1]] *= 0.5
    subiteration = float(np.sqrt(np.sum(weights * last ** 2)))
    return {"picard_change": change, "subiteration_residual": subiteration,
            "consistent": change <= max(subiteration, context.config.picard_tol)}
