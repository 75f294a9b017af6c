"""
Solution of one transport step.
"""
import logging

import numpy as np

from app.errors import InvariantViolation
from app.fem.linear import RESIDUAL_TOL, solve_constrained
from app.transport.system import TransportState, TransportSystem

logger = logging.getLogger(__name__)


def advance(system: TransportSystem, tol: float = RESIDUAL_TOL) -> TransportState:
    space = system.space
    result = solve_constrained(system.matrix, system.rhs, space.dirichlet_dofs,
                               system.dirichlet_values, label="transport system", tol=tol)
    theta = result.solution
    if not np.all(np.isfinite(theta)):
        raise InvariantViolation("Non-finite temperature", details={"t": system.t_new})
    theta_f, theta_s = space.split(theta)
    logger.debug(f"Transport step to t={system.t_new:.4f}: residual {result.residual:.2e}")
    return TransportState(t=system.t_new, theta_f=theta_f.copy(), theta_s=theta_s.copy())
