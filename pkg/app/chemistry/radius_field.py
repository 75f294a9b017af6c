"""
Vessel radius R(t, x1) = H(c(t, x1)) and its derivatives by the chain rule.
"""
import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from app.chemistry.ode import ConcentrationField, ConcentrationState
from app.deformation.radius import HermiteProfile
from app.errors import HistoryGapError, InvariantViolation
from app.params.functions import eval_H, eval_H_deriv, eval_H_second
from app.params.models import ModelParams

logger = logging.getLogger(__name__)

_BOUND_TOL = 1e-12
_TIME_TOL = 1e-12


def radius_samples(params: ModelParams, c, c_t, c_x, c_tx) -> Tuple[np.ndarray, ...]:
    """(R, R_x, R_t, R_tx) from c and its derivatives."""
    h1 = eval_H_deriv(params, c)
    h2 = eval_H_second(params, c)
    R = eval_H(params, c)
    if np.any(R < params.R1 - _BOUND_TOL) or np.any(R > params.R2 + _BOUND_TOL):
        raise InvariantViolation("Radius left [R1, R2]",
                                 details={"min": float(np.min(R)), "max": float(np.max(R))})
    return R, h1 * c_x, h1 * c_t, h2 * c_t * c_x + h1 * c_tx


@dataclass(frozen=True)
class RadiusField:
    """Nodal radius samples on a (t, x1) grid; Hermite in x1, linear in t."""
    t_grid: np.ndarray
    x_nodes: np.ndarray
    R: np.ndarray
    R_x: np.ndarray
    R_t: np.ndarray
    R_tx: np.ndarray

    def _bracket(self, t: float):
        if t < self.t_grid[0] - _TIME_TOL or t > self.t_grid[-1] + _TIME_TOL:
            raise HistoryGapError("Radius requested outside the computed time range",
                                  details={"t": t, "range": [float(self.t_grid[0]),
                                                             float(self.t_grid[-1])]})
        if len(self.t_grid) == 1:
            return 0, 0, 0.0
        i = int(np.clip(np.searchsorted(self.t_grid, t, side="right") - 1, 0, len(self.t_grid) - 2))
        theta = (t - self.t_grid[i]) / (self.t_grid[i + 1] - self.t_grid[i])
        return i, i + 1, float(np.clip(theta, 0.0, 1.0))

    def at(self, t: float) -> HermiteProfile:
        i, j, theta = self._bracket(t)
        blend = [(1.0 - theta) * a[i] + theta * a[j] for a in (self.R, self.R_x, self.R_t, self.R_tx)]
        return HermiteProfile(self.x_nodes, *blend)

    def bounds_at(self, index: int) -> Tuple[float, float, float]:
        row = self.R[index]
        return float(row.min()), float(row.mean()), float(row.max())


def radius_field(params: ModelParams, c: ConcentrationField) -> RadiusField:
    R, R_x, R_t, R_tx = radius_samples(params, c.c, c.c_t, c.c_x, c.c_tx)
    return RadiusField(t_grid=c.t_grid, x_nodes=c.x_nodes, R=R, R_x=R_x, R_t=R_t, R_tx=R_tx)


def radius_from_states(params: ModelParams, states) -> RadiusField:
    """Radius field through a sequence of concentration states (one per time node)."""
    rows = []
    for state in states:
        c_t, c_tx = state.time_derivatives(params.k_deg)
        rows.append(radius_samples(params, state.c, c_t, state.c_x, c_tx))
    R, R_x, R_t, R_tx = (np.stack(a) for a in zip(*rows))
    return RadiusField(t_grid=np.array([s.t for s in states]), x_nodes=states[0].x_nodes,
                       R=R, R_x=R_x, R_t=R_t, R_tx=R_tx)


def radius_profile(params: ModelParams, state: ConcentrationState) -> HermiteProfile:
    return radius_from_states(params, [state]).at(state.t)
