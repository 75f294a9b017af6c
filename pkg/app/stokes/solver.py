"""
Direct solution of the assembled Stokes saddle-point system.
"""
import logging
from dataclasses import dataclass

import numpy as np

from app.errors import SolverError
from app.fem.linear import RESIDUAL_TOL, solve_constrained
from app.stokes.system import StokesSpace, StokesSystem

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class StokesSolution:
    t: float
    space: StokesSpace
    w: np.ndarray        # (n_nodes, 3) at P2 nodes
    q: np.ndarray        # (n_vertices,) at fluid vertices
    residual: float

    @property
    def vector(self) -> np.ndarray:
        return np.concatenate([self.w.T.ravel(), self.q])


def solve_stokes(system: StokesSystem, tol: float = RESIDUAL_TOL) -> StokesSolution:
    try:
        result = solve_constrained(system.matrix, system.rhs, system.constrained,
                                   system.constrained_values, label="Stokes system", tol=tol)
    except SolverError as exc:
        exc.details.setdefault("hint", "run stokes.postprocess.infsup_estimate on a coarse mesh")
        raise
    space = system.space
    x = result.solution
    w = x[:space.pressure_offset].reshape(3, space.n_velocity_nodes).T
    q = x[space.pressure_offset:]
    logger.info(f"Stokes solve at t={system.t:.4f}: residual {result.residual:.2e}, "
                f"max|w|={np.abs(w).max():.3e}")
    return StokesSolution(t=system.t, space=space, w=w, q=q, residual=result.residual)


def mass_balance_residual(system: StokesSystem, solution: StokesSolution) -> float:
    """max |B w - g|, the discrete div(A(w + v_b)) = 0 in weak form."""
    w = solution.vector[:system.space.pressure_offset]
    return float(np.max(np.abs(system.divergence_block @ w - system.mass_rhs)))
