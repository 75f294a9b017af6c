"""
Sparse direct solves with eliminated (prescribed) unknowns.
"""
import logging
from dataclasses import dataclass

import numpy as np
from scipy import sparse as sp
from scipy.sparse.linalg import splu

from app.errors import SolverError

logger = logging.getLogger(__name__)

RESIDUAL_TOL = 1e-10


@dataclass(frozen=True)
class LinearSolve:
    solution: np.ndarray
    residual: float


def solve_constrained(matrix: sp.spmatrix, rhs: np.ndarray, constrained: np.ndarray,
                      values: np.ndarray, label: str = "system",
                      tol: float = RESIDUAL_TOL) -> LinearSolve:
    """Solve matrix x = rhs with x[constrained] = values, dropping the constrained rows."""
    n = matrix.shape[0]
    x = np.zeros(n)
    x[constrained] = values
    free = np.ones(n, dtype=bool)
    free[constrained] = False
    free_ids = np.flatnonzero(free)

    matrix = sp.csr_matrix(matrix)
    A_ff = matrix[free_ids][:, free_ids].tocsc()
    b_f = rhs[free_ids] - matrix[free_ids] @ x
    norm_b = float(np.linalg.norm(b_f))
    if norm_b == 0.0:
        return LinearSolve(solution=x, residual=0.0)

    try:
        lu = splu(A_ff)
    except RuntimeError as exc:
        raise SolverError(f"Factorization of the {label} failed",
                          details={"reason": str(exc), "n_free": len(free_ids)}) from exc
    x_f = lu.solve(b_f)
    residual = float(np.linalg.norm(A_ff @ x_f - b_f)) / norm_b
    if not np.all(np.isfinite(x_f)) or residual > tol:
        raise SolverError(f"{label} residual above tolerance",
                          details={"residual": residual, "tolerance": tol})
    x[free_ids] = x_f
    logger.debug(f"{label}: {len(free_ids)} free unknowns, relative residual {residual:.2e}")
    return LinearSolve(solution=x, residual=residual)
