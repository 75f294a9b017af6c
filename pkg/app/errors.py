"""
Error types shared by the simulator.

Every failure carries an error code, a message and a details dict, the same
triple the run report serializes; the exit code is what the CLI returns.
"""
from typing import Any, Dict, Optional


class SimulationError(Exception):
    """Base class for all simulator failures."""
    error_code = "SIMULATION_ERROR"
    exit_code = 1

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None,
                 error_code: Optional[str] = None):
        super().__init__(message)
        self.message = message
        self.details = details or {}
        if error_code:
            self.error_code = error_code

    def to_dict(self) -> Dict[str, Any]:
        return {
            "error_code": self.error_code,
            "message": self.message,
            "details": self.details,
        }


class ParameterError(SimulationError):
    """Model data violating the standing assumptions."""
    error_code = "INVALID_PARAMETERS"
    exit_code = 2


class ConfigError(ParameterError):
    """Malformed, incomplete or inconsistent configuration file."""
    error_code = "INVALID_CONFIG"


class MeshError(SimulationError):
    error_code = "MESH_ERROR"
    exit_code = 2


class InvariantViolation(SimulationError):
    """A runtime check of a proved bound or structural property failed."""
    error_code = "INVARIANT_VIOLATION"
    exit_code = 2


class DeformationError(InvariantViolation):
    error_code = "DEFORMATION_DEGENERATE"


class SolverError(InvariantViolation):
    error_code = "SOLVER_FAILURE"


class HistoryGapError(SimulationError):
    error_code = "HISTORY_GAP"
    exit_code = 2


class CheckpointError(SimulationError):
    error_code = "CHECKPOINT_ERROR"


class NonConvergenceError(SimulationError):
    error_code = "NOT_CONVERGED"
    exit_code = 3
