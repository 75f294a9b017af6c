"""
Machine-readable run reports.
"""
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field

from app.io.atomic import PathLike, write_text


class StepRecord(BaseModel):
    """One committed time step of the staggered scheme."""
    step: int = Field(..., ge=1)
    t: float
    T1: float = Field(..., description="Spatial mean of theta_s over the reference solid")
    T: float = Field(..., description="Kernel-averaged temperature driving the chemistry")
    R_min: float
    R_mean: float
    R_max: float
    J_min: float = Field(..., description="Smallest Jacobian at the quadrature points")
    eta: float
    Q_in: float = Field(..., description="Flow rate through x1 = 0, negative for inflow")
    Q_out: float
    interface_flux: float
    outlet_flux: float
    energy: float
    stokes_residual: float
    subiteration_residuals: List[float] = Field(default_factory=list)
    volume_error: float = 0.0
    peclet: float = 0.0

    model_config = ConfigDict(json_schema_extra={
        "example": {
            "step": 1, "t": 0.05, "T1": 0.99, "T": 1.0, "R_min": 0.26, "R_mean": 0.26,
            "R_max": 0.26, "J_min": 0.98, "eta": 0.02, "Q_in": -0.01, "Q_out": 0.01,
            "interface_flux": 0.1, "outlet_flux": 0.01, "energy": 0.98,
            "stokes_residual": 1e-14, "subiteration_residuals": [1e-3, 1e-6],
            "volume_error": 1e-4, "peclet": 0.01,
        }
    })


class PicardRecord(BaseModel):
    iteration: int = Field(..., ge=1)
    residual: float = Field(..., description="L2(0,T;L2(Omega_s)) change of theta_s")


class CheckRecord(BaseModel):
    """Outcome of one verification check."""
    name: str
    passed: bool
    measured: Dict[str, Any] = Field(default_factory=dict)
    message: str = ""

    model_config = ConfigDict(json_schema_extra={
        "example": {"name": "piola_identity", "passed": True,
                    "measured": {"order": 4.02, "max_div": 3.1e-9}, "message": ""}
    })


class ConvergenceRecord(BaseModel):
    study: str
    h: List[float]
    errors: Dict[str, List[float]]
    orders: Dict[str, float]
    expected: Dict[str, float]
    passed: bool


class ErrorReport(BaseModel):
    """Same triple as SimulationError.to_dict()."""
    error_code: str = Field(..., description="Error code")
    message: str = Field(..., description="Human-readable error message")
    details: Optional[Dict[str, Any]] = Field(None, description="Additional error details")

    model_config = ConfigDict(json_schema_extra={
        "example": {
            "error_code": "DEFORMATION_DEGENERATE",
            "message": "Jacobian dropped below eta/2",
            "details": {"J_min": 0.004, "eta": 0.012},
        }
    })


class RunReport(BaseModel):
    command: str
    mode: str = "staggered"
    config: Dict[str, Any] = Field(default_factory=dict)
    steps: List[StepRecord] = Field(default_factory=list)
    picard: List[PicardRecord] = Field(default_factory=list)
    converged: Optional[bool] = None
    checks: List[CheckRecord] = Field(default_factory=list)
    convergence: List[ConvergenceRecord] = Field(default_factory=list)
    timings: Dict[str, float] = Field(default_factory=dict)
    error: Optional[ErrorReport] = None

    @property
    def passed(self) -> bool:
        return self.error is None and all(check.passed for check in self.checks) \
            and all(study.passed for study in self.convergence)


def write_report(report: RunReport, path: PathLike) -> None:
    write_text(path, report.model_dump_json(indent=2))
