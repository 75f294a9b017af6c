# Model parameters, function families and assumption checks
from app.params.functions import (
    eval_G, eval_G_dx1, eval_G_dy, eval_H, eval_H_deriv, eval_H_second,
)
from app.params.models import (
    BoundaryStressSpec, InflowSpec, InitialData, KernelSpec, ModelParams,
    ProductionSpec, RadiusMapSpec,
)
from app.params.validation import AssumptionCheck, ValidationReport, validate

__all__ = [
    "AssumptionCheck", "BoundaryStressSpec", "InflowSpec", "InitialData", "KernelSpec",
    "ModelParams", "ProductionSpec", "RadiusMapSpec", "ValidationReport",
    "eval_G", "eval_G_dx1", "eval_G_dy", "eval_H", "eval_H_deriv", "eval_H_second",
    "validate",
]
