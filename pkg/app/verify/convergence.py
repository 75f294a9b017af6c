"""
Convergence-rate fitting for refinement studies.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np
from scipy.stats import linregress

from app.errors import ParameterError
from app.io.reports import ConvergenceRecord

logger = logging.getLogger(__name__)

MIN_LEVELS = 3


def fit_order_with_residual(errors: Sequence[float], scales: Sequence[float]) -> Tuple[float, float]:
    """Least-squares slope of log(error) against log(scale) and its standard error."""
    errors = np.asarray(errors, dtype=float)
    scales = np.asarray(scales, dtype=float)
    if errors.shape != scales.shape:
        raise ParameterError("errors and scales differ in length",
                             details={"errors": len(errors), "scales": len(scales)})
    if len(errors) < MIN_LEVELS:
        raise ParameterError(f"An order fit needs at least {MIN_LEVELS} levels",
                             details={"levels": len(errors)})
    if np.any(~np.isfinite(errors)) or np.any(errors <= 0.0):
        raise ParameterError("Errors must be finite and positive for a log-log fit",
                             details={"errors": errors.tolist()})
    if np.any(scales <= 0.0):
        raise ParameterError("Scales must be positive", details={"scales": scales.tolist()})
    fit = linregress(np.log(scales), np.log(errors))
    return float(fit.slope), float(fit.stderr)


def fit_order(errors: Sequence[float], scales: Sequence[float]) -> float:
    return fit_order_with_residual(errors, scales)[0]


@dataclass
class ConvergenceReport:
    """Errors of one study over its refinement levels, with fitted orders."""
    study: str
    scales: List[float]
    errors: Dict[str, List[float]]
    expected: Dict[str, float]
    tolerance: float
    orders: Dict[str, float] = field(default_factory=dict)
    fit_residuals: Dict[str, float] = field(default_factory=dict)

    @classmethod
    def fit(cls, study: str, scales: Sequence[float], errors: Dict[str, Sequence[float]],
            expected: Dict[str, float], tolerance: float) -> "ConvergenceReport":
        report = cls(study=study, scales=[float(s) for s in scales],
                     errors={k: [float(e) for e in v] for k, v in errors.items()},
                     expected=dict(expected), tolerance=tolerance)
        for name, values in report.errors.items():
            report.orders[name], report.fit_residuals[name] = fit_order_with_residual(values, scales)
        logger.info(f"{study}: orders {report.orders} (expected {report.expected})")
        return report

    @property
    def passed(self) -> bool:
        return all(abs(self.orders[name] - target) <= self.tolerance
                   for name, target in self.expected.items())

    def record(self) -> ConvergenceRecord:
        return ConvergenceRecord(study=self.study, h=self.scales, errors=self.errors,
                                 orders=self.orders, expected=self.expected, passed=self.passed)
