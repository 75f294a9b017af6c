# Verification harness: finite-difference oracles, manufactured solutions, rate fitting
from app.verify.convergence import ConvergenceReport, fit_order, fit_order_with_residual
from app.verify.finite_differences import fd_divergence, fd_gradient, fd_jacobian, fd_time
from app.verify.mms import (
    MMSCase, load_mms_cases, mms_source, run_mms_studies, run_study, stokes_mms_source,
    transport_mms_source,
)
from app.verify.piola import PiolaReport, check_velocity_divergence, piola_sweep
from app.verify.suite import run_verification_suite

__all__ = [
    "ConvergenceReport", "MMSCase", "PiolaReport", "check_velocity_divergence", "fd_divergence",
    "fd_gradient", "fd_jacobian", "fd_time", "fit_order", "fit_order_with_residual",
    "load_mms_cases", "mms_source", "piola_sweep", "run_mms_studies", "run_study",
    "run_verification_suite", "stokes_mms_source", "transport_mms_source",
]
