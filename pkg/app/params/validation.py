"""
Eager validation of the standing assumptions on the model data.

Each check names the assumption it guards and records the quantities it
measured, so a failing report can be shown to the user as-is.
"""
import logging
from typing import Any, Dict, List

import numpy as np
from pydantic import BaseModel, Field
from scipy.integrate import quad

from app.errors import ParameterError
from app.params.functions import eval_G, eval_H, production_bound, radius_bound
from app.params.models import ModelParams

logger = logging.getLogger(__name__)

_SAMPLES = 10_000
_KERNEL_MASS_TOL = 1e-10


class AssumptionCheck(BaseModel):
    assumption: str = Field(..., description="Assumption group, e.g. geometry")
    statement: str = Field(..., description="Human-readable condition")
    passed: bool
    measured: Dict[str, Any] = Field(default_factory=dict)

    @property
    def label(self) -> str:
        return f"{self.assumption}: {self.statement}"


class ValidationReport(BaseModel):
    checks: List[AssumptionCheck] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    @property
    def failures(self) -> List[AssumptionCheck]:
        return [check for check in self.checks if not check.passed]

    def violated(self) -> List[str]:
        return sorted({check.assumption for check in self.failures})

    def raise_for_failures(self) -> None:
        if self.passed:
            return
        labels = [check.label for check in self.failures]
        raise ParameterError(
            "Model data violate: " + "; ".join(labels),
            details={"violations": [check.model_dump() for check in self.failures]},
        )


def _check(assumption: str, statement: str, passed: bool, **measured) -> AssumptionCheck:
    return AssumptionCheck(assumption=assumption, statement=statement,
                           passed=bool(passed), measured=measured)


def _is_spd(matrix: np.ndarray):
    asym = float(np.max(np.abs(matrix - matrix.T)))
    eig_min = float(np.min(np.linalg.eigvalsh(0.5 * (matrix + matrix.T))))
    return asym <= 1e-12 and eig_min > 0.0, asym, eig_min


def validate(params: ModelParams, seed: int = 0) -> ValidationReport:
    """Check the model data. The radial profile properties are checked when its table is built."""
    rng = np.random.default_rng(seed)
    checks: List[AssumptionCheck] = []
    R1, R2, R0, delta = params.R1, params.R2, params.R0, params.delta

    # production bounded with bounded derivatives
    c_g = production_bound(params)
    if params.L > 0:
        x1 = rng.uniform(0.0, params.L, _SAMPLES)
        y = rng.normal(params.G.y_star, 10.0, _SAMPLES)
        g_max = float(np.max(np.abs(eval_G(params, x1, y))))
    else:
        g_max = float("nan")
    checks.append(_check("production", "|G| and its derivatives up to order 3 bounded by C_G",
                         np.isfinite(c_g) and g_max <= c_g, C_G=c_g, sampled_max=g_max))

    # radius map into [R1, R2]
    y = rng.normal(params.H.c_star, 50.0, _SAMPLES)
    h = eval_H(params, y)
    h_min, h_max = float(np.min(h)), float(np.max(h))
    checks.append(_check("radius_map", "R_1 <= H(y) <= R_2 with bounded derivatives",
                         R1 <= h_min and h_max <= R2 and np.isfinite(radius_bound(params)),
                         H_min=h_min, H_max=h_max, C_H=radius_bound(params)))

    # initial and boundary data
    init = params.initial
    finite = all(np.isfinite(v) for v in (init.c0, init.c0_amplitude, init.theta_f0, init.theta_s0))
    checks.append(_check("initial_data", "c^0 in C^2([0,L]), theta^0 square integrable", finite))
    boundary = all(np.isfinite(v) for v in (params.fb.p_in, params.fb.p_out, params.fin.value))
    checks.append(_check("boundary_data", "f_b in C([0,T],H^1), f_in in L^2(L^2)", boundary))

    # geometry
    checks.append(_check("geometry", "0 < R_1 < R_2 < 1/2", 0.0 < R1 < R2 < 0.5, R1=R1, R2=R2))
    checks.append(_check("geometry", "R_0 in [R_1, R_2]", R1 <= R0 <= R2, R0=R0))
    checks.append(_check("geometry", "delta > 0", delta > 0.0, delta=delta))
    checks.append(_check("geometry", "R_2 + 3 delta < 1/2", R2 + 3.0 * delta < 0.5,
                         value=R2 + 3.0 * delta))
    checks.append(_check("geometry", "R_1 - 3 delta > 0", R1 - 3.0 * delta > 0.0,
                         value=R1 - 3.0 * delta))
    checks.append(_check("geometry", "L > 0", params.L > 0.0, L=params.L))

    # kernel
    kernel = params.kernel
    mass, _ = quad(lambda s: float(kernel.evaluate(s)), 0.0, kernel.gamma,
                   epsabs=1e-14, epsrel=1e-14)
    probe = np.linspace(-kernel.gamma, 2.0 * kernel.gamma, 601)
    values = kernel.evaluate(probe)
    support_ok = bool(np.all(values[(probe < 0.0) | (probe >= kernel.gamma)] == 0.0))
    checks.append(_check("kernel", "K_gamma >= 0, supp in [0, gamma), unit mass",
                         np.all(values >= 0.0) and support_ok
                         and abs(mass - 1.0) <= _KERNEL_MASS_TOL,
                         integral=mass, gamma=kernel.gamma))

    # scalar coefficients and conductivities
    checks.append(_check("coefficients", "k > 0, mu > 0, alpha > 0, T > 0",
                         params.k_deg > 0 and params.mu > 0 and params.alpha > 0
                         and params.T_final > 0,
                         k=params.k_deg, mu=params.mu, alpha=params.alpha, T=params.T_final))
    for name, matrix in (("K_f", params.Kf_matrix), ("K_s", params.Ks_matrix)):
        ok, asym, eig_min = _is_spd(matrix)
        checks.append(_check("coefficients", f"{name} symmetric positive definite", ok,
                             asymmetry=asym, min_eigenvalue=eig_min))

    report = ValidationReport(checks=checks)
    if not report.passed:
        logger.warning(f"Parameter validation failed: {report.violated()}")
    return report
