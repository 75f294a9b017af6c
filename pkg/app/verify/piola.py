"""
Finite-difference sweeps of the deformation coefficients: the Piola identity
div A = 0, div(A v_b) = dJ/dt, F against differences of S, the closed-form
interface factor and the Jacobian floor.

Every sweep draws its sample points from numpy.random.default_rng(seed), so
a fixed seed gives a fixed report.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Sequence

import numpy as np

from app.io.reports import CheckRecord
from app.verify.convergence import fit_order
from app.verify.finite_differences import fd_divergence, fd_jacobian, fd_time

logger = logging.getLogger(__name__)

PIOLA_STEPS = (1e-3, 5e-4, 2.5e-4)
PIOLA_ORDER_BAND = (3.5, 4.5)
GRADIENT_TOL = 1e-6
INTERFACE_TOL = 1e-8
# clearance between sampled points and the band edges, larger than any FD stencil
_MARGIN = 0.01


def sample_band_points(params, n: int, rng: np.random.Generator, inside: bool = True) -> np.ndarray:
    """Random points with x1 away from the end faces and |xbar| inside or outside Z."""
    lo, hi = params.z_band
    x1 = rng.uniform(0.1 * params.L, 0.9 * params.L, n)
    if inside:
        r = rng.uniform(lo + _MARGIN, hi - _MARGIN, n)
    else:
        outer = rng.uniform(hi + _MARGIN, 0.5, n)
        inner = rng.uniform(0.5 * _MARGIN, max(lo - _MARGIN, _MARGIN), n)
        r = np.where(rng.random(n) < 0.5, inner, outer)
    angle = rng.uniform(0.0, 2.0 * np.pi, n)
    return np.column_stack([x1, r * np.cos(angle), r * np.sin(angle)])


def sample_interface_points(params, n: int, rng: np.random.Generator) -> np.ndarray:
    x1 = rng.uniform(0.0, params.L, n)
    angle = rng.uniform(0.0, 2.0 * np.pi, n)
    return np.column_stack([x1, params.R0 * np.cos(angle), params.R0 * np.sin(angle)])


@dataclass
class PiolaReport:
    """Max |div A| at each finite-difference step and the fitted decay order."""
    steps: List[float]
    max_divergence: List[float]
    outside_max: float
    order: float
    samples: int
    band: tuple = PIOLA_ORDER_BAND
    notes: Dict[str, float] = field(default_factory=dict)

    @property
    def exact(self) -> bool:
        return max(self.max_divergence) == 0.0

    @property
    def passed(self) -> bool:
        if self.outside_max != 0.0:
            return False
        if self.exact:
            return True
        return self.band[0] <= self.order <= self.band[1]

    def record(self) -> CheckRecord:
        return CheckRecord(
            name="piola_identity", passed=self.passed,
            measured={"steps": self.steps, "max_div": self.max_divergence,
                      "order": self.order, "outside_max": self.outside_max},
            message="" if self.passed else "div A does not decay at fourth order",
        )


def piola_sweep(deformation, radius_field, t: float = 0.0, samples: int = 100, seed: int = 0,
                steps: Sequence[float] = PIOLA_STEPS) -> PiolaReport:
    """Divergence of A (sum over the first index) by fourth-order differences.

    Needs a smooth radial profile; the tabulated profile is only C2 in r and
    spoils the decay order, so pass a QuadratureProfile-backed deformation.
    """
    rng = np.random.default_rng(seed)
    params = deformation.params
    inside = sample_band_points(params, samples, rng, inside=True)
    outside = sample_band_points(params, samples, rng, inside=False)

    def A(points):
        return deformation.eval_coeffs(t, points, radius_field).A

    max_div = []
    for h in steps:
        div = fd_divergence(A, inside, h=h, contract=0)
        max_div.append(float(np.max(np.abs(div))))
    outside_max = float(np.max(np.abs(fd_divergence(A, outside, h=steps[0], contract=0))))

    order = float("inf") if max(max_div) == 0.0 else fit_order(max_div, steps)
    logger.info(f"Piola sweep: max|div A| {['%.2e' % v for v in max_div]}, order {order:.2f}")
    return PiolaReport(steps=list(steps), max_divergence=max_div, outside_max=outside_max,
                       order=order, samples=samples)


def check_velocity_divergence(deformation, radius_field, t: float = 0.3, samples: int = 100,
                              seed: int = 0, h: float = 5e-4, tol: float = 1e-6) -> CheckRecord:
    """div(A v_b) against the closed-form dJ/dt, and dJ/dt against differences of J in t."""
    rng = np.random.default_rng(seed)
    points = sample_band_points(deformation.params, samples, rng)

    def flux(pts):
        coeffs = deformation.eval_coeffs(t, pts, radius_field)
        return np.einsum("nij,nj->ni", coeffs.A, coeffs.v_b)

    coeffs = deformation.eval_coeffs(t, points, radius_field)
    div = fd_divergence(flux, points, h=h)
    dJdt_fd = fd_time(lambda s: deformation.eval_coeffs(s, points, radius_field).J, t, h=h)
    scale = max(float(np.max(np.abs(coeffs.dJdt))), 1.0)
    space_error = float(np.max(np.abs(div - coeffs.dJdt))) / scale
    time_error = float(np.max(np.abs(dJdt_fd - coeffs.dJdt))) / scale
    passed = space_error <= tol and time_error <= tol
    return CheckRecord(name="velocity_divergence", passed=passed,
                       measured={"div_error": space_error, "dJdt_error": time_error, "tol": tol})


def check_deformation_gradient(deformation, radius_field, t: float = 0.3, samples: int = 100,
                               seed: int = 0, h: float = 1e-4,
                               tol: float = GRADIENT_TOL) -> CheckRecord:
    """All nine entries of F against differences of S, plus A F = J I."""
    rng = np.random.default_rng(seed)
    points = sample_band_points(deformation.params, samples, rng)
    coeffs = deformation.eval_coeffs(t, points, radius_field)
    F_fd = fd_jacobian(lambda pts: deformation.eval_S(t, pts, radius_field), points, h=h)
    norm = np.linalg.norm(coeffs.F, axis=(1, 2))
    relative = float(np.max(np.linalg.norm(coeffs.F - F_fd, axis=(1, 2)) / norm))
    cofactor = np.einsum("nij,njk->nik", coeffs.A, coeffs.F) - coeffs.J[:, None, None] * np.eye(3)
    cofactor_error = float(np.max(np.abs(cofactor)))
    det_error = float(np.max(np.abs(np.linalg.det(coeffs.F) - coeffs.J)))
    passed = relative <= tol and cofactor_error <= 1e-12 and det_error <= 1e-12
    return CheckRecord(name="deformation_gradient", passed=passed,
                       measured={"relative_error": relative, "cofactor_error": cofactor_error,
                                 "det_error": det_error, "tol": tol})


def check_interface_factor(deformation, radius_field, t: float = 0.3, samples: int = 100,
                           seed: int = 0, tol: float = INTERFACE_TOL) -> CheckRecord:
    rng = np.random.default_rng(seed)
    params = deformation.params
    points = sample_interface_points(params, samples, rng)
    closed = deformation.interface_factor(t, points[:, 0], radius_field)
    generic = deformation.generic_interface_factor(t, points, radius_field)
    error = float(np.max(np.abs(closed - generic)))
    R1_bound = params.R1 / params.R0
    passed = error <= tol and float(np.min(closed)) >= R1_bound - tol
    return CheckRecord(name="interface_factor", passed=passed,
                       measured={"max_error": error, "min_factor": float(np.min(closed)),
                                 "lower_bound": R1_bound, "tol": tol})


def check_jacobian_floor(deformation, radius_field, t: float = 0.3, samples: int = 2000,
                         seed: int = 0) -> CheckRecord:
    """J >= eta and K^F positive definite at random points of the whole box."""
    rng = np.random.default_rng(seed)
    params = deformation.params
    points = np.column_stack([rng.uniform(0.0, params.L, samples),
                              rng.uniform(-0.5, 0.5, (samples, 2))])
    coeffs = deformation.eval_coeffs(t, points, radius_field, side="solid")
    J_min = float(np.min(coeffs.J))
    c_K = coeffs.min_eigenvalue_K()
    passed = J_min >= deformation.eta and c_K > 0.0
    return CheckRecord(name="jacobian_floor", passed=passed,
                       measured={"J_min": J_min, "eta": deformation.eta, "c_K": c_K})


def check_identity_outside(deformation, radius_field, t: float = 0.3, samples: int = 200,
                           seed: int = 0) -> CheckRecord:
    rng = np.random.default_rng(seed)
    points = sample_band_points(deformation.params, samples, rng, inside=False)
    coeffs = deformation.eval_coeffs(t, points, radius_field)
    shift = float(np.max(np.abs(coeffs.S - points)))
    velocity = float(np.max(np.abs(coeffs.v_b)))
    jacobian = float(np.max(np.abs(coeffs.J - 1.0)))
    passed = max(shift, velocity, jacobian) <= 1e-12
    return CheckRecord(name="identity_outside_band", passed=passed,
                       measured={"max_shift": shift, "max_v_b": velocity, "max_J_minus_1": jacobian})
