"""
The `verify` command: invariant sweeps over the deformation, chemistry and
fitting machinery, reported as a pass/fail table of CheckRecord rows.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Optional, Tuple

import numpy as np

from app.chemistry.averaging import AveragedHistory, temporal_convolve
from app.chemistry.ode import integrate_ode
from app.deformation.coefficients import Deformation
from app.deformation.radius import TravelingWaveRadius
from app.deformation.rho import (
    TABLE_TOL, Breakpoints, QuadratureProfile, check_rho_table, table_error,
)
from app.deformation.table_cache import RhoTableCache
from app.errors import SimulationError
from app.io.reports import CheckRecord
from app.params.models import InitialData, ModelParams, ProductionSpec
from app.params.validation import validate
from app.verify.convergence import fit_order
from app.verify.piola import (
    check_deformation_gradient, check_identity_outside, check_interface_factor,
    check_jacobian_floor, check_velocity_divergence, piola_sweep,
)

logger = logging.getLogger(__name__)

ODE_TOL = 1e-12

Check = Tuple[str, Callable[[], CheckRecord]]


def wave_radius(params: ModelParams, frequency: float = 0.0) -> TravelingWaveRadius:
    """R = R0 (1 + 0.1 sin(2 pi x1 / L - frequency t))."""
    return TravelingWaveRadius(params.R0, 0.1, wavenumber=2.0 * np.pi / params.L,
                               frequency=frequency)


def check_assumptions(params: ModelParams, seed: int) -> CheckRecord:
    report = validate(params, seed=seed)
    return CheckRecord(name="assumptions", passed=report.passed,
                       measured={"violated": report.violated()},
                       message="; ".join(check.label for check in report.failures))


def check_table(params: ModelParams, table, seed: int) -> CheckRecord:
    properties = check_rho_table(table)
    error = table_error(table, params, seed=seed)
    passed = all(ok for _, ok in properties.values()) and error <= TABLE_TOL
    measured = {name: value for name, (value, _) in properties.items()}
    measured.update(table_error=error, c_rho=table.c_rho, eta=table.eta)
    return CheckRecord(name="rho_table", passed=passed, measured=measured)


def check_branch_slope(params: ModelParams, table, tol: float = 1e-10) -> CheckRecord:
    """d rho / dr on the rising branch, away from the kinks, is (R - R1 + delta)/(R0 - R1 + delta)."""
    breaks = Breakpoints.from_params(params)
    r = np.linspace(breaks.s1 + params.delta, breaks.s2 - params.delta, 7)[1:-1]
    R = np.linspace(params.R1, params.R2, 5)
    RR, rr = np.meshgrid(R, r, indexing="ij")
    expected = (RR - params.R1 + params.delta) / (params.R0 - params.R1 + params.delta)
    quadrature = QuadratureProfile(params).values(RR, rr).rho_r
    tabulated = table.values(RR, rr).rho_r
    quad_error = float(np.max(np.abs(quadrature - expected)))
    table_err = float(np.max(np.abs(tabulated - expected)))
    return CheckRecord(name="rho_branch_slope", passed=quad_error <= tol and table_err <= TABLE_TOL,
                       measured={"quadrature_error": quad_error, "table_error": table_err})


def check_ode_closed_form(params: ModelParams) -> CheckRecord:
    """G = 0 gives exp(-k t) c0; constant G = g with c0 = 0 gives (g/k)(1 - exp(-k t))."""
    x = np.linspace(0.0, params.L, 9)
    t = np.linspace(0.0, 2.0, 41)
    k = params.k_deg

    silent = params.with_updates(G=ProductionSpec(kind="constant", g0=0.0))
    field = integrate_ode(silent, x, t, np.ones_like(t))
    c0 = params.initial.concentration(x, params.L)
    decay_error = float(np.max(np.abs(field.c - np.exp(-k * t)[:, None] * c0[None, :])))

    g = 0.7
    steady = params.with_updates(G=ProductionSpec(kind="constant", g0=g),
                                 initial=InitialData(c0=0.0))
    field = integrate_ode(steady, x, t, np.ones_like(t))
    exact = (g / k) * -np.expm1(-k * t)
    constant_error = float(np.max(np.abs(field.c - exact[:, None])))
    passed = decay_error <= ODE_TOL and constant_error <= ODE_TOL
    return CheckRecord(name="ode_closed_form", passed=passed,
                       measured={"decay_error": decay_error, "constant_error": constant_error})


def check_causality(params: ModelParams, seed: int) -> CheckRecord:
    """Perturbing T1 after t* leaves T on [0, t*] unchanged."""
    rng = np.random.default_rng(seed)
    dt = 0.5 * params.gamma / 4.0
    times = dt * np.arange(1, 41)
    values = 1.0 + 0.1 * rng.standard_normal(len(times))
    t_star = times[len(times) // 2]
    perturbed = np.where(times > t_star, values + rng.uniform(1.0, 2.0, len(times)), values)

    def history(series):
        h = AveragedHistory.start(params.kernel, 1.0)
        for t, v in zip(times, series):
            h = h.extended(float(t), float(v))
        return h

    first, second = history(values), history(perturbed)
    probe = times[times <= t_star]
    change = max(abs(temporal_convolve(first, float(t)) - temporal_convolve(second, float(t)))
                 for t in probe)
    return CheckRecord(name="averaging_causality", passed=change == 0.0,
                       measured={"t_star": float(t_star), "max_change": float(change)})


def check_fit_order(seed: int) -> CheckRecord:
    rng = np.random.default_rng(seed)
    h = np.array([1.0, 0.5, 0.25, 0.125])
    exact = fit_order([1.0, 0.25, 0.0625], h[:3])
    noisy = fit_order(h ** 2 * np.exp(0.05 * rng.standard_normal(len(h))), h)
    passed = abs(exact - 2.0) <= 1e-12 and 1.7 <= noisy <= 2.3
    return CheckRecord(name="fit_order", passed=passed,
                       measured={"exact": exact, "noisy": noisy})


def _guarded(name: str, func: Callable[[], CheckRecord]) -> CheckRecord:
    try:
        return func()
    except SimulationError as exc:
        logger.error(f"Check {name} aborted: {exc.message}")
        return CheckRecord(name=name, passed=False, measured=exc.details, message=exc.message)


def suite_checks(params: ModelParams, seed: int = 0, samples: int = 100) -> List[Check]:
    table = RhoTableCache.get_table(params)
    tabulated = Deformation(params, table)
    smooth = Deformation(params, QuadratureProfile(params))
    static = wave_radius(params)
    moving = wave_radius(params, frequency=2.0 * np.pi)
    return [
        ("assumptions", lambda: check_assumptions(params, seed)),
        ("rho_table", lambda: check_table(params, table, seed)),
        ("rho_branch_slope", lambda: check_branch_slope(params, table)),
        ("deformation_gradient",
         lambda: check_deformation_gradient(smooth, moving, samples=samples, seed=seed)),
        ("piola_identity",
         lambda: piola_sweep(smooth, static, samples=samples, seed=seed).record()),
        ("velocity_divergence",
         lambda: check_velocity_divergence(smooth, moving, samples=samples, seed=seed)),
        ("interface_factor",
         lambda: check_interface_factor(tabulated, moving, samples=samples, seed=seed)),
        ("jacobian_floor", lambda: check_jacobian_floor(tabulated, moving, seed=seed)),
        ("identity_outside_band", lambda: check_identity_outside(tabulated, moving, seed=seed)),
        ("ode_closed_form", lambda: check_ode_closed_form(params)),
        ("averaging_causality", lambda: check_causality(params, seed)),
        ("fit_order", lambda: check_fit_order(seed)),
    ]


def run_verification_suite(params: Optional[ModelParams] = None, seed: int = 0, workers: int = 1,
                           samples: int = 100) -> List[CheckRecord]:
    """Run every check; results keep the check order whatever the worker count."""
    params = params or ModelParams()
    checks = suite_checks(params, seed=seed, samples=samples)
    if workers <= 1:
        records = [_guarded(name, func) for name, func in checks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(lambda check: _guarded(*check), checks))
    failed = [record.name for record in records if not record.passed]
    logger.info(f"Verification suite: {len(records) - len(failed)}/{len(records)} passed"
                + (f", failed: {failed}" if failed else ""))
    return records
