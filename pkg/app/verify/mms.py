"""
Manufactured solutions for the transformed Stokes and transport problems.

Sources come from applying the strong reference-domain operators to the
target fields with fourth-order finite differences, so no operator is ever
differentiated by hand. The canned cases live in app/data/mms_cases.json.
"""
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from app.deformation.coefficients import Deformation
from app.deformation.radius import ConstantRadius, TravelingWaveRadius
from app.deformation.table_cache import RhoTableCache
from app.errors import ParameterError
from app.fem.assembly import cell_quadrature
from app.fem.elements import p2_gradients
from app.fem.quadrature import tet_rule
from app.geometry.mesh import ReferenceMesh, Resolution, build_reference_mesh
from app.params.models import ModelParams
from app.stokes.solver import StokesSolution, solve_stokes
from app.stokes.system import StokesSource, StokesSystem, assemble_stokes, build_stokes_space
from app.transport.diagnostics import l2_error
from app.transport.solver import advance
from app.transport.system import (
    TransportSource, TransportState, assemble_step, build_transport_space,
)
from app.verify.convergence import ConvergenceReport
from app.verify.finite_differences import fd_divergence, fd_gradient, fd_jacobian, fd_time

logger = logging.getLogger(__name__)

CASES_FILE = Path(__file__).resolve().parent.parent / "data" / "mms_cases.json"

# inner step differentiates the analytic target, outer step the assembled flux
INNER_STEP = 1e-3
OUTER_STEP = 5e-4


class VectorTarget(BaseModel):
    """w_i(x) = a_i sin(k_i . x + phase_i)."""
    model_config = ConfigDict(frozen=True)

    amplitudes: Tuple[float, float, float]
    wavenumbers: Tuple[Tuple[float, float, float], Tuple[float, float, float],
                       Tuple[float, float, float]]
    phases: Tuple[float, float, float] = (0.0, 0.0, 0.0)

    def _arguments(self, points):
        points = np.asarray(points, dtype=float).reshape(-1, 3)
        return points @ np.array(self.wavenumbers).T + np.array(self.phases)

    def value(self, points) -> np.ndarray:
        return np.array(self.amplitudes) * np.sin(self._arguments(points))

    def gradient(self, points) -> np.ndarray:
        """(N, 3, 3), rows are components."""
        scale = np.array(self.amplitudes) * np.cos(self._arguments(points))
        return scale[:, :, None] * np.array(self.wavenumbers)[None, :, :]


class ScalarTarget(BaseModel):
    """u(t, x) = (1 + tau t + s sin(omega t)) (c0 + g . x + a sin(k . x + phase))."""
    model_config = ConfigDict(frozen=True)

    c0: float = 0.0
    gradient: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    amplitude: float = 0.0
    wavenumber: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    phase: float = 0.0
    tau: float = 0.0
    sine: float = 0.0
    omega: float = 0.0

    def time_factor(self, t: float) -> float:
        return 1.0 + self.tau * t + self.sine * np.sin(self.omega * t)

    def spatial(self, points) -> np.ndarray:
        points = np.asarray(points, dtype=float).reshape(-1, 3)
        return (self.c0 + points @ np.array(self.gradient)
                + self.amplitude * np.sin(points @ np.array(self.wavenumber) + self.phase))

    def value(self, t: float, points) -> np.ndarray:
        return self.time_factor(t) * self.spatial(points)

    def spatial_gradient(self, t: float, points) -> np.ndarray:
        points = np.asarray(points, dtype=float).reshape(-1, 3)
        k = np.array(self.wavenumber)
        wave = self.amplitude * np.cos(points @ k + self.phase)
        return self.time_factor(t) * (np.array(self.gradient)[None, :] + wave[:, None] * k[None, :])


class RadiusChoice(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Literal["constant", "traveling_wave"] = "constant"
    amplitude: float = 0.0
    waves: float = 1.0
    frequency: float = 0.0

    def build(self, params: ModelParams):
        if self.kind == "constant":
            return ConstantRadius(params.R0)
        return TravelingWaveRadius(params.R0, self.amplitude,
                                   wavenumber=2.0 * np.pi * self.waves / params.L,
                                   frequency=self.frequency)


class StudySpec(BaseModel):
    """Refinement in h (mesh levels at a fixed step) or in dt (steps on a fixed level)."""
    model_config = ConfigDict(frozen=True)

    variable: Literal["h", "dt"]
    levels: List[int] = Field(default_factory=lambda: [2, 3, 4])
    level: int = 2
    steps: List[float] = Field(default_factory=lambda: [0.1])
    T_final: float = 0.2
    expected: Dict[str, float]
    tolerance: float = 0.3


class MMSCase(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str
    kind: Literal["stokes", "transport"]
    description: str = ""
    params: Dict[str, Any] = Field(default_factory=dict)
    radius: RadiusChoice = RadiusChoice()
    time: float = Field(0.0, description="Evaluation time of a Stokes case")
    velocity: Optional[VectorTarget] = None
    pressure: Optional[ScalarTarget] = None
    fluid: Optional[ScalarTarget] = None
    solid: Optional[ScalarTarget] = None
    study: StudySpec

    def model_params(self) -> ModelParams:
        return ModelParams(**self.params)

    def check_targets(self) -> None:
        missing = ([name for name in ("velocity", "pressure") if getattr(self, name) is None]
                   if self.kind == "stokes"
                   else [name for name in ("fluid", "solid") if getattr(self, name) is None])
        if missing:
            raise ParameterError(f"MMS case {self.name} lacks target fields",
                                 details={"missing": missing})


def load_mms_cases(path=None) -> Dict[str, MMSCase]:
    with open(path or CASES_FILE, "r", encoding="utf-8") as f:
        raw = json.load(f)
    cases = {}
    for entry in raw["cases"]:
        case = MMSCase.model_validate(entry)
        case.check_targets()
        cases[case.name] = case
    return cases


def resolution_for_level(level: int) -> Resolution:
    return Resolution(n_axial=level, n_angular=8 * level, n_radial=level, n_outer=level)


def stokes_mms_source(velocity: VectorTarget, pressure: ScalarTarget, deformation, radius_field,
                      t: float, mu: float) -> StokesSource:
    """Volume force -div P, traction P n and mass data -tr(A Dw) for the target (w, q).

    P = 2 mu e_F(w) A^T - q A^T is the reference-domain stress whose weak form
    the assembled velocity and pressure blocks represent.
    """
    def stress(points):
        coeffs = deformation.eval_coeffs(t, points, radius_field)
        Dw = fd_jacobian(velocity.value, points, INNER_STEP)
        E = np.einsum("nik,nkj->nij", Dw, coeffs.Finv)
        E = 0.5 * (E + np.swapaxes(E, -1, -2))
        AT = np.swapaxes(coeffs.A, -1, -2)
        q = pressure.value(t, points)
        return 2.0 * mu * np.einsum("nik,nkj->nij", E, AT) - q[:, None, None] * AT

    def volume(points):
        return -fd_divergence(stress, points, OUTER_STEP, contract=-1)

    def traction(points, normals):
        return np.einsum("nij,nj->ni", stress(points), normals)

    def mass(points):
        A = deformation.eval_coeffs(t, points, radius_field).A
        return -np.einsum("nki,nik->n", A, fd_jacobian(velocity.value, points, INNER_STEP))

    return StokesSource(volume=volume, traction=traction, mass=mass, dirichlet=velocity.value)


def transport_mms_source(fluid: ScalarTarget, solid: ScalarTarget, deformation, radius_field,
                         t: float, alpha: float) -> TransportSource:
    """Sources at time t for targets with w = 0.

    Volume: d/dt(J theta) - div(K^F grad theta). Boundary fluxes carry
    K^F grad theta . n, and the interface fluxes add the jump term
    alpha * factor * (own - other).
    """
    targets = {"fluid": fluid, "solid": solid}

    def conductive_flux(side, points):
        coeffs = deformation.eval_coeffs(t, points, radius_field, side=side)
        grad = fd_gradient(lambda p: targets[side].value(t, p), points, INNER_STEP)
        return np.einsum("nij,nj->ni", coeffs.K, grad)

    def volume(side, points):
        target = targets[side]
        coeffs = deformation.eval_coeffs(t, points, radius_field)
        theta_t = fd_time(lambda s: target.value(s, points), t, OUTER_STEP)
        div = fd_divergence(lambda p: conductive_flux(side, p), points, OUTER_STEP)
        return coeffs.dJdt * target.value(t, points) + coeffs.J * theta_t - div

    def flux(tag, points, normals):
        side = "fluid" if tag in ("gamma_f", "sigma_fluid") else "solid"
        normal_flux = np.einsum("ni,ni->n", conductive_flux(side, points), normals)
        if tag.startswith("sigma"):
            other = "solid" if side == "fluid" else "fluid"
            factor = deformation.interface_factor(t, points[:, 0], radius_field)
            jump = targets[side].value(t, points) - targets[other].value(t, points)
            normal_flux = normal_flux + alpha * factor * jump
        return normal_flux

    return TransportSource(volume=volume, flux=flux, dirichlet=lambda p: solid.value(t, p))


def mms_source(case: MMSCase, deformation, radius_field, t: Optional[float] = None):
    """Source functions for a canned case, dispatched on its kind."""
    params = deformation.params
    if case.kind == "stokes":
        return stokes_mms_source(case.velocity, case.pressure, deformation, radius_field,
                                 case.time if t is None else t, params.mu)
    return transport_mms_source(case.fluid, case.solid, deformation, radius_field,
                                0.0 if t is None else t, params.alpha)


@dataclass
class MMSSetup:
    params: ModelParams
    mesh: ReferenceMesh
    deformation: Deformation
    radius_field: object

    @property
    def h(self) -> float:
        """Cube root of the mean fluid cell volume."""
        return float((self.mesh.fluid.volume() / self.mesh.fluid.n_cells) ** (1.0 / 3.0))


def setup_case(case: MMSCase, level: int) -> MMSSetup:
    params = case.model_params()
    mesh = build_reference_mesh(params, resolution_for_level(level))
    deformation = Deformation(params, RhoTableCache.get_table(params))
    return MMSSetup(params=params, mesh=mesh, deformation=deformation,
                    radius_field=case.radius.build(params))


def stokes_errors(solution: StokesSolution, velocity: VectorTarget, pressure: ScalarTarget,
                  degree: int = 6) -> Dict[str, float]:
    """Reference H1 seminorm of the velocity error and L2 norm of the pressure error."""
    space = solution.space
    fluid = space.mesh.fluid
    cq = cell_quadrature(fluid.vertices, fluid.cells, tet_rule(degree))
    points = cq.points.reshape(-1, 3)
    dN = p2_gradients(cq.bary, cq.grads)
    Dw_h = np.einsum("cqad,cai->cqid", dN, solution.w[space.p2.cell_dofs])
    Dw = velocity.gradient(points).reshape(Dw_h.shape)
    q_h = np.einsum("qa,ca->cq", cq.bary, solution.q[fluid.cells])
    q = pressure.value(solution.t, points).reshape(q_h.shape)
    return {"velocity_h1": float(np.sqrt(np.sum(cq.jxw[:, :, None, None] * (Dw_h - Dw) ** 2))),
            "pressure_l2": float(np.sqrt(np.sum(cq.jxw * (q_h - q) ** 2)))}


def interpolant_residual(system: StokesSystem, velocity: VectorTarget,
                         pressure: ScalarTarget) -> float:
    """Relative residual of the nodal interpolant of (w, q) on the free rows."""
    space = system.space
    w = velocity.value(space.p2.coordinates)
    q = pressure.value(system.t, space.mesh.fluid.vertices)
    residual = system.matrix @ np.concatenate([w.T.ravel(), q]) - system.rhs
    free = np.ones(space.n_dofs, dtype=bool)
    free[system.constrained] = False
    return float(np.linalg.norm(residual[free]) / max(np.linalg.norm(system.rhs[free]), 1e-300))


def run_stokes_level(case: MMSCase, level: int, quadrature_degree: int = 4) -> Tuple[float, Dict[str, float]]:
    setup = setup_case(case, level)
    space = build_stokes_space(setup.mesh)
    source = mms_source(case, setup.deformation, setup.radius_field)
    system = assemble_stokes(case.time, space, setup.deformation, setup.radius_field, setup.params,
                             quadrature_degree=quadrature_degree, source=source)
    solution = solve_stokes(system)
    errors = stokes_errors(solution, case.velocity, case.pressure)
    errors["interpolant_residual"] = interpolant_residual(system, case.velocity, case.pressure)
    logger.info(f"{case.name} level {level}: h={setup.h:.4f}, {errors}, "
                f"residual {solution.residual:.2e}")
    return setup.h, errors


def run_transport_level(case: MMSCase, level: int, dt: float, T_final: float,
                        quadrature_degree: int = 4) -> Tuple[float, Dict[str, float]]:
    """Implicit Euler from the interpolated target at t = 0 to T_final with w = 0."""
    setup = setup_case(case, level)
    space = build_transport_space(setup.mesh)
    mesh = setup.mesh
    state = TransportState(t=0.0, theta_f=case.fluid.value(0.0, mesh.fluid.vertices),
                           theta_s=case.solid.value(0.0, mesh.solid.vertices))
    n_steps = int(round(T_final / dt))
    for n in range(n_steps):
        t_old, t_new = n * dt, (n + 1) * dt
        source = mms_source(case, setup.deformation, setup.radius_field, t=t_new)
        system = assemble_step(t_old, t_new, state, space, setup.deformation, setup.radius_field,
                               setup.params, velocity=None, quadrature_degree=quadrature_degree,
                               source=source)
        state = advance(system)
    T = n_steps * dt
    fluid_error = l2_error(state.theta_f, lambda p: case.fluid.value(T, p), mesh.fluid)
    solid_error = l2_error(state.theta_s, lambda p: case.solid.value(T, p), mesh.solid)
    errors = {"theta_l2": float(np.hypot(fluid_error, solid_error))}
    logger.info(f"{case.name} level {level}, dt={dt}: h={setup.h:.4f}, {errors}")
    return setup.h, errors


def run_study(case: MMSCase, quadrature_degree: int = 4) -> ConvergenceReport:
    study = case.study
    scales: List[float] = []
    errors: Dict[str, List[float]] = {name: [] for name in study.expected}
    if study.variable == "h":
        runs = [(level, study.steps[0]) for level in study.levels]
    else:
        runs = [(study.level, dt) for dt in study.steps]
    for level, dt in runs:
        if case.kind == "stokes":
            h, measured = run_stokes_level(case, level, quadrature_degree)
        else:
            h, measured = run_transport_level(case, level, dt, study.T_final, quadrature_degree)
        scales.append(h if study.variable == "h" else dt)
        for name in errors:
            errors[name].append(measured[name])
    return ConvergenceReport.fit(case.name, scales, errors, study.expected, study.tolerance)


def run_mms_studies(names: Optional[Sequence[str]] = None, workers: int = 1,
                    quadrature_degree: int = 4) -> List[ConvergenceReport]:
    """Run the canned studies; independent studies may run on a thread pool."""
    cases = load_mms_cases()
    selected = [cases[name] for name in (names or list(cases))]
    if workers <= 1:
        return [run_study(case, quadrature_degree) for case in selected]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda case: run_study(case, quadrature_degree), selected))
