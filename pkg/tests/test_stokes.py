"""
Tests for the transformed Stokes problem on the reference fluid domain.
"""
import numpy as np
import pytest
from scipy.integrate import quad

from app.deformation.coefficients import deformed_volume
from app.deformation.radius import TravelingWaveRadius
from app.stokes.postprocess import (
    flow_rates, infsup_estimate, momentum_boundary_residual, poiseuille_flow_rate,
    reconstruct_physical,
)
from app.stokes.solver import mass_balance_residual, solve_stokes
from app.stokes.system import assemble_stokes, build_stokes_space
from app.verify.finite_differences import fd_time


@pytest.fixture(scope="module")
def coarse_space(coarse_mesh):
    return build_stokes_space(coarse_mesh)


@pytest.fixture(scope="module")
def identity_flow(coarse_space, deformation, identity_radius, params):
    system = assemble_stokes(0.0, coarse_space, deformation, identity_radius, params)
    return system, solve_stokes(system)


class TestStokesSpace:
    """Taylor-Hood numbering and the interface constraint."""

    def test_counts(self, coarse_space, coarse_mesh):
        assert coarse_space.n_pressure == coarse_mesh.fluid.n_vertices
        assert coarse_space.n_dofs == 3 * coarse_space.n_velocity_nodes + coarse_space.n_pressure
        assert len(coarse_space.constrained_dofs) == 3 * len(coarse_space.sigma_nodes)

    def test_sigma_nodes_on_circle(self, coarse_space, params):
        points = coarse_space.p2.coordinates[coarse_space.sigma_nodes]
        radii = np.linalg.norm(points[:, 1:], axis=1)
        # edge midpoints sit on the chord, vertices on the circle
        assert np.all(radii <= params.R0 + 1e-14)
        assert np.all(radii >= params.R0 * np.cos(np.pi / 8) - 1e-14)

    def test_end_faces_split(self, coarse_space):
        assert len(coarse_space.inlet_facets) == len(coarse_space.outlet_facets) > 0


class TestIdentityFlow:
    """Pressure-driven flow in the undeformed channel."""

    def test_solved(self, identity_flow):
        system, solution = identity_flow
        assert solution.residual < 1e-10
        assert np.all(solution.w[system.space.sigma_nodes] == 0.0)

    def test_mass_balance(self, identity_flow):
        system, solution = identity_flow
        assert mass_balance_residual(system, solution) < 1e-10

    def test_no_source_in_mass_equation(self, identity_flow):
        system, _ = identity_flow
        assert np.allclose(system.mass_rhs, 0.0)

    def test_natural_condition(self, identity_flow):
        system, solution = identity_flow
        assert momentum_boundary_residual(system, solution) < 1e-8

    def test_flow_goes_downstream(self, identity_flow, deformation, identity_radius):
        _, solution = identity_flow
        rates = flow_rates(solution, deformation, identity_radius)
        assert rates["inlet"] < 0.0 < rates["outlet"]
        assert rates["inlet"] + rates["outlet"] == pytest.approx(0.0, abs=1e-10)

    def test_physical_fields(self, identity_flow, deformation, identity_radius, params):
        _, solution = identity_flow
        flow = reconstruct_physical(solution, deformation, identity_radius, params)
        vertices = solution.space.mesh.fluid.vertices
        assert np.allclose(flow.node_points, solution.space.p2.coordinates, atol=1e-15)
        assert np.allclose(flow.v, solution.w)
        assert np.allclose(flow.p, solution.q + params.fb.evaluate(vertices, params.L))

    def test_poiseuille_sanity(self, default_mesh, deformation, identity_radius, params):
        space = build_stokes_space(default_mesh)
        solution = solve_stokes(assemble_stokes(0.0, space, deformation, identity_radius, params))
        outlet = flow_rates(solution, deformation, identity_radius)["outlet"]
        assert outlet / poiseuille_flow_rate(params) == pytest.approx(1.0, abs=0.10)


class TestMovingWall:
    """Flow under a traveling-wave radius."""

    def test_mass_balance(self, coarse_space, deformation, wave, params):
        system = assemble_stokes(0.3, coarse_space, deformation, wave, params)
        solution = solve_stokes(system)
        assert mass_balance_residual(system, solution) < 1e-10
        assert np.any(system.mass_rhs != 0.0)

    def test_threaded_assembly_matches_serial(self, coarse_space, deformation, wave, params):
        serial = assemble_stokes(0.3, coarse_space, deformation, wave, params, chunk_size=32)
        threaded = assemble_stokes(0.3, coarse_space, deformation, wave, params, chunk_size=32,
                                   workers=3)
        assert abs(serial.matrix - threaded.matrix).max() == 0.0
        assert np.array_equal(serial.rhs, threaded.rhs)

    def test_infsup_positive(self, coarse_space, deformation, wave, params):
        beta = infsup_estimate(coarse_space, deformation, 0.3, wave, params)
        assert 0.0 < beta < 10.0

    def test_mass_source_matches_volume_change(self, default_mesh, deformation, params):
        # half a wavelength along the vessel, so the volume is not constant in time
        half_wave = TravelingWaveRadius(params.R0, 0.1, wavenumber=np.pi / params.L,
                                        frequency=2.0 * np.pi)
        t = 0.3
        space = build_stokes_space(default_mesh)
        system = assemble_stokes(t, space, deformation, half_wave, params)
        total = float(np.sum(system.mass_rhs))

        rate = fd_time(lambda s: deformed_volume(deformation, s, default_mesh.fluid, half_wave), t)
        assert total == pytest.approx(float(rate), rel=1e-6)

        def cylinder_rate(x1):
            R, _, R_t, _ = half_wave.at(t).values(np.array([x1]))
            return float(2.0 * np.pi * R[0] * R_t[0])

        analytic, _ = quad(cylinder_rate, 0.0, params.L, epsabs=1e-12)
        assert abs(analytic) > 1e-3
        assert np.sign(total) == np.sign(analytic)
        section_ratio = default_mesh.fluid_volume_defect / (np.pi * params.R0 ** 2 * params.L)
        assert abs(total - analytic) <= 3.0 * section_ratio * abs(analytic)
