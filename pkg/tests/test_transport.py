"""
Tests for the coupled fluid/solid heat transport step.
"""
import numpy as np
import pytest

from app.errors import ParameterError
from app.stokes.solver import solve_stokes
from app.stokes.system import assemble_stokes, build_stokes_space
from app.transport.diagnostics import (
    energy_norm, interface_heat_flux, l2_error, outlet_mean_temperature, weighted_mass,
)
from app.transport.solver import advance
from app.transport.system import (
    TransportSource, TransportState, assemble_step, build_transport_space,
    initial_transport_state,
)


def _constant_source(value):
    return TransportSource(
        volume=lambda side, points: np.zeros(len(points)),
        flux=lambda tag, points, normals: np.zeros(len(points)),
        dirichlet=lambda points: np.full(len(points), value),
    )


@pytest.fixture(scope="module")
def space(coarse_mesh):
    return build_transport_space(coarse_mesh)


@pytest.fixture(scope="module")
def velocity(coarse_mesh, deformation, identity_radius, params):
    stokes_space = build_stokes_space(coarse_mesh)
    return solve_stokes(assemble_stokes(0.05, stokes_space, deformation, identity_radius, params))


class TestTransportSpace:
    """Unknown layout and the top Dirichlet set."""

    def test_layout(self, space, coarse_mesh):
        assert space.n_dofs == coarse_mesh.fluid.n_vertices + coarse_mesh.solid.n_vertices
        theta_f, theta_s = space.split(np.arange(space.n_dofs))
        assert len(theta_f) == space.n_fluid
        assert theta_s[0] == space.n_fluid

    def test_dirichlet_on_top(self, space, coarse_mesh):
        points = coarse_mesh.solid.vertices[space.dirichlet_dofs - space.n_fluid]
        assert np.allclose(points[:, 2], 0.5)

    def test_initial_state(self, space, params):
        state = initial_transport_state(space, params)
        assert state.t == 0.0
        assert np.all(state.vector == params.initial.theta_f0)


class TestAssembleStep:
    """Argument checks and simple exact solutions."""

    def test_non_positive_step(self, space, deformation, identity_radius, params):
        state = initial_transport_state(space, params)
        with pytest.raises(ParameterError):
            assemble_step(0.1, 0.1, state, space, deformation, identity_radius, params,
                          source=_constant_source(1.0))

    def test_needs_velocity_or_source(self, space, deformation, identity_radius, params):
        state = initial_transport_state(space, params)
        with pytest.raises(ParameterError) as info:
            assemble_step(0.0, 0.1, state, space, deformation, identity_radius, params)
        assert info.value.details == {"t": 0.1}

    def test_constant_preserved_on_fixed_domain(self, space, deformation, identity_radius, params):
        state = TransportState(t=0.0, theta_f=np.full(space.n_fluid, 0.6),
                               theta_s=np.full(space.n_solid, 0.6))
        system = assemble_step(0.0, 0.1, state, space, deformation, identity_radius, params,
                               source=_constant_source(0.6))
        new = advance(system)
        assert new.t == 0.1
        assert np.allclose(new.vector, 0.6, atol=1e-12)

    def test_symmetric_without_flow(self, space, deformation, wave, params):
        state = initial_transport_state(space, params)
        system = assemble_step(0.0, 0.1, state, space, deformation, wave, params,
                               source=_constant_source(1.0))
        assert abs(system.matrix - system.matrix.T).max() < 1e-12
        assert system.blocks["outflow"].nnz == 0

    def test_cooling_from_the_top(self, space, deformation, identity_radius, params, velocity):
        state = initial_transport_state(space, params)
        system = assemble_step(0.0, 0.05, state, space, deformation, identity_radius, params,
                               velocity=velocity)
        new = advance(system)
        _, theta_s = space.split(new.vector)
        assert np.allclose(theta_s[space.dirichlet_dofs - space.n_fluid], 0.0)
        assert np.all(np.isfinite(new.vector))
        assert np.mean(new.theta_s) < params.initial.theta_s0
        assert interface_heat_flux(new, space, deformation, identity_radius, params.alpha) > 0.0
        assert system.peclet >= 0.0


class TestDiagnostics:
    """Mass, energy, fluxes and errors of temperature fields."""

    def test_weighted_mass_identity(self, space, deformation, identity_radius):
        mass = weighted_mass(space, deformation, 0.0, identity_radius)
        ones = np.ones(space.n_dofs)
        assert ones @ (mass @ ones) == pytest.approx(1.0, abs=1e-12)

    def test_weighted_mass_keeps_box_volume(self, space, deformation, wave):
        mass = weighted_mass(space, deformation, 0.3, wave)
        ones = np.ones(space.n_dofs)
        assert ones @ (mass @ ones) == pytest.approx(1.0, abs=1e-2)

    def test_energy_of_constant(self, space, deformation, identity_radius):
        state = TransportState(t=0.0, theta_f=np.full(space.n_fluid, 2.0),
                               theta_s=np.full(space.n_solid, 2.0))
        assert energy_norm(state, space, deformation, identity_radius) == pytest.approx(4.0)
        assert interface_heat_flux(state, space, deformation, identity_radius, 1.0) == pytest.approx(
            0.0, abs=1e-14)
        assert outlet_mean_temperature(state, space) == pytest.approx(2.0)

    def test_l2_error_of_linear_interpolant(self, coarse_mesh):
        solid = coarse_mesh.solid
        linear = lambda x: 1.0 + 2.0 * x[:, 0] - x[:, 2]  # noqa: E731
        assert l2_error(linear(solid.vertices), linear, solid) < 1e-13
        shifted = l2_error(linear(solid.vertices) + 1.0, linear, solid)
        assert shifted == pytest.approx(np.sqrt(solid.volume()), rel=1e-12)


class TestPureDiffusion:
    """No flow, no inflow and a cold skin surface on the static domain."""

    def test_energy_never_increases(self, space, deformation, identity_radius, params):
        quiet = params.model_copy(update={
            "fb": params.fb.model_copy(update={"p_in": 0.0, "p_out": 0.0}),
            "fin": params.fin.model_copy(update={"value": 0.0}),
        })
        state = initial_transport_state(space, quiet)
        energies = [energy_norm(state, space, deformation, identity_radius)]
        for _ in range(100):
            system = assemble_step(state.t, state.t + 0.05, state, space, deformation,
                                   identity_radius, quiet, source=_constant_source(0.0))
            state = advance(system)
            energies.append(energy_norm(state, space, deformation, identity_radius))

        energies = np.array(energies)
        assert np.all(energies[1:] <= energies[:-1] * (1.0 + 1e-12))
        assert energies[-1] < 1e-3 * energies[0]
        assert state.t == pytest.approx(5.0)
