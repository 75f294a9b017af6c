"""
Tests for the temperature averaging, the NO concentration ODE and the radius field.
"""
import numpy as np
import pytest
from scipy.integrate import quad, solve_ivp

from app.chemistry.averaging import (
    AveragedHistory, averaged_series, lipschitz_estimate, spatial_average, temporal_convolve,
)
from app.chemistry.ode import (
    advance, concentration_bound, exponential_weights, initial_state, integrate_ode,
    integrate_ode_from_history,
)
from app.chemistry.radius_field import radius_field, radius_from_states, radius_profile
from app.errors import HistoryGapError
from app.params.functions import eval_G, eval_H, eval_H_deriv
from app.params.models import InitialData, KernelSpec, ModelParams, ProductionSpec
from app.verify.convergence import fit_order


def _history(kernel, times, values, plateau):
    history = AveragedHistory.start(kernel, plateau)
    for t, v in zip(times, values):
        history = history.extended(float(t), float(v))
    return history


class TestAveragedHistory:
    """Append-only T1 samples."""

    def test_plateau_before_zero(self):
        history = AveragedHistory.start(KernelSpec(gamma=0.2), 0.7)
        assert np.allclose(history.T1(np.array([-1.0, -0.1, 0.0])), 0.7)

    def test_extend_and_replace(self):
        history = AveragedHistory.start(KernelSpec(), 1.0).extended(0.1, 2.0)
        replaced = history.extended(0.1, 3.0)
        assert history.values[-1] == 2.0
        assert replaced.values[-1] == 3.0
        assert len(replaced.times) == 2

    def test_append_only(self):
        history = AveragedHistory.start(KernelSpec(), 1.0).extended(0.2, 1.0)
        with pytest.raises(HistoryGapError):
            history.extended(0.1, 1.0)

    def test_truncated(self):
        history = _history(KernelSpec(), [0.1, 0.2, 0.3], [1.0, 2.0, 3.0], 0.0)
        assert history.truncated(0.2).last_time == pytest.approx(0.2)

    def test_T1_beyond_history(self):
        history = AveragedHistory.start(KernelSpec(), 1.0)
        with pytest.raises(HistoryGapError):
            history.T1(np.array([0.5]))


class TestTemporalConvolution:
    """(K_gamma * T1)(t)."""

    def test_constant_history(self):
        kernel = KernelSpec(gamma=0.2)
        times = 0.05 * np.arange(1, 21)
        history = _history(kernel, times, np.full(len(times), 1.3), 1.3)
        values = averaged_series(history, [0.0, 0.1, 0.5, 1.0])
        assert np.allclose(values, 1.3, atol=1e-13)

    def test_linear_history_lags_by_first_moment(self):
        kernel = KernelSpec(gamma=0.2)
        times = 0.05 * np.arange(1, 21)
        history = _history(kernel, times, times, 0.0)
        assert temporal_convolve(history, 0.5) == pytest.approx(0.5 - kernel.first_moment(), abs=1e-13)

    def test_gap_raises(self):
        history = _history(KernelSpec(), [0.1], [1.0], 1.0)
        with pytest.raises(HistoryGapError):
            temporal_convolve(history, 0.2)

    def test_causal(self):
        kernel = KernelSpec(gamma=0.1)
        times = 0.025 * np.arange(1, 41)
        values = np.cos(times)
        perturbed = np.where(times > 0.5, values + 1.0, values)
        first = _history(kernel, times, values, 1.0)
        second = _history(kernel, times, perturbed, 1.0)
        for t in times[times <= 0.5]:
            assert temporal_convolve(first, t) == temporal_convolve(second, t)

    def test_lipschitz_bound(self):
        kernel = KernelSpec(gamma=0.2)
        times = 0.05 * np.arange(1, 21)
        rng = np.random.default_rng(0)
        first = _history(kernel, times, 1.0 + 0.1 * rng.standard_normal(20), 1.0)
        second = _history(kernel, times, 1.0 + 0.1 * rng.standard_normal(20), 1.0)
        estimate = lipschitz_estimate(first, second, times)
        assert estimate["sup_T"] > 0.0
        assert estimate["ratio"] <= estimate["kernel_l2"] + 1e-12

    def test_spatial_average_of_constant(self, coarse_mesh):
        solid = coarse_mesh.solid
        assert spatial_average(np.full(solid.n_vertices, 0.8), solid) == pytest.approx(0.8)


class TestConcentration:
    """Exponential integrator for dc/dt = -k c + G."""

    def test_weights_integrate_linear_data(self):
        k, dt = 1.7, 0.3
        w0, w1 = exponential_weights(k, dt)
        g = lambda s: 2.0 - 3.0 * s  # noqa: E731
        exact, _ = quad(lambda s: np.exp(-k * (dt - s)) * g(s), 0.0, dt)
        assert w0 * g(0.0) + w1 * g(dt) == pytest.approx(exact, rel=1e-13)

    def test_weights_small_step(self):
        k, dt = 1.0, 1e-5
        w0, w1 = exponential_weights(k, dt)
        assert w0 + w1 == pytest.approx(-np.expm1(-k * dt) / k, rel=1e-12)
        assert w1 == pytest.approx(0.5 * dt, rel=1e-4)

    def test_decay_without_production(self):
        params = ModelParams(G=ProductionSpec(kind="constant", g0=0.0),
                             initial=InitialData(c0=0.5, c0_amplitude=0.2))
        x = np.linspace(0.0, 1.0, 9)
        t = np.linspace(0.0, 2.0, 41)
        field = integrate_ode(params, x, t, np.ones_like(t))
        expected = np.exp(-t)[:, None] * params.initial.concentration(x, 1.0)[None, :]
        assert np.max(np.abs(field.c - expected)) <= 1e-12
        assert np.allclose(field.c_t, -field.c)

    def test_constant_production(self):
        params = ModelParams(k_deg=2.0, G=ProductionSpec(kind="constant", g0=0.7),
                             initial=InitialData(c0=0.0))
        t = np.linspace(0.0, 2.0, 21)
        field = integrate_ode(params, np.linspace(0.0, 1.0, 5), t, np.zeros_like(t))
        exact = 0.35 * -np.expm1(-2.0 * t)
        assert np.max(np.abs(field.c - exact[:, None])) <= 1e-12

    def test_second_order_for_varying_temperature(self):
        params = ModelParams()
        temperature = lambda t: 0.2 + t  # noqa: E731
        x = np.array([0.5])

        def rhs(t, c):
            return -params.k_deg * c + eval_G(params, x, np.array([temperature(t)]))

        reference = solve_ivp(rhs, (0.0, 1.0), params.initial.concentration(x, params.L),
                              rtol=1e-12, atol=1e-14).y[:, -1]
        errors, steps = [], []
        for n in (10, 20, 40):
            t = np.linspace(0.0, 1.0, n + 1)
            field = integrate_ode(params, x, t, temperature(t))
            errors.append(float(abs(field.c[-1, 0] - reference[0])))
            steps.append(1.0 / n)
        assert 1.8 <= fit_order(errors, steps) <= 2.2

    def test_step_matches_batch(self):
        params = ModelParams()
        x = np.linspace(0.0, 1.0, 5)
        state = initial_state(params, x, 1.0)
        stepped = advance(params, advance(params, state, 0.1, 0.9), 0.2, 0.8)
        batch = integrate_ode(params, x, [0.0, 0.1, 0.2], [1.0, 0.9, 0.8])
        assert np.allclose(stepped.c, batch.c[-1], atol=1e-15)

    def test_from_history(self):
        params = ModelParams()
        x = np.linspace(0.0, 1.0, 5)
        t = np.linspace(0.0, 0.5, 11)
        history = _history(params.kernel, t[1:], np.ones(10), 1.0)
        field = integrate_ode_from_history(params, history, x, t)
        assert np.allclose(field.T, 1.0, atol=1e-13)

    def test_bound(self):
        params = ModelParams(initial=InitialData(c0=3.0))
        t = np.linspace(0.0, 5.0, 51)
        field = integrate_ode(params, np.linspace(0.0, 1.0, 5), t, np.full_like(t, 5.0))
        assert field.sup_norm() <= concentration_bound(params)


class TestRadiusField:
    """R = H(c) and its chain-rule derivatives."""

    def _field(self, params):
        x = np.linspace(0.0, params.L, 9)
        t = np.linspace(0.0, 1.0, 11)
        return integrate_ode(params, x, t, 0.5 + 0.5 * t)

    def test_values(self):
        params = ModelParams()
        concentration = self._field(params)
        field = radius_field(params, concentration)
        assert np.allclose(field.R, eval_H(params, concentration.c))
        assert np.allclose(field.R_t, eval_H_deriv(params, concentration.c) * concentration.c_t)
        assert field.R.min() >= params.R1 and field.R.max() <= params.R2

    def test_time_interpolation(self):
        params = ModelParams()
        field = radius_field(params, self._field(params))
        mid = field.at(0.05).radius(field.x_nodes)
        assert np.allclose(mid, 0.5 * (field.R[0] + field.R[1]))

    def test_outside_range(self):
        params = ModelParams()
        field = radius_field(params, self._field(params))
        with pytest.raises(HistoryGapError):
            field.at(1.5)

    def test_states_agree_with_field(self):
        params = ModelParams(initial=InitialData(c0=0.5, c0_amplitude=0.3))
        x = np.linspace(0.0, params.L, 9)
        first = initial_state(params, x, 1.0)
        second = advance(params, first, 0.1, 1.1)
        from_states = radius_from_states(params, [first, second])
        single = radius_profile(params, second)
        assert np.allclose(from_states.at(0.1).radius(x), single.radius(x))
        assert np.allclose(from_states.R_x[0], eval_H_deriv(params, first.c) * first.c_x)
