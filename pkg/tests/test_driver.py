"""
Tests for the coupled drivers: staggered stepping, global Picard iteration,
run orchestration and restarts.
"""
import json

import numpy as np
import pytest

from app.config import RunConfig
from app.driver.picard import (
    constant_guess, global_picard, history_from_trajectory, mode_consistency, space_time_norm,
    time_grid,
)
from app.driver.runner import (
    fixed_domain_config, fixed_domain_flow, load_checkpoint, run, run_with_consistency,
    save_checkpoint,
)
from app.driver.staggered import build_context, initial_coupled_state, run_staggered
from app.errors import CheckpointError, ConfigError, InvariantViolation, ParameterError
from app.io.csv_writer import read_time_series


def _config(**changes):
    base = dict(resolution="2,8,1,1", T_final=0.1, dt=0.05, gamma=0.1, n_x1=9,
                rho_n_R=10, rho_n_r=200)
    return RunConfig(**{**base, **changes})


@pytest.fixture(scope="module")
def context():
    return build_context(_config())


@pytest.fixture(scope="module")
def staggered(context):
    return run_staggered(context)


class TestStaggered:
    """Two committed steps on the coarse mesh."""

    def test_initial_state(self, context):
        state = initial_coupled_state(context)
        assert state.current.step == 0
        assert state.history.plateau == pytest.approx(context.params.initial.theta_s0)
        assert state.current.concentration.T == pytest.approx(context.plateau)

    def test_steps_committed(self, staggered):
        assert np.allclose(staggered.times, [0.0, 0.05, 0.1])
        assert [record.step for record in staggered.records] == [1, 2]
        assert np.allclose(staggered.history.times, [0.0, 0.05, 0.1])

    def test_records_respect_bounds(self, staggered, context):
        params = context.params
        for record in staggered.records:
            assert params.R1 <= record.R_min <= record.R_max <= params.R2
            assert record.J_min >= record.eta
            assert len(record.subiteration_residuals) == context.config.n_subiter

    def test_subiterations_contract(self, staggered):
        for record in staggered.records:
            first, second = record.subiteration_residuals
            assert second <= first

    def test_solid_cools(self, staggered, context):
        assert np.mean(staggered.current.transport.theta_s) < context.params.initial.theta_s0

    def test_deterministic(self, staggered):
        again = run_staggered(build_context(_config()))
        assert np.array_equal(again.theta_s_trajectory(), staggered.theta_s_trajectory())

    def test_partial_run(self, context):
        state = run_staggered(context, n_steps=1)
        assert state.current.step == 1

    def test_non_increasing_commit(self, staggered):
        with pytest.raises(InvariantViolation):
            staggered.commit(staggered.nodes[1], staggered.history)


class TestPicard:
    """Fixed-point iteration on space-time solid temperatures."""

    def test_time_grid_and_guess(self, context):
        assert np.allclose(time_grid(context), [0.0, 0.05, 0.1])
        guess = constant_guess(context)
        assert guess.shape == (3, context.mesh.solid.n_vertices)

    def test_history_starts_from_plateau(self, context):
        history = history_from_trajectory(context, constant_guess(context, 0.3))
        assert history.values[0] == pytest.approx(context.plateau)
        assert history.values[-1] == pytest.approx(0.3)

    def test_space_time_norm_of_constant(self, context):
        ones = np.ones((3, context.mesh.solid.n_vertices))
        volume = context.mesh.solid.volume()
        assert space_time_norm(context, ones) == pytest.approx(np.sqrt(0.1 * volume), rel=1e-10)

    def test_converges(self, context):
        result = global_picard(context, tol=1e-6, max_iter=8)
        assert result.converged
        assert result.residuals[-1] < 1e-6
        assert result.residuals[-1] < result.residuals[0]
        assert result.trajectory.state.current.step == 2

    def test_non_convergence_returns_best(self, context):
        result = global_picard(context, tol=1e-30, max_iter=2)
        assert not result.converged
        assert result.iterations == 2
        assert len(result.records) == 2

    def test_agrees_with_staggered(self, context, staggered):
        consistency = mode_consistency(context, staggered)
        assert consistency["subiteration_residual"] > 0.0
        bound = max(consistency["subiteration_residual"], context.config.picard_tol)
        assert consistency["picard_change"] <= bound
        assert consistency["consistent"] is True

    def test_fixed_point_independent_of_guess(self, context):
        from_default = global_picard(context, tol=1e-6, max_iter=12)
        from_cold = global_picard(context, initial_guess=constant_guess(context, 0.3),
                                  tol=1e-6, max_iter=12)
        assert from_default.converged and from_cold.converged
        difference = from_default.trajectory.theta_s - from_cold.trajectory.theta_s
        assert space_time_norm(context, difference) <= 1e-5


class TestTemperatureIndependentProduction:
    """With G independent of the temperature the chemistry sees no feedback."""

    @pytest.fixture(scope="class")
    def decoupled(self):
        return build_context(_config(G_kind="constant"))

    def test_picard_stops_after_two_iterations(self, decoupled):
        result = global_picard(decoupled, tol=1e-6, max_iter=8)
        assert result.converged
        assert result.iterations == 2
        assert result.residuals[0] > 0.0
        assert result.residuals[1] == 0.0

    def test_second_subiteration_is_idle(self, decoupled):
        state = run_staggered(decoupled)
        for record in state.records:
            first, second = record.subiteration_residuals
            assert first > 0.0
            assert second == 0.0


class TestFixedDomain:
    """H = R0 leaves the domain undeformed."""

    def test_flow_matches_fixed_domain_solve(self):
        config = fixed_domain_config(_config())
        assert config.H_kind == "constant"
        context = build_context(config)
        state = run_staggered(context, n_steps=1)
        reference = fixed_domain_flow(context, 0.05)
        assert np.allclose(state.current.stokes.w, reference.w, atol=1e-12)
        record = state.records[0]
        assert record.R_min == pytest.approx(context.params.R0)
        assert record.R_max == pytest.approx(context.params.R0)


class TestRun:
    """Artifacts written by the runner."""

    def test_staggered_artifacts(self, tmp_path):
        report = run(_config(snapshot_every=1), tmp_path)
        assert report.passed
        assert len(report.steps) == 2
        frame = read_time_series(tmp_path / "time_series.csv")
        assert np.allclose(frame["t"], [0.05, 0.1])
        assert (tmp_path / "rho_table.csv").exists()
        assert (tmp_path / "snapshots" / "fluid_0002.vtk").exists()
        saved = json.loads((tmp_path / "report.json").read_text(encoding="utf-8"))
        assert saved["command"] == "run"
        assert saved["error"] is None

    def test_picard_artifacts(self, tmp_path):
        report = run(_config(mode="picard", picard_tol=1e-6, picard_max_iter=8), tmp_path)
        assert report.converged
        assert report.picard
        assert len(read_time_series(tmp_path / "time_series.csv")) == 2

    def test_failure_is_reported(self, tmp_path):
        with pytest.raises(ConfigError) as excinfo:
            run(_config(H_kind="constant", H_value=0.1), tmp_path)
        assert excinfo.value.exit_code == 2
        saved = json.loads((tmp_path / "report.json").read_text(encoding="utf-8"))
        assert saved["error"]["error_code"] == "INVALID_CONFIG"
        assert not (tmp_path / "time_series.csv").exists()

    def test_indefinite_conductivity_rejected(self, tmp_path):
        with pytest.raises(ParameterError) as excinfo:
            run(_config(Kf="1 1 -0.1"), tmp_path)
        violations = excinfo.value.details["violations"]
        assert [v["assumption"] for v in violations] == ["coefficients"]
        assert "K_f" in violations[0]["statement"]

    def test_context_rejects_invalid_params(self):
        config = _config()
        bad = config.to_params().model_copy(update={"delta": 0.06})
        with pytest.raises(ParameterError):
            build_context(config, params=bad)

    def test_resume_matches_full_run(self, tmp_path):
        config = _config(checkpoint_every=1)
        full = run(config, tmp_path / "full")
        checkpoint_path = tmp_path / "full" / "checkpoints" / "step_0001.ckpt"
        assert checkpoint_path.exists()
        resumed = run(config, tmp_path / "resumed", resume_from=checkpoint_path)
        assert [record.step for record in resumed.steps] == [2]
        assert resumed.steps[0].energy == pytest.approx(full.steps[-1].energy, rel=1e-12)
        assert resumed.steps[0].T == pytest.approx(full.steps[-1].T, rel=1e-12)

    def test_consistency_report(self, tmp_path):
        report = run_with_consistency(_config(), tmp_path)
        assert report.command == "consistency"
        assert [check.name for check in report.checks] == ["mode_consistency"]
        assert (tmp_path / "report.json").exists()


class TestCheckpointing:
    """Restart files of the coupled state."""

    def test_round_trip(self, tmp_path, context, staggered):
        path = tmp_path / "state.ckpt"
        save_checkpoint(path, staggered, context.config)
        restored = load_checkpoint(path, context.config)
        assert restored.current.step == 2
        assert np.array_equal(restored.current.transport.theta_s,
                              staggered.current.transport.theta_s)
        assert np.array_equal(restored.history.values, staggered.history.values)

    def test_config_mismatch(self, tmp_path, context, staggered):
        path = tmp_path / "state.ckpt"
        save_checkpoint(path, staggered, context.config)
        with pytest.raises(CheckpointError):
            load_checkpoint(path, context.config.with_overrides(alpha=2.0))
