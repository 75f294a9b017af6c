"""
Tests for the run configuration: file grammar, defaults, environment
overrides and consistency checks.
"""
import numpy as np
import pytest

from app.config import RunConfig, check_run_config, parse_config, parse_matrix, read_bindings
from app.errors import ConfigError, ParameterError

MINIMAL = "R1=0.15\nR2=0.35\nR0=0.25\ndelta=0.04\nL=1.0\n"


class TestParseMatrix:
    """Conductivity matrices from text."""

    def test_scalar(self):
        assert np.array_equal(parse_matrix("2"), 2.0 * np.eye(3))

    def test_diagonal(self):
        assert np.array_equal(parse_matrix("1, 2, 3"), np.diag([1.0, 2.0, 3.0]))

    def test_full(self):
        matrix = parse_matrix("1 0 0; 0 2 0.5; 0 0.5 3")
        assert matrix[1, 2] == 0.5
        assert matrix.shape == (3, 3)

    def test_wrong_count(self):
        with pytest.raises(ValueError):
            parse_matrix("1, 2")


class TestReadBindings:
    """KEY=VALUE lines with line numbers."""

    def test_values_and_lines(self):
        bindings = read_bindings("# geometry\nR1=0.15\n\nr2 = 0.35\n")
        assert bindings["R1"] == ("0.15", 2)
        assert bindings["R2"] == ("0.35", 4)

    def test_unknown_key(self):
        with pytest.raises(ConfigError) as info:
            read_bindings("R1=0.15\nradius=3\n")
        assert info.value.details == {"line": 2, "key": "radius"}

    def test_duplicate_key(self):
        with pytest.raises(ConfigError) as info:
            read_bindings("dt=0.05\nDT=0.1\n")
        assert info.value.details["first_line"] == 1
        assert info.value.details["line"] == 2

    def test_malformed_line(self):
        with pytest.raises(ConfigError) as info:
            read_bindings("R1=0.15\nR2\n")
        assert info.value.details["line"] == 2


class TestParseConfig:
    """Loading a file into a validated RunConfig."""

    def test_minimal_file_uses_defaults(self, config_file):
        config = parse_config(config_file(MINIMAL))
        assert config.dt == 0.05
        assert config.mode == "staggered"
        assert config.resolution_spec.as_tuple() == (4, 16, 2, 2)
        assert config.n_steps == 20

    def test_missing_required_keys(self, config_file):
        with pytest.raises(ConfigError) as info:
            parse_config(config_file("R1=0.15\nR2=0.35\n"))
        assert info.value.details["missing"] == ["R0", "delta", "L"]

    def test_invalid_value_reports_line(self, config_file):
        with pytest.raises(ConfigError) as info:
            parse_config(config_file(MINIMAL + "dt=fast\n"))
        assert info.value.details["line"] == 6

    def test_unreadable_file(self, tmp_path):
        with pytest.raises(ConfigError):
            parse_config(tmp_path / "absent.env")

    def test_overrides(self, config_file):
        config = parse_config(config_file(MINIMAL), overrides={"DT": 0.1, "mode": "picard"})
        assert config.dt == 0.1
        assert config.mode == "picard"

    def test_unknown_override(self, config_file):
        with pytest.raises(ConfigError):
            parse_config(config_file(MINIMAL), overrides={"speed": 1})

    def test_environment_wins_over_file(self, config_file, monkeypatch):
        monkeypatch.setenv("SKINFLOW_DT", "0.025")
        config = parse_config(config_file(MINIMAL + "dt=0.05\n"))
        assert config.dt == 0.025
        assert config.n_steps == 40

    def test_assumption_violation(self, config_file):
        with pytest.raises(ParameterError) as info:
            parse_config(config_file("R1=0.3\nR2=0.2\nR0=0.25\ndelta=0.04\nL=1\n"))
        assert info.value.exit_code == 2
        assert info.value.details["violations"]


class TestCheckRunConfig:
    """Time grid and resolution consistency."""

    def test_defaults(self):
        check_run_config(RunConfig())

    def test_gamma_shorter_than_two_steps(self):
        with pytest.raises(ConfigError) as info:
            check_run_config(RunConfig(gamma=0.05, dt=0.05))
        assert info.value.details == {"gamma": 0.05, "dt": 0.05}

    def test_non_integer_step_count(self):
        with pytest.raises(ConfigError):
            check_run_config(RunConfig(dt=0.3, gamma=0.6))

    @pytest.mark.parametrize("resolution", ["2,10,1,1", "1,8,1,1", "2,8,1,1,1"])
    def test_bad_resolution(self, resolution):
        with pytest.raises(ConfigError):
            check_run_config(RunConfig(resolution=resolution))


class TestRunConfig:
    """Derived views of a configuration."""

    def test_to_params(self):
        params = RunConfig(Kf="1,2,3", gamma=0.3, H_kind="constant", P_in=2.0).to_params()
        assert np.array_equal(params.Kf_matrix, np.diag([1.0, 2.0, 3.0]))
        assert params.gamma == 0.3
        assert params.H.kind == "constant"
        assert params.fb.p_in == 2.0

    def test_effective_workers(self):
        assert RunConfig(workers=4).effective_workers == 1
        assert RunConfig(workers=4, deterministic=False).effective_workers == 4

    def test_with_overrides(self):
        base = RunConfig()
        changed = base.with_overrides(alpha=2.0)
        assert changed.alpha == 2.0
        assert base.alpha == 1.0

    def test_unknown_field_rejected(self):
        with pytest.raises(ValueError):
            RunConfig(speed=1.0)
