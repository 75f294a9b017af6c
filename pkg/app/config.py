"""
Run configuration.

A config file uses the dotenv KEY=VALUE grammar; every key can also be set
from the environment with the SKINFLOW_ prefix, which takes precedence.
"""
import io
import logging
import re
from pathlib import Path
from typing import Any, Dict, Literal, Optional, Tuple

import numpy as np
from dotenv.parser import parse_stream
from pydantic import Field, ValidationError
from pydantic_settings import BaseSettings, SettingsConfigDict

from app.errors import ConfigError, MeshError
from app.geometry.mesh import Resolution
from app.params.models import (
    BoundaryStressSpec, InflowSpec, InitialData, KernelSpec, ModelParams, ProductionSpec,
    RadiusMapSpec,
)
from app.params.validation import validate

logger = logging.getLogger(__name__)

REQUIRED_KEYS = ("R1", "R2", "R0", "delta", "L")
_STEP_TOL = 1e-9


def parse_matrix(text: str) -> np.ndarray:
    """Scalar, three diagonal entries, or nine entries (rows may be separated by ';')."""
    numbers = [float(tok) for tok in re.split(r"[\s,;]+", text.strip()) if tok]
    if len(numbers) == 1:
        return numbers[0] * np.eye(3)
    if len(numbers) == 3:
        return np.diag(numbers)
    if len(numbers) == 9:
        return np.array(numbers).reshape(3, 3)
    raise ValueError(f"expected 1, 3 or 9 numbers, got {len(numbers)}")


class RunConfig(BaseSettings):
    # 几何
    R1: float = 0.15
    R2: float = 0.35
    R0: float = 0.25
    delta: float = 0.04
    L: float = 1.0

    # 时间
    T_final: float = 1.0
    dt: float = 0.05
    gamma: float = 0.2

    # 系数
    mu: float = 1.0
    k_deg: float = 1.0
    alpha: float = 1.0
    Kf: str = "1"
    Ks: str = "1"

    # 函数族
    G_kind: Literal["tanh", "constant"] = "tanh"
    g0: float = 0.5
    y_star: float = 0.5
    G_scale: float = 0.5
    G_axial_amplitude: float = 0.0
    H_kind: Literal["logistic", "constant"] = "logistic"
    c_star: float = 0.5
    H_width: float = 1.0
    H_value: Optional[float] = None

    # 边界与初值
    P_in: float = 1.0
    P_out: float = 0.0
    f_in: float = 1.0
    c0: float = 0.5
    c0_amplitude: float = 0.0
    theta_f0: float = 1.0
    theta_s0: float = 1.0

    # 离散
    resolution: str = Field("4,16,2,2", description="n_axial,n_angular,n_radial,n_outer")
    n_x1: int = Field(33, ge=2)
    rho_n_R: int = Field(50, ge=2)
    rho_n_r: int = Field(400, ge=10)
    quadrature_degree: int = Field(4, ge=2)

    # 求解器
    mode: Literal["staggered", "picard"] = "staggered"
    n_subiter: int = Field(2, ge=1)
    picard_tol: float = Field(1e-6, gt=0.0)
    picard_max_iter: int = Field(25, ge=1)
    stokes_tol: float = Field(1e-10, gt=0.0)
    transport_tol: float = Field(1e-10, gt=0.0)

    # 运行
    min_dihedral_deg: float = 2.0
    seed: int = 0
    deterministic: bool = True
    workers: int = Field(1, ge=1)
    chunk_size: int = Field(512, ge=1)
    snapshot_every: int = Field(0, ge=0, description="VTK snapshot period in steps, 0 disables")
    checkpoint_every: int = Field(0, ge=0)

    model_config = SettingsConfigDict(env_prefix="SKINFLOW_", extra="forbid", frozen=True)

    @classmethod
    def settings_customise_sources(cls, settings_cls, init_settings, env_settings,
                                   dotenv_settings, file_secret_settings):
        return env_settings, init_settings

    @property
    def Kf_matrix(self) -> np.ndarray:
        return parse_matrix(self.Kf)

    @property
    def Ks_matrix(self) -> np.ndarray:
        return parse_matrix(self.Ks)

    @property
    def resolution_spec(self) -> Resolution:
        values = tuple(int(v) for v in re.split(r"[\s,]+", self.resolution.strip()) if v)
        return Resolution(*values)

    @property
    def n_steps(self) -> int:
        return int(round(self.T_final / self.dt))

    @property
    def effective_workers(self) -> int:
        return 1 if self.deterministic else self.workers

    def to_params(self) -> ModelParams:
        as_tuple = lambda m: tuple(tuple(float(v) for v in row) for row in m)  # noqa: E731
        return ModelParams(
            R1=self.R1, R2=self.R2, R0=self.R0, delta=self.delta, L=self.L,
            T_final=self.T_final, mu=self.mu, k_deg=self.k_deg, alpha=self.alpha,
            Kf=as_tuple(self.Kf_matrix), Ks=as_tuple(self.Ks_matrix),
            kernel=KernelSpec(gamma=self.gamma),
            G=ProductionSpec(kind=self.G_kind, g0=self.g0, y_star=self.y_star, scale=self.G_scale,
                             axial_amplitude=self.G_axial_amplitude),
            H=RadiusMapSpec(kind=self.H_kind, c_star=self.c_star, width=self.H_width,
                            value=self.H_value),
            fb=BoundaryStressSpec(p_in=self.P_in, p_out=self.P_out),
            fin=InflowSpec(value=self.f_in),
            initial=InitialData(c0=self.c0, c0_amplitude=self.c0_amplitude,
                                theta_f0=self.theta_f0, theta_s0=self.theta_s0),
        )

    def with_overrides(self, **changes: Any) -> "RunConfig":
        return RunConfig(**{**self.model_dump(), **changes})


def _field_lookup() -> Dict[str, str]:
    return {name.lower(): name for name in RunConfig.model_fields}


def _binding_line(binding) -> int:
    # dotenv marks a binding where its leading blank lines start
    raw = binding.original.string
    return binding.original.line + raw[:len(raw) - len(raw.lstrip())].count("\n")


def read_bindings(text: str) -> Dict[str, Tuple[str, int]]:
    """KEY -> (value, line) from dotenv text, rejecting malformed, unknown and duplicate keys."""
    lookup = _field_lookup()
    found: Dict[str, Tuple[str, int]] = {}
    for binding in parse_stream(io.StringIO(text)):
        line = _binding_line(binding)
        if binding.error or (binding.key is not None and binding.value is None):
            raise ConfigError(f"Malformed line {line}",
                              details={"line": line, "text": binding.original.string.strip()})
        if binding.key is None:
            continue
        name = lookup.get(binding.key.lower())
        if name is None:
            raise ConfigError(f"Unknown key '{binding.key}' on line {line}",
                              details={"line": line, "key": binding.key})
        if name in found:
            raise ConfigError(f"Duplicate key '{binding.key}' on line {line}",
                              details={"line": line, "first_line": found[name][1], "key": name})
        found[name] = (binding.value, line)
    return found


def check_run_config(config: RunConfig) -> None:
    """Time-grid, resolution and model-assumption checks; raises ConfigError."""
    if config.gamma < 2.0 * config.dt - _STEP_TOL:
        raise ConfigError("gamma must be at least 2 dt", details={"gamma": config.gamma, "dt": config.dt})
    steps = config.T_final / config.dt
    if abs(steps - round(steps)) > _STEP_TOL or round(steps) < 1:
        raise ConfigError("T_final / dt must be a positive integer",
                          details={"T_final": config.T_final, "dt": config.dt})
    try:
        config.resolution_spec.validate()
    except (MeshError, TypeError, ValueError) as exc:
        raise ConfigError(f"Invalid resolution '{config.resolution}'",
                          details={"reason": str(exc)}) from exc
    try:
        params = config.to_params()
    except (ValueError, ValidationError) as exc:
        raise ConfigError("Invalid model data", details={"reason": str(exc)}) from exc
    report = validate(params, seed=config.seed)
    if not report.passed:
        first = report.failures[0]
        raise ConfigError(first.label, details={"violations": [c.model_dump() for c in report.failures]})


def parse_config(path, overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
    """Load, default and validate a run configuration file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"Cannot read config file {path}", details={"path": str(path)}) from exc

    bindings = read_bindings(text)
    missing = [key for key in REQUIRED_KEYS if key not in bindings]
    if missing:
        raise ConfigError(f"Missing required keys: {', '.join(missing)}", details={"missing": missing})

    values: Dict[str, Any] = {name: value for name, (value, _) in bindings.items()}
    lookup = _field_lookup()
    for key, value in (overrides or {}).items():
        name = lookup.get(key.lower())
        if name is None:
            raise ConfigError(f"Unknown override key '{key}'", details={"key": key})
        values[name] = value
    try:
        config = RunConfig(**values)
    except ValidationError as exc:
        errors = exc.errors(include_url=False)
        field_name = str(errors[0]["loc"][0]) if errors and errors[0]["loc"] else ""
        line = bindings.get(field_name, (None, None))[1]
        raise ConfigError(f"Invalid value for '{field_name}'" + (f" on line {line}" if line else ""),
                          details={"errors": [{k: str(v) for k, v in e.items()} for e in errors],
                                   "line": line}) from exc

    check_run_config(config)
    logger.info(f"Loaded config {path}: mode={config.mode}, dt={config.dt}, "
                f"resolution={config.resolution_spec.as_tuple()}")
    return config
