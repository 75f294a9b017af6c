"""
Parameter models for the coupled skin-thermoregulation simulator.

All quantities are nondimensional. Function families are small pydantic
models so a config file can select them by name and tune a handful of
coefficients.
"""
from typing import Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

Matrix3 = Tuple[Tuple[float, float, float], Tuple[float, float, float], Tuple[float, float, float]]

IDENTITY3: Matrix3 = ((1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0))


class KernelSpec(BaseModel):
    """Averaging kernel K_gamma, a polynomial bump C t^2 (gamma - t)^2 on (0, gamma)."""
    model_config = ConfigDict(frozen=True)

    kind: Literal["bump"] = "bump"
    gamma: float = Field(0.2, gt=0.0, description="Length of the averaging window")

    @property
    def normalization(self) -> float:
        return 30.0 / self.gamma ** 5

    def evaluate(self, t):
        t = np.asarray(t, dtype=float)
        inside = (t > 0.0) & (t < self.gamma)
        return np.where(inside, self.normalization * t ** 2 * (self.gamma - t) ** 2, 0.0)

    def first_moment(self) -> float:
        return 0.5 * self.gamma


class ProductionSpec(BaseModel):
    """NO production G(x1, y): saturating in the averaged temperature y."""
    model_config = ConfigDict(frozen=True)

    kind: Literal["tanh", "constant"] = "tanh"
    g0: float = Field(0.5, ge=0.0, description="Saturation level of the production rate")
    y_star: float = Field(0.5, description="Temperature at half saturation")
    scale: float = Field(0.5, gt=0.0, description="Width of the tanh transition")
    axial_amplitude: float = Field(0.0, gt=-1.0, lt=1.0,
                                   description="Relative cos(pi x1 / L) modulation of g0")

    def axial_profile(self, x1, L: float):
        return 1.0 + self.axial_amplitude * np.cos(np.pi * np.asarray(x1, dtype=float) / L)

    def axial_profile_dx1(self, x1, L: float):
        return -self.axial_amplitude * np.pi / L * np.sin(np.pi * np.asarray(x1, dtype=float) / L)

    def saturation(self, y):
        y = np.asarray(y, dtype=float)
        if self.kind == "constant":
            return np.ones_like(y)
        return 0.5 * (1.0 + np.tanh((y - self.y_star) / self.scale))

    def saturation_dy(self, y):
        y = np.asarray(y, dtype=float)
        if self.kind == "constant":
            return np.zeros_like(y)
        return 0.5 / self.scale / np.cosh((y - self.y_star) / self.scale) ** 2

    def bound(self, L: float) -> float:
        """Analytic sup-bound C_G over G and its derivatives up to order three."""
        amp = abs(self.axial_amplitude)
        axial = [1.0 + amp] + [amp * (np.pi / L) ** k for k in (1, 2, 3)]
        if self.kind == "constant":
            saturation = [1.0, 0.0, 0.0, 0.0]
        else:
            # sup of |tanh|, |tanh'|, |tanh''|, |tanh'''|
            tanh_sup = (1.0, 1.0, 0.7699, 2.0)
            saturation = [1.0] + [0.5 * tanh_sup[k] / self.scale ** k for k in (1, 2, 3)]
        return self.g0 * max(axial[i] * saturation[j]
                             for i in range(4) for j in range(4) if i + j <= 3)


class RadiusMapSpec(BaseModel):
    """Radius map H(y) from the NO concentration into [R1, R2]."""
    model_config = ConfigDict(frozen=True)

    kind: Literal["logistic", "constant"] = "logistic"
    c_star: float = Field(0.5, description="Concentration at the logistic midpoint")
    width: float = Field(1.0, gt=0.0, description="Logistic width")
    value: Optional[float] = Field(None, description="Radius for the constant map (defaults to R0)")


class BoundaryStressSpec(BaseModel):
    """Affine normal-stress data f_b = P_in + (P_out - P_in) x1 / L."""
    model_config = ConfigDict(frozen=True)

    p_in: float = 1.0
    p_out: float = 0.0

    def evaluate(self, points, L: float):
        x1 = np.asarray(points, dtype=float)[..., 0]
        return self.p_in + (self.p_out - self.p_in) * x1 / L

    def gradient(self, points, L: float):
        points = np.asarray(points, dtype=float)
        grad = np.zeros(points.shape)
        grad[..., 0] = (self.p_out - self.p_in) / L
        return grad


class InflowSpec(BaseModel):
    """Inflow temperature f_in on the fluid end faces."""
    model_config = ConfigDict(frozen=True)

    value: float = 1.0

    def evaluate(self, points, t: float = 0.0):
        return np.full(np.asarray(points).shape[:-1], self.value, dtype=float)


class InitialData(BaseModel):
    model_config = ConfigDict(frozen=True)

    c0: float = Field(0.5, description="Mean initial NO concentration")
    c0_amplitude: float = Field(0.0, description="cos(pi x1 / L) modulation of c0")
    theta_f0: float = Field(1.0, description="Initial fluid temperature")
    theta_s0: float = Field(1.0, description="Initial solid temperature")

    def concentration(self, x1, L: float):
        x1 = np.asarray(x1, dtype=float)
        return self.c0 + self.c0_amplitude * np.cos(np.pi * x1 / L)

    def concentration_dx1(self, x1, L: float):
        x1 = np.asarray(x1, dtype=float)
        return -self.c0_amplitude * np.pi / L * np.sin(np.pi * x1 / L)


class ModelParams(BaseModel):
    """Every constant and function family of the model."""
    model_config = ConfigDict(frozen=True)

    R1: float = 0.15
    R2: float = 0.35
    R0: float = 0.25
    delta: float = 0.04
    L: float = 1.0
    T_final: float = 1.0
    mu: float = 1.0
    k_deg: float = 1.0
    alpha: float = 1.0
    Kf: Matrix3 = IDENTITY3
    Ks: Matrix3 = IDENTITY3
    kernel: KernelSpec = KernelSpec()
    G: ProductionSpec = ProductionSpec()
    H: RadiusMapSpec = RadiusMapSpec()
    fb: BoundaryStressSpec = BoundaryStressSpec()
    fin: InflowSpec = InflowSpec()
    initial: InitialData = InitialData()

    @property
    def gamma(self) -> float:
        return self.kernel.gamma

    @property
    def Kf_matrix(self) -> np.ndarray:
        return np.array(self.Kf, dtype=float)

    @property
    def Ks_matrix(self) -> np.ndarray:
        return np.array(self.Ks, dtype=float)

    @property
    def z_band(self) -> Tuple[float, float]:
        """Radial band outside which the deformation is the identity."""
        return self.R1 - 3.0 * self.delta, self.R2 + 3.0 * self.delta

    def with_updates(self, **changes) -> "ModelParams":
        return self.model_copy(update=changes)
