"""
Vessel radius fields R(t, x1).

A field is queried in two steps: `field.at(t)` freezes the time and returns a
profile, and `profile.values(x1)` returns (R, dR/dx1, dR/dt, d2R/dtdx1).
"""
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import CubicHermiteSpline

RadiusValues = Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]


class RadiusProfile:
    """A radius field frozen at one time."""

    def values(self, x1) -> RadiusValues:
        raise NotImplementedError

    def radius(self, x1):
        return self.values(x1)[0]

    def bounds(self, L: float, n: int = 201) -> Tuple[float, float, float]:
        """(min, mean, max) of R over a uniform x1 sample."""
        R = self.radius(np.linspace(0.0, L, n))
        return float(R.min()), float(R.mean()), float(R.max())

    def deformed_volume(self, L: float) -> float:
        """Volume of the deformed vessel, integral of pi R^2 over [0, L]."""
        value, _ = quad(lambda x: float(np.pi * self.radius(np.array([x]))[0] ** 2), 0.0, L,
                        epsabs=1e-12, epsrel=1e-12, limit=200)
        return value


@dataclass(frozen=True)
class ConstantProfile(RadiusProfile):
    value: float

    def values(self, x1) -> RadiusValues:
        x1 = np.asarray(x1, dtype=float)
        zero = np.zeros_like(x1)
        return np.full_like(x1, self.value), zero, zero.copy(), zero.copy()


@dataclass(frozen=True)
class ConstantRadius:
    value: float

    def at(self, t: float) -> ConstantProfile:
        return ConstantProfile(self.value)


@dataclass(frozen=True)
class TravelingWaveProfile(RadiusProfile):
    base: float
    amplitude: float
    wavenumber: float
    frequency: float
    t: float

    def values(self, x1) -> RadiusValues:
        phase = self.wavenumber * np.asarray(x1, dtype=float) - self.frequency * self.t
        scale = self.base * self.amplitude
        R = self.base + scale * np.sin(phase)
        R_x = scale * self.wavenumber * np.cos(phase)
        R_t = -scale * self.frequency * np.cos(phase)
        R_tx = scale * self.wavenumber * self.frequency * np.sin(phase)
        return R, R_x, R_t, R_tx


@dataclass(frozen=True)
class TravelingWaveRadius:
    """R = base (1 + amplitude sin(k x1 - w t))."""
    base: float
    amplitude: float
    wavenumber: float = 1.0
    frequency: float = 0.0

    def at(self, t: float) -> TravelingWaveProfile:
        return TravelingWaveProfile(self.base, self.amplitude, self.wavenumber, self.frequency, t)


class HermiteProfile(RadiusProfile):
    """Radius sampled on an axial grid, C1 cubic Hermite in x1."""

    def __init__(self, x_nodes, R, R_x, R_t, R_tx):
        self.x_nodes = np.asarray(x_nodes, dtype=float)
        self.nodal = tuple(np.asarray(a, dtype=float) for a in (R, R_x, R_t, R_tx))
        self._R = CubicHermiteSpline(self.x_nodes, self.nodal[0], self.nodal[1])
        self._R_t = CubicHermiteSpline(self.x_nodes, self.nodal[2], self.nodal[3])
        self._R_x = self._R.derivative()
        self._R_tx = self._R_t.derivative()

    def values(self, x1) -> RadiusValues:
        x1 = np.clip(np.asarray(x1, dtype=float), self.x_nodes[0], self.x_nodes[-1])
        return self._R(x1), self._R_x(x1), self._R_t(x1), self._R_tx(x1)
