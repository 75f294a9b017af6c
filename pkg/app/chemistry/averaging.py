"""
Two-stage averaging of the solid temperature: a spatial mean T1(t) over the
reference solid domain followed by a causal convolution with K_gamma.
"""
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from app.errors import HistoryGapError
from app.fem.quadrature import gauss_legendre
from app.geometry.mesh import SubMesh
from app.params.models import KernelSpec

logger = logging.getLogger(__name__)

_TIME_TOL = 1e-12
# exact for the degree-4 kernel times a linear T1 on each piece
_GAUSS_POINTS = 3


def spatial_average(theta_s: np.ndarray, submesh: SubMesh,
                    weights: Optional[np.ndarray] = None) -> float:
    """Mean of a P1 field over the reference solid domain (no J weight)."""
    if weights is None:
        weights = submesh.vertex_volumes()
    return float(weights @ np.asarray(theta_s, dtype=float) / weights.sum())


@dataclass(frozen=True)
class AveragedHistory:
    """T1 samples at ascending times t0 = 0 < t1 < ...; constant plateau for t <= 0."""
    times: np.ndarray
    values: np.ndarray
    plateau: float
    kernel: KernelSpec

    @classmethod
    def start(cls, kernel: KernelSpec, plateau: float) -> "AveragedHistory":
        return cls(times=np.array([0.0]), values=np.array([float(plateau)]),
                   plateau=float(plateau), kernel=kernel)

    @property
    def last_time(self) -> float:
        return float(self.times[-1])

    def extended(self, t: float, value: float) -> "AveragedHistory":
        """New history with T1(t) = value; replaces the last sample if t is its time."""
        if abs(t - self.last_time) <= _TIME_TOL:
            values = self.values.copy()
            values[-1] = value
            return AveragedHistory(self.times.copy(), values, self.plateau, self.kernel)
        if t < self.last_time:
            raise HistoryGapError("History is append-only",
                                  details={"t": t, "last_time": self.last_time})
        return AveragedHistory(np.append(self.times, t), np.append(self.values, value),
                               self.plateau, self.kernel)

    def truncated(self, t: float) -> "AveragedHistory":
        keep = self.times <= t + _TIME_TOL
        return AveragedHistory(self.times[keep], self.values[keep], self.plateau, self.kernel)

    def T1(self, s):
        s = np.asarray(s, dtype=float)
        if np.any(s > self.last_time + _TIME_TOL):
            raise HistoryGapError("T1 requested beyond the stored history",
                                  details={"t": float(np.max(s)), "last_time": self.last_time})
        inside = np.interp(s, self.times, self.values)
        return np.where(s <= 0.0, self.plateau, inside)


def temporal_convolve(history: AveragedHistory, t: float) -> float:
    """(K_gamma * T1)(t) by Gauss-Legendre on the pieces where T1 is linear."""
    gamma = history.kernel.gamma
    if t > history.last_time + _TIME_TOL:
        raise HistoryGapError("History gap inside the averaging window",
                              details={"t": t, "last_time": history.last_time, "gamma": gamma})
    lo, hi = t - gamma, t
    inner = history.times[(history.times > lo) & (history.times < hi)]
    breaks = np.unique(np.concatenate([[lo, hi], inner, [0.0] if lo < 0.0 < hi else []]))
    total = 0.0
    for a, b in zip(breaks[:-1], breaks[1:]):
        s, w = gauss_legendre(_GAUSS_POINTS, a, b)
        total += float(np.sum(w * history.kernel.evaluate(t - s) * history.T1(s)))
    return total


def averaged_series(history: AveragedHistory, times) -> np.ndarray:
    return np.array([temporal_convolve(history, float(t)) for t in np.asarray(times, dtype=float)])


def lipschitz_estimate(first: AveragedHistory, second: AveragedHistory, times) -> dict:
    """Ratio of sup |T(first) - T(second)| to the L2-in-time distance of T1.

    For spatially uniform perturbations the L2(L2) distance of theta_s is
    |Omega_s|^(1/2) times the returned L2 norm of the T1 difference.
    """
    times = np.asarray(times, dtype=float)
    diff_T = np.abs(averaged_series(first, times) - averaged_series(second, times))
    nodes = np.union1d(first.times, second.times)
    nodes = nodes[nodes <= times[-1] + _TIME_TOL]
    delta = first.T1(nodes) - second.T1(nodes)
    # exact L2 norm of the piecewise-linear difference
    h = np.diff(nodes)
    l2_sq = float(np.sum(h * (delta[:-1] ** 2 + delta[:-1] * delta[1:] + delta[1:] ** 2) / 3.0))
    l2 = np.sqrt(l2_sq)
    sup = float(diff_T.max(initial=0.0))
    ratio = sup / l2 if l2 > 0.0 else 0.0
    kernel_l2 = float(np.sqrt(30.0 ** 2 / 630.0 / first.kernel.gamma))
    return {"sup_T": sup, "l2_T1": l2, "ratio": ratio, "kernel_l2": kernel_l2}
