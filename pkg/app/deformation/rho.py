"""
Radial profile rho(R, r) of the deformation, obtained by mollifying a
piecewise-linear profile with the standard bump scaled to width delta.

The piecewise-linear profile is affine in R, so the mollified one splits as
    rho(R, r) = r + (R - R0) m(r),
where m is the mollification of dR rho_bar. Only m and its first two
derivatives are tabulated; every partial derivative of rho follows from them.
"""
import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, Tuple

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import BPoly

from app.errors import InvariantViolation
from app.params.models import ModelParams

logger = logging.getLogger(__name__)

TABLE_TOL = 1e-8
_QUAD_KW = dict(epsabs=1e-14, epsrel=1e-13, limit=200)
_AXIS = 1e-12


def _raw_bump(u):
    u = np.asarray(u, dtype=float)
    inside = np.abs(u) < 1.0
    safe = np.where(inside, 1.0 - u * u, 1.0)
    return np.where(inside, np.exp(-1.0 / safe), 0.0)


@lru_cache(maxsize=1)
def bump_mass() -> float:
    mass, _ = quad(lambda u: float(_raw_bump(u)), -1.0, 1.0, **_QUAD_KW)
    return mass


def bump(u):
    """Standard mollifier with unit mass, supported on [-1, 1]."""
    return _raw_bump(u) / bump_mass()


@dataclass(frozen=True)
class Breakpoints:
    """Kinks s1 < s2 < s3 < s4 of the piecewise-linear profile."""
    s1: float
    s2: float
    s3: float
    s4: float
    rise: float   # slope of dR rho_bar on (s1, s2)
    fall: float   # minus its slope on (s3, s4)

    @classmethod
    def from_params(cls, params: ModelParams) -> "Breakpoints":
        R1, R2, R0, d = params.R1, params.R2, params.R0, params.delta
        return cls(s1=R1 - 2 * d, s2=R0 - d, s3=R0 + d, s4=R2 + 2 * d,
                   rise=1.0 / (R0 - R1 + d), fall=1.0 / (R2 - R0 + d))

    @property
    def kinks(self) -> Tuple[float, float, float, float]:
        return self.s1, self.s2, self.s3, self.s4

    @property
    def jumps(self) -> Tuple[float, float, float, float]:
        """Jumps of d/ds dR rho_bar at the kinks."""
        return self.rise, -self.rise, -self.fall, self.fall

    def dR_profile(self, s):
        s = np.asarray(s, dtype=float)
        up = np.clip((s - self.s1) * self.rise, 0.0, 1.0)
        down = np.clip((self.s4 - s) * self.fall, 0.0, 1.0)
        return np.minimum(up, down)

    def dR_profile_slope(self, s):
        s = np.asarray(s, dtype=float)
        return np.select([(s > self.s1) & (s < self.s2), (s > self.s3) & (s < self.s4)],
                         [self.rise, -self.fall], default=0.0)


def rho_bar(params: ModelParams, R: float, s):
    """The five-branch piecewise-linear profile before mollification."""
    R1, R2, R0, d = params.R1, params.R2, params.R0, params.delta
    s = np.asarray(s, dtype=float)
    branches = [
        s,
        (R - R1 + d) / (R0 - R1 + d) * (s - (R1 - 2 * d)) + R1 - 2 * d,
        (s - R0) + R,
        (R2 - R + d) / (R2 - R0 + d) * (s - (R2 + 2 * d)) + R2 + 2 * d,
        s,
    ]
    conditions = [s <= R1 - 2 * d, s <= R0 - d, s <= R0 + d, s <= R2 + 2 * d, np.ones_like(s, bool)]
    return np.select(conditions, branches)


def _kink_points(r: float, delta: float, kinks) -> list:
    return sorted(u for u in ((r - s) / delta for s in kinks) if -1.0 < u < 1.0)


def rho_by_quadrature(params: ModelParams, R: float, r: float) -> float:
    """Direct adaptive quadrature of the mollification; the reference for the table."""
    d = params.delta
    kinks = Breakpoints.from_params(params).kinks
    value, _ = quad(lambda u: float(rho_bar(params, R, r - d * u) * bump(u)), -1.0, 1.0,
                    points=_kink_points(r, d, kinks) or None, **_QUAD_KW)
    return value


@dataclass(frozen=True)
class RhoValues:
    rho: np.ndarray
    rho_R: np.ndarray
    rho_r: np.ndarray
    rho_RR: np.ndarray
    rho_Rr: np.ndarray
    rho_rr: np.ndarray
    rho_over_r: np.ndarray
    rho_R_over_r: np.ndarray


class QuadratureProfile:
    """m, m', m'' by adaptive quadrature at every query point."""

    def __init__(self, params: ModelParams):
        self.params = params
        self.breaks = Breakpoints.from_params(params)
        self.band = params.z_band
        self.R0 = params.R0
        self.c_rho = min(params.delta * self.breaks.rise, params.delta * self.breaks.fall)
        self.eta = self.c_rho * self.band[0] / self.band[1]

    def _terms_at(self, r: float) -> Tuple[float, float, float]:
        d = self.params.delta
        b = self.breaks
        points = _kink_points(r, d, b.kinks) or None
        m, _ = quad(lambda u: float(b.dR_profile(r - d * u) * bump(u)), -1.0, 1.0,
                    points=points, **_QUAD_KW)
        dm, _ = quad(lambda u: float(b.dR_profile_slope(r - d * u) * bump(u)), -1.0, 1.0,
                     points=points, **_QUAD_KW)
        d2m = sum(jump * float(bump((r - s) / d)) / d for s, jump in zip(b.kinks, b.jumps))
        return m, dm, d2m

    def terms(self, r):
        r = np.asarray(r, dtype=float)
        out = np.zeros((3,) + r.shape)
        flat = r.ravel()
        inside = np.flatnonzero((flat > self.band[0]) & (flat < self.band[1]))
        values = out.reshape(3, -1)
        for i in inside:
            values[:, i] = self._terms_at(flat[i])
        return out[0], out[1], out[2]

    def values(self, R, r) -> RhoValues:
        return rho_values(self, R, r)


@dataclass
class RhoTable:
    """Quintic Hermite interpolant of (m, m', m'') plus a tabulated (R, r) grid."""
    R1: float
    R2: float
    R0: float
    delta: float
    band: Tuple[float, float]
    r_nodes: np.ndarray
    m_nodes: np.ndarray
    spline: BPoly = field(repr=False)
    R_grid: np.ndarray = field(repr=False)
    r_grid: np.ndarray = field(repr=False)
    grid: Dict[str, np.ndarray] = field(repr=False)
    c_rho: float = 0.0
    eta: float = 0.0
    interpolation_degree: int = 5
    quadrature_tolerance: float = _QUAD_KW["epsabs"]

    def __post_init__(self):
        self._d1 = self.spline.derivative(1)
        self._d2 = self.spline.derivative(2)

    def terms(self, r):
        r = np.asarray(r, dtype=float)
        inside = (r > self.band[0]) & (r < self.band[1])
        clipped = np.clip(r, self.band[0], self.band[1])
        return (np.where(inside, self.spline(clipped), 0.0),
                np.where(inside, self._d1(clipped), 0.0),
                np.where(inside, self._d2(clipped), 0.0))

    def values(self, R, r) -> RhoValues:
        return rho_values(self, R, r)


def rho_values(profile, R, r) -> RhoValues:
    R = np.asarray(R, dtype=float)
    r = np.asarray(r, dtype=float)
    m, dm, d2m = profile.terms(r)
    shift = R - profile.R0
    rho = r + shift * m
    rho_r = 1.0 + shift * dm
    on_axis = r < _AXIS
    r_safe = np.where(on_axis, 1.0, r)
    return RhoValues(
        rho=rho,
        rho_R=m * np.ones_like(shift),
        rho_r=rho_r,
        rho_RR=np.zeros_like(rho),
        rho_Rr=dm * np.ones_like(shift),
        rho_rr=shift * d2m,
        rho_over_r=np.where(on_axis, rho_r, rho / r_safe),
        rho_R_over_r=np.where(on_axis, 0.0, m / r_safe) * np.ones_like(shift),
    )


def build_rho_table(params: ModelParams, n_R: int = 50, n_r: int = 400) -> RhoTable:
    """Tabulate rho on [R1, R2] x [0, 1/2] and check the structural properties."""
    exact = QuadratureProfile(params)
    lo, hi = params.z_band
    nodes = np.union1d(np.linspace(lo, hi, n_r + 1), [lo, params.R0, hi])
    m = np.zeros(len(nodes))
    dm = np.zeros(len(nodes))
    d2m = np.zeros(len(nodes))
    interior = (nodes > lo) & (nodes < hi)
    m[interior], dm[interior], d2m[interior] = exact.terms(nodes[interior])
    spline = BPoly.from_derivatives(nodes, np.column_stack([m, dm, d2m]))

    R_grid = np.linspace(params.R1, params.R2, n_R)
    r_grid = np.linspace(0.0, 0.5, n_r)
    table = RhoTable(R1=params.R1, R2=params.R2, R0=params.R0, delta=params.delta,
                     band=(lo, hi), r_nodes=nodes, m_nodes=m, spline=spline,
                     R_grid=R_grid, r_grid=r_grid, grid={})
    RR, rr = np.meshgrid(R_grid, r_grid, indexing="ij")
    values = rho_values(table, RR, rr)
    table.grid = {name: getattr(values, name) for name in
                  ("rho", "rho_R", "rho_r", "rho_RR", "rho_Rr", "rho_rr")}

    r_fine = np.union1d(nodes, r_grid)
    _, dm_fine, _ = table.terms(r_fine)
    table.c_rho = float(min(np.min(1.0 + (params.R1 - params.R0) * dm_fine),
                            np.min(1.0 + (params.R2 - params.R0) * dm_fine)))
    table.eta = table.c_rho * lo / hi

    checks = check_rho_table(table)
    failed = {name: value for name, (value, ok) in checks.items() if not ok}
    if failed:
        raise InvariantViolation("Radial profile table violates its structural properties", details=failed)
    logger.info(f"rho table built: {len(nodes)} nodes, c_rho={table.c_rho:.4f}, eta={table.eta:.4e}")
    return table


def check_rho_table(table: RhoTable) -> Dict[str, Tuple[float, bool]]:
    """rho(R, R0) = R, identity outside the band, and c_rho > 0."""
    R = table.R_grid
    at_R0 = table.values(R, np.full_like(R, table.R0))
    a11 = float(np.max(np.abs(at_R0.rho - R)))
    outside = (table.r_grid <= table.band[0]) | (table.r_grid >= table.band[1])
    rho = table.grid["rho"][:, outside]
    rho_r = table.grid["rho_r"][:, outside]
    a12 = float(max(np.max(np.abs(rho - table.r_grid[outside]), initial=0.0),
                    np.max(np.abs(rho_r - 1.0), initial=0.0)))
    return {
        "boundary_trace": (a11, a11 <= TABLE_TOL),
        "identity_outside": (a12, a12 <= 1e-10),
        "monotone": (table.c_rho, table.c_rho > 0.0),
    }


def table_error(table: RhoTable, params: ModelParams, n_samples: int = 50, seed: int = 0) -> float:
    """Max |rho_table - rho_quadrature| at random (R, r) in the band."""
    rng = np.random.default_rng(seed)
    R = rng.uniform(params.R1, params.R2, n_samples)
    r = rng.uniform(0.0, 0.5, n_samples)
    tabulated = table.values(R, r).rho
    reference = np.array([rho_by_quadrature(params, Ri, ri) for Ri, ri in zip(R, r)])
    return float(np.max(np.abs(tabulated - reference)))
