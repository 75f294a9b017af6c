"""
Deformation S(t, x) = (x1, rho(R(t, x1), |xbar|) xbar / |xbar|) and the
coefficients it induces on the reference domain.

All evaluations are vectorized over arrays of points with trailing dimension 3.
"""
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from app.errors import DeformationError
from app.fem.assembly import cell_quadrature
from app.fem.quadrature import tet_rule
from app.params.models import ModelParams

logger = logging.getLogger(__name__)

_AXIS = 1e-12


@dataclass(frozen=True)
class DeformationEval:
    """Coefficients at a batch of reference points (leading shape N)."""
    S: np.ndarray       # (N, 3)
    F: np.ndarray       # (N, 3, 3)
    J: np.ndarray       # (N,)
    A: np.ndarray       # (N, 3, 3), A = J F^-1
    Finv: np.ndarray    # (N, 3, 3)
    K: Optional[np.ndarray]  # (N, 3, 3), J F^-1 K F^-T
    v_b: np.ndarray     # (N, 3)
    Dv_b: np.ndarray    # (N, 3, 3), rows are components
    dJdt: np.ndarray    # (N,)

    def min_eigenvalue_K(self) -> float:
        if self.K is None:
            return float("nan")
        sym = 0.5 * (self.K + np.swapaxes(self.K, -1, -2))
        return float(np.min(np.linalg.eigvalsh(sym)))


@dataclass(frozen=True)
class _Kinematics:
    x1: np.ndarray
    xbar: np.ndarray
    e: np.ndarray
    radial: np.ndarray       # e e^T
    R: np.ndarray
    R_x: np.ndarray
    R_t: np.ndarray
    R_tx: np.ndarray
    rho: object


class Deformation:
    """Evaluates S and its derived coefficients for a given radial profile backend."""

    def __init__(self, params: ModelParams, profile, check_jacobian: bool = True):
        self.params = params
        self.profile = profile
        self.check_jacobian = check_jacobian

    @property
    def eta(self) -> float:
        return self.profile.eta

    def _kinematics(self, t: float, points, radius_field) -> _Kinematics:
        points = np.asarray(points, dtype=float).reshape(-1, 3)
        xbar = points[:, 1:]
        r = np.linalg.norm(xbar, axis=1)
        on_axis = r < _AXIS
        e = np.where(on_axis[:, None], np.array([1.0, 0.0]),
                     xbar / np.where(on_axis, 1.0, r)[:, None])
        R, R_x, R_t, R_tx = radius_field.at(t).values(points[:, 0])
        return _Kinematics(x1=points[:, 0], xbar=xbar, e=e,
                           radial=np.einsum("ni,nj->nij", e, e),
                           R=R, R_x=R_x, R_t=R_t, R_tx=R_tx,
                           rho=self.profile.values(R, r))

    def eval_S(self, t: float, points, radius_field) -> np.ndarray:
        kin = self._kinematics(t, points, radius_field)
        S = np.empty((len(kin.x1), 3))
        S[:, 0] = kin.x1
        S[:, 1:] = kin.rho.rho_over_r[:, None] * kin.xbar
        return S

    def eval_coeffs(self, t: float, points, radius_field, side: Optional[str] = None) -> DeformationEval:
        """Closed-form F, J, A, K^F, v_b, grad v_b and dJ/dt.

        `side` is "fluid" or "solid" and selects the conductivity; None skips K^F.
        """
        kin = self._kinematics(t, points, radius_field)
        rho = kin.rho
        n = len(kin.x1)
        eye2 = np.eye(2)

        S = np.empty((n, 3))
        S[:, 0] = kin.x1
        S[:, 1:] = rho.rho_over_r[:, None] * kin.xbar

        F = np.zeros((n, 3, 3))
        F[:, 0, 0] = 1.0
        F[:, 1:, 0] = (rho.rho_R * kin.R_x)[:, None] * kin.e
        F[:, 1:, 1:] = (rho.rho_over_r[:, None, None] * eye2
                        + (rho.rho_r - rho.rho_over_r)[:, None, None] * kin.radial)
        J = rho.rho_r * rho.rho_over_r

        A = np.zeros((n, 3, 3))
        A[:, 0, 0] = J
        A[:, 1:, 0] = -(rho.rho_over_r * rho.rho_R * kin.R_x)[:, None] * kin.e
        A[:, 1:, 1:] = (rho.rho_r[:, None, None] * eye2
                        + (rho.rho_over_r - rho.rho_r)[:, None, None] * kin.radial)

        if self.check_jacobian and n and np.min(J) < 0.5 * self.eta:
            worst = int(np.argmin(J))
            raise DeformationError(
                "Jacobian dropped below eta/2",
                details={"J_min": float(J[worst]), "eta": self.eta, "t": t,
                         "point": np.asarray(points, dtype=float).reshape(-1, 3)[worst].tolist()},
            )

        Finv = A / J[:, None, None]
        K = None
        if side is not None:
            conductivity = self.params.Kf_matrix if side == "fluid" else self.params.Ks_matrix
            K = np.einsum("nij,jk,nlk->nil", A, conductivity, A) / J[:, None, None]

        v_b = np.zeros((n, 3))
        v_b[:, 1:] = (rho.rho_R * kin.R_t)[:, None] * kin.e

        Dv_b = np.zeros((n, 3, 3))
        Dv_b[:, 1:, 0] = (rho.rho_R * kin.R_tx)[:, None] * kin.e
        Dv_b[:, 1:, 1:] = kin.R_t[:, None, None] * (
            rho.rho_R_over_r[:, None, None] * eye2
            + (rho.rho_Rr - rho.rho_R_over_r)[:, None, None] * kin.radial)
        dJdt = kin.R_t * (rho.rho_Rr * rho.rho_over_r + rho.rho_r * rho.rho_R_over_r)

        return DeformationEval(S=S, F=F, J=J, A=A, Finv=Finv, K=K, v_b=v_b, Dv_b=Dv_b, dJdt=dJdt)

    def interface_factor(self, t: float, x1, radius_field):
        """Surface-measure factor J |F^-T n| on the interface, (R / R0) sqrt(R_x^2 + 1)."""
        R, R_x, _, _ = radius_field.at(t).values(np.asarray(x1, dtype=float))
        return R / self.params.R0 * np.sqrt(R_x ** 2 + 1.0)

    def generic_interface_factor(self, t: float, points, radius_field):
        """|A^T n| with n the outward radial normal; used to cross-check interface_factor."""
        points = np.asarray(points, dtype=float).reshape(-1, 3)
        coeffs = self.eval_coeffs(t, points, radius_field)
        normal = np.zeros_like(points)
        r = np.linalg.norm(points[:, 1:], axis=1)
        normal[:, 1:] = points[:, 1:] / r[:, None]
        return np.linalg.norm(np.einsum("nji,nj->ni", coeffs.A, normal), axis=1)

    def jacobian_floor(self, t: float, points, radius_field) -> float:
        return float(np.min(self.eval_coeffs(t, points, radius_field).J))


def deformed_volume(deformation: Deformation, t: float, submesh, radius_field, degree: int = 4) -> float:
    """Volume of S(t, submesh), the integral of J over the reference cells."""
    cq = cell_quadrature(submesh.vertices, submesh.cells, tet_rule(degree))
    J = deformation.eval_coeffs(t, cq.points.reshape(-1, 3), radius_field).J
    return float(np.sum(cq.jxw.ravel() * J))
