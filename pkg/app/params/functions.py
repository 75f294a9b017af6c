"""
Pointwise evaluation of the production function G and the radius map H.
"""
import numpy as np
from scipy.special import expit

from app.errors import ParameterError
from app.params.models import ModelParams

_X1_TOL = 1e-12


def _checked_x1(params: ModelParams, x1):
    x1 = np.asarray(x1, dtype=float)
    if np.any(x1 < -_X1_TOL) or np.any(x1 > params.L + _X1_TOL):
        raise ParameterError(
            "x1 outside [0, L]",
            details={"L": params.L, "min": float(np.min(x1)), "max": float(np.max(x1))},
        )
    return x1


def eval_G(params: ModelParams, x1, y):
    x1 = _checked_x1(params, x1)
    spec = params.G
    return spec.g0 * spec.axial_profile(x1, params.L) * spec.saturation(y)


def eval_G_dx1(params: ModelParams, x1, y):
    x1 = _checked_x1(params, x1)
    spec = params.G
    return spec.g0 * spec.axial_profile_dx1(x1, params.L) * spec.saturation(y)


def eval_G_dy(params: ModelParams, x1, y):
    x1 = _checked_x1(params, x1)
    spec = params.G
    return spec.g0 * spec.axial_profile(x1, params.L) * spec.saturation_dy(y)


def _logistic(params: ModelParams, y):
    spec = params.H
    return expit((np.asarray(y, dtype=float) - spec.c_star) / spec.width)


def _constant_radius(params: ModelParams) -> float:
    return params.R0 if params.H.value is None else params.H.value


def eval_H(params: ModelParams, y):
    y = np.asarray(y, dtype=float)
    if params.H.kind == "constant":
        return np.full(y.shape, _constant_radius(params))
    sigma = _logistic(params, y)
    return np.clip(params.R1 + (params.R2 - params.R1) * sigma, params.R1, params.R2)


def eval_H_deriv(params: ModelParams, y):
    y = np.asarray(y, dtype=float)
    if params.H.kind == "constant":
        return np.zeros(y.shape)
    sigma = _logistic(params, y)
    return (params.R2 - params.R1) * sigma * (1.0 - sigma) / params.H.width


def eval_H_second(params: ModelParams, y):
    y = np.asarray(y, dtype=float)
    if params.H.kind == "constant":
        return np.zeros(y.shape)
    sigma = _logistic(params, y)
    return ((params.R2 - params.R1) * sigma * (1.0 - sigma) * (1.0 - 2.0 * sigma)
            / params.H.width ** 2)


def radius_bound(params: ModelParams) -> float:
    """C_H: sup of |H'|, |H''|, |H'''| in closed form."""
    if params.H.kind == "constant":
        return 0.0
    w = params.H.width
    # sup of the first three derivatives of the standard logistic
    return (params.R2 - params.R1) * max(0.25 / w, 0.0962 / w ** 2, 0.125 / w ** 3)


def production_bound(params: ModelParams) -> float:
    return params.G.bound(params.L)
