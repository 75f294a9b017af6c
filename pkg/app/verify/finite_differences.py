"""
Fourth-order central differences for vectorized functions of points.

A function maps points (N, 3) to values (N, ...); derivatives are appended
as a trailing axis of length 3.
"""
from typing import Callable

import numpy as np

_STENCIL = ((-2.0, 1.0), (-1.0, -8.0), (1.0, 8.0), (2.0, -1.0))


def fd_partial(func: Callable, points: np.ndarray, axis: int, h: float) -> np.ndarray:
    points = np.asarray(points, dtype=float)
    total = 0.0
    for shift, weight in _STENCIL:
        moved = points.copy()
        moved[:, axis] += shift * h
        total = total + weight * np.asarray(func(moved))
    return total / (12.0 * h)


def fd_gradient(func: Callable, points: np.ndarray, h: float = 1e-3) -> np.ndarray:
    return np.stack([fd_partial(func, points, axis, h) for axis in range(3)], axis=-1)


fd_jacobian = fd_gradient


def fd_divergence(func: Callable, points: np.ndarray, h: float = 1e-3, contract: int = -1) -> np.ndarray:
    """Contract the derivative direction with value axis `contract`.

    For a matrix field M, contract=-1 gives sum_k d_k M[:, i, k] and
    contract=0 gives sum_k d_k M[:, k, i].
    """
    jac = fd_gradient(func, points, h)
    n_value_axes = jac.ndim - 2
    value_axis = 1 + (contract % n_value_axes)
    moved = np.moveaxis(jac, value_axis, -2)
    return np.trace(moved, axis1=-2, axis2=-1)


def fd_time(func: Callable[[float], np.ndarray], t: float, h: float = 1e-3) -> np.ndarray:
    total = 0.0
    for shift, weight in _STENCIL:
        total = total + weight * np.asarray(func(t + shift * h))
    return total / (12.0 * h)
