"""
Collapsed Gauss-Jacobi quadrature on the reference tetrahedron and triangle.

Points are returned in barycentric coordinates so the same rule serves P1
and P2 evaluation and face integrals embedded in a cell.
"""
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi, roots_legendre


@dataclass(frozen=True)
class QuadratureRule:
    """Barycentric points (Q, d+1) and weights summing to the reference measure."""
    points: np.ndarray
    weights: np.ndarray
    degree: int

    @property
    def size(self) -> int:
        return len(self.weights)


def _unit_interval(n: int, alpha: int):
    """Gauss-Jacobi on [0, 1] with weight (1 - s)^alpha."""
    if alpha == 0:
        nodes, weights = roots_legendre(n)
    else:
        nodes, weights = roots_jacobi(n, alpha, 0)
    return 0.5 * (nodes + 1.0), weights / 2.0 ** (alpha + 1)


def _points_per_direction(degree: int) -> int:
    return max(1, int(np.ceil((degree + 1) / 2.0)))


@lru_cache(maxsize=None)
def tet_rule(degree: int) -> QuadratureRule:
    """Exact for polynomials of total degree <= degree; weights sum to 1/6."""
    n = _points_per_direction(degree)
    u, wu = _unit_interval(n, 0)
    v, wv = _unit_interval(n, 1)
    w, ww = _unit_interval(n, 2)
    U, V, W = np.meshgrid(u, v, w, indexing="ij")
    weights = np.einsum("i,j,k->ijk", wu, wv, ww).ravel()
    zeta = W.ravel()
    eta = (V * (1.0 - W)).ravel()
    xi = (U * (1.0 - V) * (1.0 - W)).ravel()
    bary = np.column_stack([1.0 - xi - eta - zeta, xi, eta, zeta])
    return QuadratureRule(points=bary, weights=weights, degree=degree)


@lru_cache(maxsize=None)
def triangle_rule(degree: int) -> QuadratureRule:
    """Exact for polynomials of total degree <= degree; weights sum to 1/2."""
    n = _points_per_direction(degree)
    u, wu = _unit_interval(n, 0)
    v, wv = _unit_interval(n, 1)
    U, V = np.meshgrid(u, v, indexing="ij")
    weights = np.outer(wu, wv).ravel()
    eta = V.ravel()
    xi = (U * (1.0 - V)).ravel()
    bary = np.column_stack([1.0 - xi - eta, xi, eta])
    return QuadratureRule(points=bary, weights=weights, degree=degree)


def gauss_legendre(n: int, a: float, b: float):
    nodes, weights = roots_legendre(n)
    half = 0.5 * (b - a)
    return a + half * (nodes + 1.0), half * weights
