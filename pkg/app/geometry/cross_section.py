"""
Butterfly cross-section of the box (-1/2, 1/2)^2: a structured core square,
an annular shell blending the square into the circle |x| = R0, and an outer
layer blending the circle into the box boundary.
"""
from dataclasses import dataclass

import numpy as np

from app.errors import MeshError


@dataclass(frozen=True)
class CrossSection:
    points: np.ndarray       # (n, 2)
    triangles: np.ndarray    # (t, 3), vertex ids ascending per row
    fluid: np.ndarray        # (t,) True inside the circle
    circle: np.ndarray       # (n_angular,) ids of the vertices on |x| = R0
    n_angular: int


def _perimeter_grid_index(k: np.ndarray, n_c: int):
    """Core grid (i, j) of perimeter point k, counterclockwise from corner (a, -a)."""
    side, m = np.divmod(k, n_c)
    i = np.select([side == 0, side == 1, side == 2], [n_c, n_c - m, 0], default=m)
    j = np.select([side == 0, side == 1, side == 2], [m, n_c, n_c - m], default=0)
    return i, j


def _split_quads(points: np.ndarray, quads: np.ndarray) -> np.ndarray:
    """Split quads along their shorter diagonal."""
    d02 = np.linalg.norm(points[quads[:, 0]] - points[quads[:, 2]], axis=1)
    d13 = np.linalg.norm(points[quads[:, 1]] - points[quads[:, 3]], axis=1)
    use02 = d02 <= d13 + 1e-12
    first = np.where(use02[:, None], quads[:, [0, 1, 2]], quads[:, [0, 1, 3]])
    second = np.where(use02[:, None], quads[:, [0, 2, 3]], quads[:, [1, 2, 3]])
    tris = np.empty((2 * len(quads), 3), dtype=np.int64)
    tris[0::2] = first
    tris[1::2] = second
    return tris


def build_cross_section(R0: float, n_angular: int, n_radial: int, n_outer: int) -> CrossSection:
    if n_angular < 8 or n_angular % 4 != 0:
        raise MeshError("n_angular must be a multiple of 4 and at least 8",
                        details={"n_angular": n_angular})
    if n_radial < 1 or n_outer < 1:
        raise MeshError("n_radial and n_outer must be at least 1",
                        details={"n_radial": n_radial, "n_outer": n_outer})

    n_c = n_angular // 4
    half = 0.5 * R0
    ticks = np.linspace(-half, half, n_c + 1)
    gi, gj = np.meshgrid(np.arange(n_c + 1), np.arange(n_c + 1), indexing="xy")
    core_points = np.column_stack([ticks[gi.ravel()], ticks[gj.ravel()]])

    k = np.arange(n_angular)
    pi_, pj_ = _perimeter_grid_index(k, n_c)
    square_ids = pj_ * (n_c + 1) + pi_
    square = core_points[square_ids]
    theta = -0.25 * np.pi + 2.0 * np.pi * k / n_angular
    circle = R0 * np.column_stack([np.cos(theta), np.sin(theta)])
    box = 0.5 * square / half

    layers = [square]
    for g in range(1, n_radial + 1):
        s = g / n_radial
        layers.append((1.0 - s) * square + s * circle)
    for g in range(1, n_outer + 1):
        s = g / n_outer
        layers.append((1.0 - s) * circle + s * box)

    n_core = (n_c + 1) ** 2
    points = np.vstack([core_points] + layers[1:])

    def ring_ids(g: int) -> np.ndarray:
        return square_ids if g == 0 else n_core + (g - 1) * n_angular + k

    quads, fluid = [], []
    ii, jj = np.meshgrid(np.arange(n_c), np.arange(n_c), indexing="xy")
    ii, jj = ii.ravel(), jj.ravel()
    base = jj * (n_c + 1) + ii
    quads.append(np.column_stack([base, base + 1, base + n_c + 2, base + n_c + 1]))
    fluid.append(np.ones(len(base), dtype=bool))
    for g in range(n_radial + n_outer):
        inner, outer = ring_ids(g), ring_ids(g + 1)
        nxt = np.roll(np.arange(n_angular), -1)
        quads.append(np.column_stack([inner, inner[nxt], outer[nxt], outer]))
        fluid.append(np.full(n_angular, g < n_radial))

    quads = np.vstack(quads)
    quad_fluid = np.concatenate(fluid)
    triangles = np.sort(_split_quads(points, quads), axis=1)
    return CrossSection(points=points, triangles=triangles,
                        fluid=np.repeat(quad_fluid, 2), circle=ring_ids(n_radial),
                        n_angular=n_angular)
