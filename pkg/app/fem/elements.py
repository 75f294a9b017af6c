"""
Lagrange P1 and P2 bases on tetrahedra, written in barycentric coordinates.
"""
import numpy as np

from app.errors import MeshError

# local face i is opposite local vertex i
TET_FACES = ((1, 2, 3), (0, 2, 3), (0, 1, 3), (0, 1, 2))
# P2 edge nodes follow the vertex nodes in this order
P2_EDGES = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))


def p1_values(bary: np.ndarray) -> np.ndarray:
    return np.asarray(bary, dtype=float)


def p2_values(bary: np.ndarray) -> np.ndarray:
    bary = np.asarray(bary, dtype=float)
    vertex = bary * (2.0 * bary - 1.0)
    edge = np.stack([4.0 * bary[..., a] * bary[..., b] for a, b in P2_EDGES], axis=-1)
    return np.concatenate([vertex, edge], axis=-1)


def p2_bary_derivatives(bary: np.ndarray) -> np.ndarray:
    """dN_a / dlambda_k, shape (..., 10, 4)."""
    bary = np.asarray(bary, dtype=float)
    out = np.zeros(bary.shape[:-1] + (10, 4))
    for i in range(4):
        out[..., i, i] = 4.0 * bary[..., i] - 1.0
    for e, (a, b) in enumerate(P2_EDGES):
        out[..., 4 + e, a] = 4.0 * bary[..., b]
        out[..., 4 + e, b] = 4.0 * bary[..., a]
    return out


def tet_geometry(coords: np.ndarray):
    """Barycentric gradients (C, 4, 3) and signed volumes (C,) of tetrahedra (C, 4, 3)."""
    coords = np.asarray(coords, dtype=float)
    edges = coords[:, 1:, :] - coords[:, :1, :]
    jac = np.transpose(edges, (0, 2, 1))
    det = np.linalg.det(jac)
    if np.any(np.abs(det) <= 1e-300):
        raise MeshError("Degenerate tetrahedron in element geometry")
    inv = np.linalg.inv(jac)
    grads = np.empty((coords.shape[0], 4, 3))
    grads[:, 1:, :] = inv
    grads[:, 0, :] = -inv.sum(axis=1)
    return grads, det / 6.0


def physical_points(coords: np.ndarray, bary: np.ndarray) -> np.ndarray:
    """Map barycentric points (Q, 4) or per-cell (C, Q, 4) into cells (C, 4, 3)."""
    if bary.ndim == 2:
        return np.einsum("qk,ckd->cqd", bary, coords)
    return np.einsum("cqk,ckd->cqd", bary, coords)


def p2_gradients(bary: np.ndarray, bary_grads: np.ndarray) -> np.ndarray:
    """Physical P2 gradients (C, Q, 10, 3) from barycentric points (Q, 4)."""
    dN = p2_bary_derivatives(bary)
    return np.einsum("qak,ckd->cqad", dN, bary_grads)
