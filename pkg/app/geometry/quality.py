"""
Cell quality measures.
"""
import numpy as np

from app.fem.elements import P2_EDGES, TET_FACES


def _outward_normals(coords: np.ndarray) -> np.ndarray:
    normals = np.empty((coords.shape[0], 4, 3))
    for i, (a, b, c) in enumerate(TET_FACES):
        n = np.cross(coords[:, b] - coords[:, a], coords[:, c] - coords[:, a])
        flip = np.einsum("cd,cd->c", n, coords[:, i] - coords[:, a]) > 0.0
        n[flip] *= -1.0
        normals[:, i] = n / np.linalg.norm(n, axis=1)[:, None]
    return normals


def min_dihedral_angles(coords: np.ndarray) -> np.ndarray:
    """Smallest interior dihedral angle (radians) of each tetrahedron (C, 4, 3)."""
    normals = _outward_normals(np.asarray(coords, dtype=float))
    angles = []
    for a, b in P2_EDGES:
        c, d = (k for k in range(4) if k not in (a, b))
        cosine = np.einsum("cd,cd->c", normals[:, c], normals[:, d])
        angles.append(np.pi - np.arccos(np.clip(cosine, -1.0, 1.0)))
    return np.min(np.stack(angles, axis=1), axis=1)
