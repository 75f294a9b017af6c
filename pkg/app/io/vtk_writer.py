"""
Legacy VTK (ASCII, format 4.2) snapshots through meshio.

Points are written at their deformed position S(t, x) so the files show the
physical configuration.
"""
import logging
from pathlib import Path
from typing import Dict, Optional

import meshio
import numpy as np

from app.geometry.mesh import ReferenceMesh
from app.io.atomic import PathLike, atomic_path

logger = logging.getLogger(__name__)

VTK_VERSION = "4.2"


def write_vtk(path: PathLike, points: np.ndarray, cells: np.ndarray,
              point_data: Optional[Dict[str, np.ndarray]] = None,
              cell_data: Optional[Dict[str, np.ndarray]] = None) -> Path:
    mesh = meshio.Mesh(
        points=np.asarray(points, dtype=np.float64),
        cells=[("tetra", np.asarray(cells, dtype=np.int64))],
        point_data={k: np.asarray(v, dtype=np.float64) for k, v in (point_data or {}).items()},
        cell_data={k: [np.asarray(v, dtype=np.float64)] for k, v in (cell_data or {}).items()},
    )
    with atomic_path(path, suffix=".vtk") as tmp:
        meshio.vtk.write(tmp, mesh, fmt_version=VTK_VERSION, binary=False)
    return Path(path)


def read_vtk(path: PathLike) -> meshio.Mesh:
    return meshio.read(path, file_format="vtk")


def export_vtk(mesh: ReferenceMesh, path: PathLike) -> Path:
    """Reference mesh with the fluid/solid cell tag."""
    return write_vtk(path, mesh.vertices, mesh.cells, cell_data={"tag": mesh.cell_tags})


def write_snapshot(directory: PathLike, step: int, t: float, mesh: ReferenceMesh, deformation,
                   radius_field, transport_state, stokes_solution=None, params=None) -> Dict[str, Path]:
    """fluid_XXXX.vtk and solid_XXXX.vtk on the deformed configuration."""
    directory = Path(directory)
    written = {}
    fluid = mesh.fluid
    coeffs = deformation.eval_coeffs(t, fluid.vertices, radius_field)
    point_data = {"theta": transport_state.theta_f}
    if stokes_solution is not None:
        n_v = fluid.n_vertices
        point_data["v"] = stokes_solution.w[:n_v] + coeffs.v_b
        point_data["w"] = stokes_solution.w[:n_v]
        if params is not None:
            point_data["p"] = stokes_solution.q + params.fb.evaluate(fluid.vertices, params.L)
    written["fluid"] = write_vtk(directory / f"fluid_{step:04d}.vtk", coeffs.S, fluid.cells, point_data)

    solid = mesh.solid
    S_solid = deformation.eval_S(t, solid.vertices, radius_field)
    written["solid"] = write_vtk(directory / f"solid_{step:04d}.vtk", S_solid, solid.cells,
                                 {"theta": transport_state.theta_s})
    logger.debug(f"Snapshot {step} at t={t:.4f} written to {directory}")
    return written
