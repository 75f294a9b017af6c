"""
CSV outputs: the per-step time series and tabular dumps of the deformation.
"""
import logging
from typing import Dict, List

import numpy as np
import pandas as pd

from app.io.atomic import PathLike, atomic_path

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"
TIME_SERIES_COLUMNS = ["t", "T1", "T", "R_min", "R_mean", "R_max", "Q_in", "Q_out",
                       "interface_flux", "outlet_flux", "energy"]


def write_frame(frame: pd.DataFrame, path: PathLike) -> None:
    with atomic_path(path, suffix=".csv") as tmp:
        frame.to_csv(tmp, index=False, float_format=FLOAT_FORMAT)


class TimeSeriesWriter:
    """Collects one row per committed step and rewrites the CSV atomically."""

    def __init__(self, path: PathLike, columns: List[str] = None):
        self.path = path
        self.columns = list(columns or TIME_SERIES_COLUMNS)
        self.rows: List[Dict[str, float]] = []

    def append(self, row: Dict[str, float]) -> None:
        missing = [c for c in self.columns if c not in row]
        if missing:
            raise KeyError(f"Time-series row lacks columns {missing}")
        self.rows.append({c: float(row[c]) for c in self.columns})

    def frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.rows, columns=self.columns)

    def flush(self) -> None:
        write_frame(self.frame(), self.path)


def read_time_series(path: PathLike) -> pd.DataFrame:
    return pd.read_csv(path, float_precision="round_trip")


def dump_rho_table(table, path: PathLike) -> None:
    """Long-format dump of the tabulated (R, r) grid."""
    RR, rr = np.meshgrid(table.R_grid, table.r_grid, indexing="ij")
    frame = pd.DataFrame({"R": RR.ravel(), "r": rr.ravel()})
    for name, values in table.grid.items():
        frame[name] = values.ravel()
    write_frame(frame, path)


def dump_probe_line(deformation, t: float, radius_field, path: PathLike, x1: float = 0.5,
                    angle: float = 0.0, n: int = 201) -> None:
    """Coefficients along the ray x = (x1, r cos(angle), r sin(angle)), r in [0, 1/2]."""
    r = np.linspace(0.0, 0.5, n)
    points = np.column_stack([np.full(n, x1), r * np.cos(angle), r * np.sin(angle)])
    coeffs = deformation.eval_coeffs(t, points, radius_field, side="solid")
    frame = pd.DataFrame({
        "r": r,
        "S_r": np.linalg.norm(coeffs.S[:, 1:], axis=1),
        "J": coeffs.J,
        "v_b_r": np.einsum("ni,ni->n", coeffs.v_b[:, 1:], points[:, 1:] / np.maximum(r, 1e-300)[:, None]),
        "dJdt": coeffs.dJdt,
        "K_min_eig": np.linalg.eigvalsh(0.5 * (coeffs.K + np.swapaxes(coeffs.K, 1, 2)))[:, 0],
    })
    write_frame(frame, path)
