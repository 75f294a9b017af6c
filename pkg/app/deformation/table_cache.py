"""
Per-process cache of radial profile tables to avoid rebuilding them.
"""
import os
import logging
from typing import Dict, Tuple

from app.deformation.rho import RhoTable, build_rho_table
from app.params.models import ModelParams

logger = logging.getLogger(__name__)


class RhoTableCache:
    _tables: Dict[Tuple, RhoTable] = {}
    _pid = None

    @staticmethod
    def key(params: ModelParams, n_R: int, n_r: int) -> Tuple:
        return (params.R1, params.R2, params.R0, params.delta, n_R, n_r)

    @classmethod
    def get_table(cls, params: ModelParams, n_R: int = 50, n_r: int = 400) -> RhoTable:
        current_pid = os.getpid()

        # A forked worker starts with an empty cache
        if cls._pid != current_pid:
            cls._tables = {}
            cls._pid = current_pid

        key = cls.key(params, n_R, n_r)
        if key not in cls._tables:
            logger.info(f"Building rho table for process {current_pid}: {key}")
            cls._tables[key] = build_rho_table(params, n_R=n_R, n_r=n_r)
        return cls._tables[key]

    @classmethod
    def clear(cls):
        cls._tables = {}
