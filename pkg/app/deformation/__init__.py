# Deformation of the reference domain and the coefficients it induces
from app.deformation.coefficients import Deformation, DeformationEval, deformed_volume
from app.deformation.radius import (
    ConstantRadius,
    HermiteProfile,
    RadiusProfile,
    TravelingWaveRadius,
)
from app.deformation.rho import (
    QuadratureProfile,
    RhoTable,
    build_rho_table,
    rho_by_quadrature,
)
from app.deformation.table_cache import RhoTableCache

__all__ = [
    "ConstantRadius",
    "Deformation",
    "DeformationEval",
    "HermiteProfile",
    "QuadratureProfile",
    "RadiusProfile",
    "RhoTable",
    "RhoTableCache",
    "TravelingWaveRadius",
    "build_rho_table",
    "deformed_volume",
    "rho_by_quadrature",
]
