# Reference mesh generation, tagging and quality
from app.geometry.mesh import (
    FLUID, GAMMA_D, GAMMA_F, GAMMA_N, SIGMA, SOLID, FacetSet, ReferenceMesh, Resolution, SubMesh,
    build_reference_mesh, interface_pairs,
)

__all__ = [
    "FLUID", "GAMMA_D", "GAMMA_F", "GAMMA_N", "SIGMA", "SOLID", "FacetSet", "ReferenceMesh",
    "Resolution", "SubMesh", "build_reference_mesh", "interface_pairs",
]
