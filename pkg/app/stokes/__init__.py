# Transformed quasi-stationary Stokes problem (Taylor-Hood P2/P1)
from app.stokes.postprocess import (
    PhysicalFlow, flow_rates, infsup_estimate, momentum_boundary_residual,
    poiseuille_flow_rate, reconstruct_physical,
)
from app.stokes.solver import StokesSolution, mass_balance_residual, solve_stokes
from app.stokes.system import (
    StokesSource, StokesSpace, StokesSystem, assemble_stokes, build_stokes_space,
)

__all__ = [
    "PhysicalFlow", "StokesSolution", "StokesSource", "StokesSpace", "StokesSystem",
    "assemble_stokes", "build_stokes_space", "flow_rates", "infsup_estimate",
    "mass_balance_residual", "momentum_boundary_residual", "poiseuille_flow_rate",
    "reconstruct_physical", "solve_stokes",
]
