# NO chemistry: temperature averaging, concentration ODE and vessel radius
from app.chemistry.averaging import (
    AveragedHistory, lipschitz_estimate, spatial_average, temporal_convolve,
)
from app.chemistry.ode import (
    ConcentrationField, ConcentrationState, advance, initial_state, integrate_ode,
    integrate_ode_from_history,
)
from app.chemistry.radius_field import RadiusField, radius_field, radius_from_states

__all__ = [
    "AveragedHistory", "ConcentrationField", "ConcentrationState", "RadiusField",
    "advance", "initial_state", "integrate_ode", "integrate_ode_from_history",
    "lipschitz_estimate", "radius_field", "radius_from_states", "spatial_average",
    "temporal_convolve",
]
