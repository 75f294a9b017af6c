# Coupled fluid/solid heat transport
from app.transport.diagnostics import (
    energy_norm, interface_heat_flux, l2_error, outlet_advective_flux, outlet_mean_temperature,
)
from app.transport.solver import advance
from app.transport.system import (
    TransportSource, TransportSpace, TransportState, TransportSystem, assemble_step,
    build_transport_space, initial_transport_state,
)

__all__ = [
    "TransportSource", "TransportSpace", "TransportState", "TransportSystem", "advance",
    "assemble_step", "build_transport_space", "energy_norm", "initial_transport_state",
    "interface_heat_flux", "l2_error", "outlet_advective_flux", "outlet_mean_temperature",
]
