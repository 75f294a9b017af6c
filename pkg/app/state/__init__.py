# Coupled simulation state management module
from app.state.coupled_state import CoupledNode, CoupledState, state_from_checkpoint

__all__ = ["CoupledNode", "CoupledState", "state_from_checkpoint"]
