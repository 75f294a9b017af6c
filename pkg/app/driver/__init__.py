# Coupled time loop: staggered stepping, global Picard iteration and run orchestration
from app.driver.picard import PicardResult, apply_solution_operator, global_picard, mode_consistency
from app.driver.runner import fixed_domain_config, fixed_domain_flow, run
from app.driver.staggered import (
    SimulationContext, build_context, initial_coupled_state, run_staggered, step_coupled,
)

__all__ = [
    "PicardResult", "SimulationContext", "apply_solution_operator", "build_context",
    "fixed_domain_config", "fixed_domain_flow", "global_picard", "initial_coupled_state",
    "mode_consistency", "run", "run_staggered", "step_coupled",
]
