"""
Run orchestration: builds the context, executes the configured mode and
writes CSV, VTK, checkpoint and report files.
"""
import logging
import time
from pathlib import Path
from typing import Optional

import structlog

from app.config import RunConfig
from app.deformation.radius import ConstantRadius
from app.driver.picard import global_picard, mode_consistency
from app.driver.staggered import (
    SimulationContext, StepResult, build_context, run_staggered, solve_flow, step_record,
)
from app.errors import CheckpointError, NonConvergenceError, SimulationError
from app.io.checkpoint import checkpoint, restore
from app.io.csv_writer import TimeSeriesWriter, dump_rho_table
from app.io.reports import CheckRecord, ErrorReport, RunReport, write_report
from app.io.vtk_writer import write_snapshot
from app.state.coupled_state import CoupledState, state_from_checkpoint
from app.stokes.solver import StokesSolution

logger = logging.getLogger(__name__)
log = structlog.get_logger(__name__)


def fixed_domain_config(config: RunConfig) -> RunConfig:
    """Same run with H = R0, i.e. no vessel motion."""
    return config.with_overrides(H_kind="constant", H_value=None)


def fixed_domain_flow(context: SimulationContext, t: float) -> StokesSolution:
    """Stokes solve on the undeformed domain, independent of the chemistry."""
    return solve_flow(context, t, ConstantRadius(context.params.R0))


def _row(record) -> dict:
    return {"t": record.t, "T1": record.T1, "T": record.T, "R_min": record.R_min,
            "R_mean": record.R_mean, "R_max": record.R_max, "Q_in": record.Q_in,
            "Q_out": record.Q_out, "interface_flux": record.interface_flux,
            "outlet_flux": record.outlet_flux, "energy": record.energy}


def _checkpoint_path(output: Path, step: int) -> Path:
    return output / "checkpoints" / f"step_{step:04d}.ckpt"


def save_checkpoint(path: Path, state: CoupledState, config: RunConfig) -> None:
    metadata = state.checkpoint_metadata()
    metadata["config"] = config.model_dump()
    checkpoint(path, state.checkpoint_arrays(), metadata)


def load_checkpoint(path: Path, config: RunConfig) -> CoupledState:
    arrays, metadata = restore(path)
    if metadata.get("config") != config.model_dump():
        raise CheckpointError("Checkpoint was written with a different configuration",
                              details={"path": str(path)})
    return state_from_checkpoint(arrays, metadata)


def run(config: RunConfig, output_dir, command: str = "run",
        resume_from: Optional[Path] = None) -> RunReport:
    """Execute the configured mode and write all artifacts into output_dir."""
    output = Path(output_dir)
    output.mkdir(parents=True, exist_ok=True)
    report = RunReport(command=command, mode=config.mode, config=config.model_dump())
    started = time.perf_counter()
    try:
        context = build_context(config)
        report.timings["setup"] = time.perf_counter() - started
        dump_rho_table(context.deformation.profile, output / "rho_table.csv")
        if config.mode == "picard":
            _run_picard(context, output, report)
        else:
            _run_staggered(context, output, report, resume_from)
    except SimulationError as exc:
        report.error = ErrorReport(**exc.to_dict())
        log.error("run_failed", error_code=exc.error_code, message=exc.message)
        raise
    finally:
        report.timings["total"] = time.perf_counter() - started
        write_report(report, output / "report.json")
    return report


def _run_staggered(context: SimulationContext, output: Path, report: RunReport,
                   resume_from: Optional[Path]) -> CoupledState:
    config = context.config
    series = TimeSeriesWriter(output / "time_series.csv")
    state = load_checkpoint(resume_from, config) if resume_from else None

    def on_commit(state: CoupledState, result) -> None:
        record = state.records[-1]
        report.steps.append(record)
        series.append(_row(record))
        series.flush()
        step = record.step
        if config.snapshot_every and step % config.snapshot_every == 0:
            write_snapshot(output / "snapshots", step, record.t, context.mesh, context.deformation,
                           result.radius, result.node.transport, result.node.stokes, context.params)
        if config.checkpoint_every and step % config.checkpoint_every == 0:
            save_checkpoint(_checkpoint_path(output, step), state, config)

    state = run_staggered(context, state, on_commit=on_commit)
    eta = context.deformation.eta
    report.checks.append(CheckRecord(
        name="jacobian_floor", passed=all(r.J_min >= eta for r in report.steps),
        measured={"J_min": min((r.J_min for r in report.steps), default=None), "eta": eta}))
    return state


def _run_picard(context: SimulationContext, output: Path, report: RunReport) -> None:
    result = global_picard(context)
    report.picard = result.records
    report.converged = result.converged
    state = result.trajectory.state
    series = TimeSeriesWriter(output / "time_series.csv")
    for node in state.nodes[1:]:
        record = step_record(context, StepResult(node=node, history=state.history.truncated(node.t),
                                                 radius=result.trajectory.radius, residuals=[],
                                                 peclet=0.0))
        report.steps.append(record)
        series.append(_row(record))
    series.flush()
    if not result.converged:
        raise NonConvergenceError("Global Picard iteration did not converge",
                                  details={"residuals": result.residuals})


def run_with_consistency(config: RunConfig, output_dir) -> RunReport:
    """Staggered run followed by the mode-consistency diagnostic."""
    context = build_context(config)
    state = run_staggered(context)
    consistency = mode_consistency(context, state)
    report = RunReport(command="consistency", mode="staggered", config=config.model_dump(),
                       steps=state.records)
    report.checks.append(CheckRecord(name="mode_consistency", passed=bool(consistency["consistent"]),
                                     measured=consistency))
    write_report(report, Path(output_dir) / "report.json")
    return report
