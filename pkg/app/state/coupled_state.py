"""
State of the coupled simulation: one node per committed time level plus the
averaged-temperature history that the nonlocal chemistry needs.
"""
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from app.chemistry.averaging import AveragedHistory
from app.chemistry.ode import ConcentrationState
from app.errors import CheckpointError, InvariantViolation
from app.io.reports import StepRecord
from app.params.models import KernelSpec
from app.stokes.solver import StokesSolution
from app.transport.system import TransportState

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CoupledNode:
    """(c, w, q, theta_f, theta_s) at one time level."""
    step: int
    t: float
    concentration: ConcentrationState
    transport: TransportState
    stokes: Optional[StokesSolution] = None

    def check_finite(self) -> None:
        arrays = {"c": self.concentration.c, "theta_f": self.transport.theta_f,
                  "theta_s": self.transport.theta_s}
        if self.stokes is not None:
            arrays.update(w=self.stokes.w, q=self.stokes.q)
        bad = [name for name, values in arrays.items() if not np.all(np.isfinite(values))]
        if bad:
            raise InvariantViolation("Non-finite values in coupled state",
                                     details={"fields": bad, "t": self.t})


@dataclass
class CoupledState:
    """Append-only trajectory of committed nodes."""
    history: AveragedHistory
    nodes: List[CoupledNode] = field(default_factory=list)
    records: List[StepRecord] = field(default_factory=list)

    @property
    def current(self) -> CoupledNode:
        return self.nodes[-1]

    @property
    def times(self) -> np.ndarray:
        return np.array([node.t for node in self.nodes])

    def commit(self, node: CoupledNode, history: AveragedHistory,
               record: Optional[StepRecord] = None) -> None:
        if self.nodes and node.t <= self.current.t:
            raise InvariantViolation("Time nodes must increase",
                                     details={"t": node.t, "last": self.current.t})
        node.check_finite()
        self.nodes.append(node)
        self.history = history
        if record is not None:
            self.records.append(record)

    def theta_s_trajectory(self) -> np.ndarray:
        return np.stack([node.transport.theta_s for node in self.nodes])

    def theta_f_trajectory(self) -> np.ndarray:
        return np.stack([node.transport.theta_f for node in self.nodes])

    def to_arrays(self) -> Dict[str, np.ndarray]:
        return {
            "t": self.times,
            "theta_f": self.theta_f_trajectory(),
            "theta_s": self.theta_s_trajectory(),
            "c": np.stack([node.concentration.c for node in self.nodes]),
        }

    # checkpoint payload

    def checkpoint_arrays(self) -> Dict[str, np.ndarray]:
        node = self.current
        conc = node.concentration
        return {
            "x_nodes": conc.x_nodes, "c": conc.c, "c_x": conc.c_x, "G": conc.G, "G_x": conc.G_x,
            "theta_f": node.transport.theta_f, "theta_s": node.transport.theta_s,
            "history_times": self.history.times, "history_values": self.history.values,
        }

    def checkpoint_metadata(self) -> Dict[str, Any]:
        node = self.current
        return {"step": node.step, "t": node.t, "T": node.concentration.T,
                "plateau": self.history.plateau, "gamma": self.history.kernel.gamma}


def state_from_checkpoint(arrays: Dict[str, np.ndarray], metadata: Dict[str, Any]) -> CoupledState:
    try:
        t = float(metadata["t"])
        concentration = ConcentrationState(t=t, x_nodes=arrays["x_nodes"], c=arrays["c"],
                                           c_x=arrays["c_x"], T=float(metadata["T"]),
                                           G=arrays["G"], G_x=arrays["G_x"])
        transport = TransportState(t=t, theta_f=arrays["theta_f"], theta_s=arrays["theta_s"])
        history = AveragedHistory(times=arrays["history_times"], values=arrays["history_values"],
                                  plateau=float(metadata["plateau"]),
                                  kernel=KernelSpec(gamma=float(metadata["gamma"])))
    except KeyError as exc:
        raise CheckpointError("Checkpoint lacks a field", details={"field": str(exc)}) from exc
    node = CoupledNode(step=int(metadata["step"]), t=t, concentration=concentration,
                       transport=transport)
    return CoupledState(history=history, nodes=[node])
