"""
NO concentration c(t, x1) from  dc/dt = -k c + G(x1, T(t)),  c(0) = c0.

The variation-of-constants formula is advanced one time interval at a time
with exponential weights that integrate a linearly interpolated G exactly.
"""
import logging
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from app.chemistry.averaging import AveragedHistory, temporal_convolve
from app.params.functions import eval_G, eval_G_dx1
from app.params.models import ModelParams

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ConcentrationState:
    """One time level of c on the axial grid, with the production driving it."""
    t: float
    x_nodes: np.ndarray
    c: np.ndarray
    c_x: np.ndarray
    T: float
    G: np.ndarray
    G_x: np.ndarray

    def time_derivatives(self, k: float):
        """(dc/dt, d2c/dtdx1) from the ODE itself."""
        return -k * self.c + self.G, -k * self.c_x + self.G_x


@dataclass(frozen=True)
class ConcentrationField:
    t_grid: np.ndarray   # (N+1,)
    x_nodes: np.ndarray  # (n,)
    c: np.ndarray        # (N+1, n)
    c_t: np.ndarray
    c_x: np.ndarray
    c_tx: np.ndarray
    T: np.ndarray        # (N+1,) averaged temperature used at each node

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.c)))


def exponential_weights(k: float, dt: float):
    """Weights (w0, w1) with  int_0^dt e^{-k(dt-s)} g(s) ds = w0 g(0) + w1 g(dt)  for linear g."""
    z = k * dt
    i0 = -np.expm1(-z) / k
    if z < 1e-3:
        i1 = dt * (0.5 - z / 6.0 + z * z / 24.0)
    else:
        i1 = 1.0 / k + np.expm1(-z) / (k * z)
    return i0 - i1, i1


def _production(params: ModelParams, x_nodes: np.ndarray, T: float):
    y = np.full_like(x_nodes, T)
    return eval_G(params, x_nodes, y), eval_G_dx1(params, x_nodes, y)


def initial_state(params: ModelParams, x_nodes: np.ndarray, T0: float) -> ConcentrationState:
    x_nodes = np.asarray(x_nodes, dtype=float)
    G, G_x = _production(params, x_nodes, T0)
    return ConcentrationState(
        t=0.0, x_nodes=x_nodes,
        c=params.initial.concentration(x_nodes, params.L),
        c_x=params.initial.concentration_dx1(x_nodes, params.L),
        T=float(T0), G=G, G_x=G_x,
    )


def advance(params: ModelParams, state: ConcentrationState, t_next: float,
            T_next: float) -> ConcentrationState:
    """Exact step of the closed form for G linear in time between the two levels."""
    dt = t_next - state.t
    k = params.k_deg
    decay = np.exp(-k * dt)
    w0, w1 = exponential_weights(k, dt)
    G, G_x = _production(params, state.x_nodes, T_next)
    return replace(
        state, t=float(t_next), T=float(T_next), G=G, G_x=G_x,
        c=decay * state.c + w0 * state.G + w1 * G,
        c_x=decay * state.c_x + w0 * state.G_x + w1 * G_x,
    )


def field_from_states(params: ModelParams, states: Sequence[ConcentrationState]) -> ConcentrationField:
    c_t, c_tx = zip(*(s.time_derivatives(params.k_deg) for s in states))
    return ConcentrationField(
        t_grid=np.array([s.t for s in states]),
        x_nodes=states[0].x_nodes,
        c=np.stack([s.c for s in states]),
        c_t=np.stack(c_t),
        c_x=np.stack([s.c_x for s in states]),
        c_tx=np.stack(c_tx),
        T=np.array([s.T for s in states]),
    )


def integrate_ode(params: ModelParams, x_nodes, t_grid, T_values) -> ConcentrationField:
    """c on the (t, x1) grid given the averaged temperature T at every time node."""
    t_grid = np.asarray(t_grid, dtype=float)
    T_values = np.asarray(T_values, dtype=float)
    states = [initial_state(params, x_nodes, T_values[0])]
    for t_next, T_next in zip(t_grid[1:], T_values[1:]):
        states.append(advance(params, states[-1], t_next, T_next))
    return field_from_states(params, states)


def integrate_ode_from_history(params: ModelParams, history: AveragedHistory, x_nodes,
                               t_grid) -> ConcentrationField:
    T_values = [temporal_convolve(history, float(t)) for t in t_grid]
    return integrate_ode(params, x_nodes, t_grid, T_values)


def concentration_bound(params: ModelParams) -> float:
    """|c0|_inf + C_G / k."""
    x = np.linspace(0.0, params.L, 201)
    c0 = float(np.max(np.abs(params.initial.concentration(x, params.L))))
    return c0 + params.G.bound(params.L) / params.k_deg
