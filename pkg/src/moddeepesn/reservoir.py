"""Leaky-integrator state updates and state harvesting."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .data import TimeSeries
from .errors import DataError, DimensionError
from .initialization import EsnModel


@dataclass(frozen=True, eq=False)
class StateMatrix:
    """Concatenated network state, one column per kept time step.

    Rows ``[0, n_u)`` hold the input and rows
    ``[n_u + (l-1)*n_r, n_u + l*n_r)`` hold reservoir ``l``.
    """

    entries: np.ndarray
    washout: int
    n_u: int
    n_r: int

    @property
    def n_steps(self) -> int:
        return self.entries.shape[1]

    @property
    def inputs(self) -> np.ndarray:
        return self.entries[: self.n_u]

    def reservoir(self, layer: int) -> np.ndarray:
        start = self.n_u + (layer - 1) * self.n_r
        return self.entries[start : start + self.n_r]


def as_input_matrix(inputs, n_u: Optional[int] = None) -> np.ndarray:
    """Return inputs as an ``(n_u, T)`` array."""
    values = inputs.values if isinstance(inputs, TimeSeries) else np.asarray(inputs, dtype=float)
    u = values[None, :] if values.ndim == 1 else values.T
    if n_u is not None and u.shape[0] != n_u:
        raise DimensionError(f"model expects {n_u} input features, got {u.shape[0]}")
    return np.ascontiguousarray(u, dtype=float)


def step(model: EsnModel, layer: int, x_prev: np.ndarray, drive: np.ndarray) -> np.ndarray:
    """Advance reservoir ``layer`` by one step given its summed feedforward ``drive``."""
    i = layer - 1
    if x_prev.shape != (model.n_r,) or np.shape(drive) not in ((model.n_r,), ()):
        raise DimensionError(f"reservoir {layer} expects vectors of length {model.n_r}")
    a = model.leak[i]
    net = drive + model.w_rec[i] @ x_prev
    return (1.0 - a) * x_prev + a * np.tanh(model.gain[i] * net + model.bias[i])


def input_drives(model: EsnModel, u: np.ndarray) -> dict:
    """Input projections for every input-fed reservoir over all steps, ``(T, n_r)`` each."""
    return {layer: (w @ u).T.copy() for layer, w in model.w_in.items()}


def run(
    model: EsnModel,
    inputs,
    washout: int = 0,
    initial_states: Optional[Sequence[np.ndarray]] = None,
) -> StateMatrix:
    """Drive ``model`` with ``inputs`` and return the post-washout state matrix.

    Reservoirs start from zero unless ``initial_states`` is given. At every
    step the reservoirs are updated in index order, so a reservoir sees the
    same-step state of its predecessors.
    """
    u = as_input_matrix(inputs, model.n_u)
    n_steps = u.shape[1]
    if not 0 <= washout < n_steps:
        raise DataError(f"washout {washout} must be smaller than the input length {n_steps}")
    n_l, n_r = model.n_layers, model.n_r
    if initial_states is None:
        xs = [np.zeros(n_r) for _ in range(n_l)]
    else:
        xs = [np.array(x, dtype=float) for x in initial_states]
        if len(xs) != n_l or any(x.shape != (n_r,) for x in xs):
            raise DimensionError(f"need {n_l} initial states of length {n_r}")

    drives = input_drives(model, u)
    preds = [
        [(src, model.w_ff[(src, layer)]) for src in model.connectivity.predecessors(layer) if src]
        for layer in range(1, n_l + 1)
    ]
    history = np.empty((n_steps, model.state_dim))
    history[:, : model.n_u] = u.T
    zero = np.zeros(n_r)

    for t in range(n_steps):
        for i in range(n_l):
            layer = i + 1
            drive = drives[layer][t] if layer in drives else zero
            for src, w in preds[i]:
                drive = drive + w @ xs[src - 1]
            xs[i] = step(model, layer, xs[i], drive)
        history[t, model.n_u :] = np.concatenate(xs)

    return StateMatrix(history[washout:].T, washout=washout, n_u=model.n_u, n_r=n_r)
