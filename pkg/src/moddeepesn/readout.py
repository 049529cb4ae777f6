"""Linear readout trained by ridge regression on harvested states."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError, DimensionError
from .numerics import solve_regularized
from .reservoir import StateMatrix


@dataclass(frozen=True, eq=False)
class ReadoutWeights:
    w_out: np.ndarray
    beta: float

    @property
    def n_outputs(self) -> int:
        return self.w_out.shape[0]


def _entries(states) -> np.ndarray:
    chi = states.entries if isinstance(states, StateMatrix) else np.asarray(states, dtype=float)
    return np.atleast_2d(chi)


def train_readout(states, targets, beta: float) -> ReadoutWeights:
    """Solve ``W = Y X^T (X X^T + beta I)^-1`` for states ``X`` and targets ``Y``.

    ``states`` is a :class:`StateMatrix` or a ``(dim, T)`` array; ``targets``
    is ``(n_outputs, T)`` or a length-``T`` vector.
    """
    chi = _entries(states)
    y = np.atleast_2d(np.asarray(targets, dtype=float))
    if y.shape[1] != chi.shape[1]:
        raise DataError(f"targets span {y.shape[1]} steps but states span {chi.shape[1]}")
    w = solve_regularized(chi @ chi.T, beta, y @ chi.T)
    if not np.all(np.isfinite(w)):
        raise DataError("readout solution is not finite")
    return ReadoutWeights(w_out=w, beta=float(beta))


def predict(weights: ReadoutWeights, states) -> np.ndarray:
    """Readout output ``W_out @ X``, shape ``(n_outputs, T)``."""
    chi = _entries(states)
    if weights.w_out.shape[1] != chi.shape[0]:
        raise DimensionError(
            f"readout expects {weights.w_out.shape[1]} state rows, got {chi.shape[0]}"
        )
    return weights.w_out @ chi
