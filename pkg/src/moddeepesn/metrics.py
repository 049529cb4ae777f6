"""Forecast error measures and the per-configuration evaluation report."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import List

import numpy as np

from .errors import DataError


def _pair(u, u_hat):
    u = np.asarray(u, dtype=float).ravel()
    u_hat = np.asarray(u_hat, dtype=float).ravel()
    if u.shape != u_hat.shape:
        raise DataError(f"length mismatch: {u.size} vs {u_hat.size}")
    if u.size == 0:
        raise DataError("empty series")
    return u, u_hat


def rmse(u, u_hat) -> float:
    u, u_hat = _pair(u, u_hat)
    return float(np.sqrt(np.mean((u - u_hat) ** 2)))


def nrmse(u, u_hat) -> float:
    """RMSE normalised by the spread of ``u`` around its own mean."""
    u, u_hat = _pair(u, u_hat)
    if u.size < 2:
        raise DataError("nrmse needs at least two samples")
    denom = np.sum((u - u.mean()) ** 2)
    if denom == 0:
        raise DataError("nrmse is undefined for a constant target")
    return float(np.sqrt(np.sum((u - u_hat) ** 2) / denom))


def mape(u, u_hat) -> float:
    """Mean of ``|u - u_hat| / u``, in percent. The divisor keeps its sign."""
    u, u_hat = _pair(u, u_hat)
    if np.any(u == 0):
        raise DataError("mape is undefined when a target equals zero")
    if np.any(u < 0):
        warnings.warn("mape on negative targets mixes signs", RuntimeWarning, stacklevel=2)
    return float(np.mean(np.abs(u - u_hat) / u) * 100.0)


CSV_COLUMNS = ("topology", "n_l", "n_r", "ip", "rmse_e3", "nrmse_e3", "mape_e3")


@dataclass
class EvalReport:
    """Mean metrics over ``runs`` repetitions of one configuration.

    ``per_run`` keeps one ``{"rmse", "nrmse", "mape"}`` dict per run index.
    """

    topology: str
    n_l: int
    n_r: int
    ip: bool
    rmse: float
    nrmse: float
    mape: float
    n_steps: int
    runs: int
    per_run: List[dict] = field(default_factory=list)

    @classmethod
    def from_runs(cls, topology, n_l, n_r, ip, per_run, n_steps) -> "EvalReport":
        return cls(
            topology=str(topology),
            n_l=n_l,
            n_r=n_r,
            ip=ip,
            rmse=float(np.mean([r["rmse"] for r in per_run])),
            nrmse=float(np.mean([r["nrmse"] for r in per_run])),
            mape=float(np.mean([r["mape"] for r in per_run])),
            n_steps=n_steps,
            runs=len(per_run),
            per_run=list(per_run),
        )

    def csv_row(self) -> List[str]:
        # metric columns are x1e3 to line up with the published tables
        return [
            self.topology,
            str(self.n_l),
            str(self.n_r),
            "Y" if self.ip else "N",
            f"{self.rmse * 1e3:.12g}",
            f"{self.nrmse * 1e3:.12g}",
            f"{self.mape * 1e3:.12g}",
        ]

    def to_dict(self) -> dict:
        return {
            "topology": self.topology,
            "n_l": self.n_l,
            "n_r": self.n_r,
            "ip": self.ip,
            "rmse": self.rmse,
            "nrmse": self.nrmse,
            "mape": self.mape,
            "n_steps": self.n_steps,
            "runs": self.runs,
            "per_run": self.per_run,
        }
