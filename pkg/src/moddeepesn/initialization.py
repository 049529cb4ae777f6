"""Construction of the fixed (untrained) weights of a modular deep ESN."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple, Union

import numpy as np

from .errors import ConfigError, DimensionError, NumericalError
from .numerics import Normal, RngStream, Uniform, draw, spectral_radius
from .topology import INPUT, ConnectivityMatrix

XAVIER = "X"

Scale = Union[float, str]


def is_xavier(value) -> bool:
    return isinstance(value, str) and value.strip().upper() == XAVIER


def _check_scale(name: str, value, lo: float, hi: float) -> Scale:
    if is_xavier(value):
        return XAVIER
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{name} must be a number or {XAVIER!r}, got {value!r}") from None
    if not lo < value < hi:
        raise ConfigError(f"{name}={value} outside ({lo}, {hi})")
    return value


@dataclass(frozen=True)
class InitSpec:
    """Initialization hyperparameters.

    ``rho_hat``, ``sigma_in`` and ``sigma_l`` accept either a number or ``"X"``
    for Xavier sampling of the corresponding weight class. Sparsities are the
    probability that each weight is zeroed.
    """

    rho_hat: Scale = 0.9
    sigma_in: Scale = 1.0
    sigma_l: Scale = 1.0
    s_in: float = 0.0
    s_hat_l: float = 0.0
    s_l: float = 0.0
    alpha: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "rho_hat", _check_scale("rho_hat", self.rho_hat, 0.0, 1.0))
        object.__setattr__(self, "sigma_in", _check_scale("sigma_in", self.sigma_in, 0.0, np.inf))
        object.__setattr__(self, "sigma_l", _check_scale("sigma_l", self.sigma_l, 0.0, np.inf))
        for name in ("s_in", "s_hat_l", "s_l"):
            value = float(getattr(self, name))
            if not 0.0 <= value <= 1.0:
                raise ConfigError(f"{name}={value} is not a probability")
            object.__setattr__(self, name, value)
        if not 0.0 < float(self.alpha) <= 1.0:
            raise ConfigError(f"alpha={self.alpha} outside (0, 1]")
        object.__setattr__(self, "alpha", float(self.alpha))


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class EsnModel:
    """All weights of a network. Immutable; use the ``with_*`` helpers to derive variants.

    ``w_in`` maps each input-fed reservoir to its ``(n_r, n_u)`` block,
    ``w_ff`` maps each reservoir edge ``(src, dst)`` to an ``(n_r, n_r)``
    matrix, and the per-reservoir tuples are indexed by ``layer - 1``.
    """

    connectivity: ConnectivityMatrix
    n_u: int
    n_r: int
    w_in: Dict[int, np.ndarray]
    w_ff: Dict[Tuple[int, int], np.ndarray]
    w_rec: Tuple[np.ndarray, ...]
    gain: Tuple[np.ndarray, ...]
    bias: Tuple[np.ndarray, ...]
    leak: Tuple[float, ...]
    w_out: Optional[np.ndarray] = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "w_in", {k: _frozen(v) for k, v in self.w_in.items()})
        object.__setattr__(self, "w_ff", {k: _frozen(v) for k, v in self.w_ff.items()})
        for name in ("w_rec", "gain", "bias"):
            object.__setattr__(self, name, tuple(_frozen(v) for v in getattr(self, name)))
        object.__setattr__(self, "leak", tuple(float(a) for a in self.leak))
        if self.w_out is not None:
            object.__setattr__(self, "w_out", _frozen(self.w_out))
        n_l = self.connectivity.n_layers
        if not (len(self.w_rec) == len(self.gain) == len(self.bias) == len(self.leak) == n_l):
            raise DimensionError("per-reservoir parameter count does not match the topology")
        if any(np.any(g <= 0) for g in self.gain):
            raise NumericalError("gains must stay positive")

    @property
    def n_layers(self) -> int:
        return self.connectivity.n_layers

    @property
    def state_dim(self) -> int:
        return self.n_u + self.n_layers * self.n_r

    def with_ip(self, gain, bias) -> "EsnModel":
        return dataclasses.replace(self, gain=tuple(gain), bias=tuple(bias))

    def with_readout(self, w_out) -> "EsnModel":
        return dataclasses.replace(self, w_out=w_out)


def xavier_matrix(n_in: int, n_out: int, rows: int, cols: int, stream: RngStream) -> np.ndarray:
    """Sample a ``rows x cols`` matrix from N(0, 2 / (n_in + n_out))."""
    if n_in < 0 or n_out < 0 or n_in + n_out <= 0:
        raise ConfigError(f"Xavier fan counts must be positive, got n_in={n_in}, n_out={n_out}")
    std = np.sqrt(2.0 / (n_in + n_out))
    return draw(stream, Normal(0.0, std), (rows, cols))


def effective_radius(m: np.ndarray, a: float) -> float:
    """Spectral radius of the leaky-integrated recurrence ``(1-a)I + a*m``."""
    m = np.asarray(m, dtype=float)
    return spectral_radius((1.0 - a) * np.eye(m.shape[0]) + a * m)


def scale_to_effective_radius(m, a: float, rho_hat: float) -> np.ndarray:
    """Return ``c*m`` with ``rho((1-a)I + a*c*m) == rho_hat``.

    The eigenvalues of the combined matrix are ``(1-a) + a*c*lam`` for each
    eigenvalue ``lam`` of ``m``, so the radius is a convex function of ``c``
    that starts at ``1 - a``. Bisection on that function finds the unique
    crossing; the feasible end of the bracket is returned so the target is
    never exceeded.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {m.shape}")
    if not np.any(m):
        raise NumericalError("cannot scale an all-zero recurrent matrix")
    if rho_hat <= 1.0 - a:
        raise NumericalError(
            f"rho_hat={rho_hat} is unreachable with leak a={a}: the identity term alone gives {1 - a}"
        )
    eig = np.linalg.eigvals(m)
    if np.max(np.abs(eig)) <= np.finfo(float).eps * np.abs(m).max() * m.shape[0]:
        raise NumericalError("recurrent matrix is nilpotent; its radius cannot be scaled")

    def radius(c: float) -> float:
        return float(np.max(np.abs((1.0 - a) + a * c * eig)))

    lo, hi = 0.0, 1.0
    while radius(hi) <= rho_hat:
        lo, hi = hi, hi * 2.0
        if hi > 1e300:
            raise NumericalError("failed to bracket the scaling factor")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            break
        if radius(mid) <= rho_hat:
            lo = mid
        else:
            hi = mid
    return lo * m


def normalize_l2(m, sigma: float) -> np.ndarray:
    """Rescale ``m`` so its largest singular value equals ``sigma``."""
    m = np.asarray(m, dtype=float)
    if sigma <= 0:
        raise ConfigError(f"sigma must be positive, got {sigma}")
    norm = np.linalg.norm(m, 2) if m.ndim == 2 else np.linalg.norm(m)
    if norm == 0:
        raise NumericalError("cannot normalise an all-zero matrix")
    return (sigma / norm) * m


def apply_sparsity(m, s: float, stream: RngStream) -> np.ndarray:
    """Zero each entry independently with probability ``s``."""
    if not 0.0 <= s <= 1.0:
        raise ConfigError(f"sparsity {s} is not a probability")
    m = np.asarray(m, dtype=float)
    drop = draw(stream, Uniform(0.0, 1.0), m.shape) < s
    return np.where(drop, 0.0, m)


def _feedforward_block(rows, cols, n_in, n_out, scale, sparsity, stream):
    if is_xavier(scale):
        base = xavier_matrix(n_in, n_out, rows, cols, stream.child("base"))
    else:
        base = draw(stream.child("base"), Uniform(-1.0, 1.0), (rows, cols))
    w = apply_sparsity(base, sparsity, stream.child("mask"))
    if not is_xavier(scale):
        w = normalize_l2(w, scale)
    return w


def build_model(
    connectivity: ConnectivityMatrix, n_u: int, n_r: int, spec: InitSpec, stream: RngStream
) -> EsnModel:
    """Sample, sparsify and then scale every weight class of a new model.

    Scaling comes last so the norm and radius targets hold for the matrices
    that are actually used.
    """
    if n_u < 1 or n_r < 1:
        raise ConfigError(f"n_u and n_r must be >= 1, got {n_u}, {n_r}")
    w_in = {}
    w_ff = {}
    for src, dst in connectivity.edges():
        if src == INPUT:
            w_in[dst] = _feedforward_block(
                n_r, n_u, n_u, n_r, spec.sigma_in, spec.s_in, stream.child("in", dst)
            )
        else:
            w_ff[(src, dst)] = _feedforward_block(
                n_r, n_r, n_r, n_r, spec.sigma_l, spec.s_l, stream.child("ff", src, dst)
            )

    w_rec = []
    for layer in range(1, connectivity.n_layers + 1):
        sub = stream.child("rec", layer)
        if is_xavier(spec.rho_hat):
            base = xavier_matrix(n_r, n_r, n_r, n_r, sub.child("base"))
        else:
            base = draw(sub.child("base"), Uniform(-1.0, 1.0), (n_r, n_r))
        w = apply_sparsity(base, spec.s_hat_l, sub.child("mask"))
        if not is_xavier(spec.rho_hat):
            w = scale_to_effective_radius(w, spec.alpha, spec.rho_hat)
        w_rec.append(w)

    n_l = connectivity.n_layers
    return EsnModel(
        connectivity=connectivity,
        n_u=n_u,
        n_r=n_r,
        w_in=w_in,
        w_ff=w_ff,
        w_rec=tuple(w_rec),
        gain=tuple(np.ones(n_r) for _ in range(n_l)),
        bias=tuple(np.zeros(n_r) for _ in range(n_l)),
        leak=(spec.alpha,) * n_l,
    )
