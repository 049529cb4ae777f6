"""Intrinsic plasticity: unsupervised adaptation of per-neuron gain and bias.

Each neuron computes ``tanh(g*x + b)`` of its net input ``x``. Pre-training
nudges ``g`` and ``b`` online so that the neuron's output distribution
approaches a Gaussian with mean ``mu`` and standard deviation ``sigma``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError, NumericalError
from .initialization import EsnModel
from .reservoir import as_input_matrix, input_drives


@dataclass(frozen=True)
class IpConfig:
    eta: float = 1e-4
    mu: float = 0.0
    sigma: float = 0.2
    epochs: int = 10

    def __post_init__(self):
        if self.eta < 0:
            raise ConfigError(f"ip.eta must be >= 0, got {self.eta}")
        if self.sigma <= 0:
            raise ConfigError(f"ip.sigma must be > 0, got {self.sigma}")
        if int(self.epochs) < 1:
            raise ConfigError(f"ip.epochs must be >= 1, got {self.epochs}")


def ip_update(x, g, b, cfg: IpConfig):
    """Return ``(delta_b, delta_g)`` for net input ``x``; works elementwise on arrays."""
    var = cfg.sigma**2
    y = np.tanh(g * x + b)
    delta_b = -cfg.eta * (-cfg.mu / var + (y / var) * (2.0 * var + 1.0 - y**2 + cfg.mu * y))
    delta_g = cfg.eta / g + delta_b * x
    return delta_b, delta_g


def _sweep(model, u, gain, bias, cfg, adapt, record):
    n_l, n_r = model.n_layers, model.n_r
    n_steps = u.shape[1]
    drives = input_drives(model, u)
    preds = [
        [(src, model.w_ff[(src, layer)]) for src in model.connectivity.predecessors(layer) if src]
        for layer in range(1, n_l + 1)
    ]
    xs = [np.zeros(n_r) for _ in range(n_l)]
    zero = np.zeros(n_r)
    out = np.empty((n_steps, n_l * n_r)) if record else None
    for t in range(n_steps):
        for i in range(n_l):
            layer = i + 1
            drive = drives[layer][t] if layer in drives else zero
            for src, w in preds[i]:
                drive = drive + w @ xs[src - 1]
            net = drive + model.w_rec[i] @ xs[i]
            y = np.tanh(gain[i] * net + bias[i])
            a = model.leak[i]
            xs[i] = (1.0 - a) * xs[i] + a * y
            if record:
                out[t, i * n_r : (i + 1) * n_r] = y
            if adapt:
                db, dg = ip_update(net, gain[i], bias[i], cfg)
                bias[i] += db
                gain[i] += dg
                if np.any(gain[i] <= 0) or not np.all(np.isfinite(gain[i])):
                    raise NumericalError(
                        f"IP drove a gain in reservoir {layer} to {gain[i].min():.3g} "
                        f"at step {t}; lower ip.eta"
                    )
    return out


def pretrain(model: EsnModel, inputs, cfg: IpConfig) -> EsnModel:
    """Run ``cfg.epochs`` passes of online IP over ``inputs``; weights are untouched.

    Every pass restarts from the zero state, and gains and biases are updated
    after every neuron activation.
    """
    if model.w_out is not None:
        raise ConfigError("IP pre-training must happen before the readout is trained")
    u = as_input_matrix(inputs, model.n_u)
    if u.shape[1] == 0:
        raise DataError("IP pre-training needs a nonempty input")
    gain = [g.copy() for g in model.gain]
    bias = [b.copy() for b in model.bias]
    if cfg.eta == 0:
        return model
    for _ in range(int(cfg.epochs)):
        _sweep(model, u, gain, bias, cfg, adapt=True, record=False)
    return model.with_ip(gain, bias)


def activations(model: EsnModel, inputs) -> np.ndarray:
    """Neuron outputs ``tanh(g*x + b)`` for every step, shape ``(T, n_layers*n_r)``."""
    u = as_input_matrix(inputs, model.n_u)
    return _sweep(model, u, list(model.gain), list(model.bias), None, adapt=False, record=True)


def kl_estimate(samples, mu: float, sigma: float) -> float:
    """KL divergence from N(mu, sigma^2) to a Gaussian fitted to ``samples``."""
    samples = np.asarray(samples, dtype=float).ravel()
    if samples.size < 2:
        raise DataError("need at least two samples")
    if sigma <= 0:
        raise ConfigError(f"sigma must be positive, got {sigma}")
    mean = samples.mean()
    std = samples.std()
    if std == 0:
        raise DataError("samples have zero variance")
    kl = np.log(sigma / std) + (std**2 + (mean - mu) ** 2) / (2.0 * sigma**2) - 0.5
    return float(max(kl, 0.0))
