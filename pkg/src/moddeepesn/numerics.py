"""Random streams and the two dense linear-algebra kernels used everywhere else."""

from __future__ import annotations

import hashlib
import warnings
from dataclasses import dataclass
from typing import Union

import numpy as np
import scipy.linalg

from .errors import ConfigError, DimensionError, SingularityError


@dataclass(frozen=True)
class RngStream:
    """Immutable descriptor of a reproducible random stream.

    A stream is identified by a root ``seed`` and a slash-separated ``label``
    (for example ``"run/3/init/res/2"``). Two streams with the same pair always
    produce the same samples; children with different labels are independent.
    Sampling never mutates the descriptor, so streams can be shared freely
    between threads.
    """

    seed: int
    label: str = ""

    def __post_init__(self):
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigError(f"seed must be an unsigned 64-bit integer, got {self.seed}")

    def child(self, *parts: object) -> "RngStream":
        suffix = "/".join(str(p) for p in parts)
        label = f"{self.label}/{suffix}" if self.label else suffix
        return RngStream(self.seed, label)

    def generator(self) -> np.random.Generator:
        # Philox is counter-based: the key is a pure function of (seed, label).
        digest = hashlib.blake2b(self.label.encode("utf-8"), digest_size=16).digest()
        words = np.frombuffer(digest, dtype=np.uint32).tolist()
        seq = np.random.SeedSequence([int(self.seed) & 0xFFFFFFFF, int(self.seed) >> 32, *words])
        return np.random.Generator(np.random.Philox(seq))


@dataclass(frozen=True)
class Uniform:
    lo: float = -1.0
    hi: float = 1.0

    def validate(self):
        if not self.lo < self.hi:
            raise ConfigError(f"uniform requires lo < hi, got ({self.lo}, {self.hi})")

    def sample(self, gen: np.random.Generator, size) -> np.ndarray:
        return gen.uniform(self.lo, self.hi, size=size)


@dataclass(frozen=True)
class Normal:
    mu: float = 0.0
    sigma: float = 1.0

    def validate(self):
        if not self.sigma >= 0:
            raise ConfigError(f"normal requires sigma >= 0, got {self.sigma}")

    def sample(self, gen: np.random.Generator, size) -> np.ndarray:
        return gen.normal(self.mu, self.sigma, size=size)


@dataclass(frozen=True)
class Bernoulli:
    p: float = 0.5

    def validate(self):
        if not 0.0 <= self.p <= 1.0:
            raise ConfigError(f"bernoulli requires 0 <= p <= 1, got {self.p}")

    def sample(self, gen: np.random.Generator, size) -> np.ndarray:
        return (gen.random(size=size) < self.p).astype(float)


Distribution = Union[Uniform, Normal, Bernoulli]


def draw(stream: RngStream, dist: Distribution, n: Union[int, tuple]) -> np.ndarray:
    """Draw ``n`` samples (an int or a shape) from ``dist`` using ``stream``.

    The result depends only on ``(stream, dist, n)``.
    """
    dist.validate()
    return dist.sample(stream.generator(), n)


def _as_square(m) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {m.shape}")
    return m


def spectral_radius(m) -> float:
    """Largest eigenvalue magnitude of a square matrix (dense eigensolver)."""
    m = _as_square(m)
    if m.size == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvals(m))))


def solve_regularized(a, beta: float, b) -> np.ndarray:
    """Return ``X`` such that ``(a + beta*I) @ X.T == b.T``.

    ``a`` must be symmetric positive semidefinite. A Cholesky factorisation is
    tried first; if the shifted matrix is not numerically definite the solve
    falls back to a pivoted LU decomposition.

    Raises:
        SingularityError: ``beta == 0`` and ``a`` is singular.
    """
    a = _as_square(a)
    b = np.atleast_2d(np.asarray(b, dtype=float))
    if beta < 0:
        raise ConfigError(f"beta must be nonnegative, got {beta}")
    if b.shape[1] != a.shape[0]:
        raise DimensionError(f"b has {b.shape[1]} columns, a is {a.shape[0]}x{a.shape[0]}")
    n = a.shape[0]
    shifted = a + beta * np.eye(n)
    eps_n = np.finfo(float).eps * max(n, 1)

    try:
        factor, lower = scipy.linalg.cho_factor(shifted, lower=True, check_finite=True)
    except np.linalg.LinAlgError:
        factor = None
    if factor is not None:
        diag = np.abs(np.diag(factor))
        if beta == 0 and (diag.min() / diag.max()) ** 2 < eps_n:
            raise SingularityError("system is singular; use beta > 0")
        return scipy.linalg.cho_solve((factor, lower), b.T).T

    with warnings.catch_warnings(), np.errstate(divide="ignore", invalid="ignore"):
        warnings.simplefilter("error", scipy.linalg.LinAlgWarning)
        try:
            x = scipy.linalg.solve(shifted, b.T).T
        except (np.linalg.LinAlgError, scipy.linalg.LinAlgWarning):
            x = None
    if x is not None and np.all(np.isfinite(x)):
        return x
    if beta == 0:
        raise SingularityError("system is singular; use beta > 0")
    return scipy.linalg.lstsq(shifted, b.T)[0].T
