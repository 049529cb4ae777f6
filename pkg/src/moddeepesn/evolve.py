"""Genetic-algorithm search over hyperparameters and topology.

A genome is a plain ``dict`` mapping gene names to values; a search space is
an ordered ``dict`` mapping the same names to gene descriptors. Selection is a
size-3 tournament, mating is uniform crossover, mutation resamples genes from
their prior, and the best individual always survives unchanged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np

from .errors import ConfigError
from .initialization import XAVIER, InitSpec, is_xavier
from .numerics import RngStream
from .topology import TopologyKind

Genome = Dict[str, Any]


@dataclass(frozen=True)
class FloatGene:
    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo <= self.hi:
            raise ConfigError(f"empty range [{self.lo}, {self.hi}]")

    def sample(self, rng: np.random.Generator) -> float:
        if self.lo == self.hi:
            return float(self.lo)
        return float(rng.uniform(self.lo, self.hi))

    def contains(self, value) -> bool:
        return isinstance(value, (int, float)) and self.lo <= value <= self.hi


@dataclass(frozen=True)
class LogFloatGene(FloatGene):
    def __post_init__(self):
        super().__post_init__()
        if self.lo <= 0:
            raise ConfigError("log-uniform range must be positive")

    def sample(self, rng: np.random.Generator) -> float:
        if self.lo == self.hi:
            return float(self.lo)
        return float(math.exp(rng.uniform(math.log(self.lo), math.log(self.hi))))


@dataclass(frozen=True)
class IntGene:
    lo: int
    hi: int  # inclusive

    def __post_init__(self):
        if not self.lo <= self.hi:
            raise ConfigError(f"empty range [{self.lo}, {self.hi}]")

    def sample(self, rng: np.random.Generator) -> int:
        return int(rng.integers(self.lo, self.hi + 1))

    def contains(self, value) -> bool:
        return isinstance(value, (int, np.integer)) and self.lo <= value <= self.hi


@dataclass(frozen=True)
class ChoiceGene:
    options: Tuple[Any, ...]

    def __post_init__(self):
        if not self.options:
            raise ConfigError("choice gene needs at least one option")

    def sample(self, rng: np.random.Generator):
        return self.options[int(rng.integers(len(self.options)))]

    def contains(self, value) -> bool:
        return value in self.options


@dataclass(frozen=True)
class MaybeXavier:
    """Either the Xavier flag or a value from ``inner``."""

    inner: FloatGene
    p_xavier: float = 0.5

    def sample(self, rng: np.random.Generator):
        if rng.random() < self.p_xavier:
            return XAVIER
        return self.inner.sample(rng)

    def contains(self, value) -> bool:
        return is_xavier(value) or self.inner.contains(value)


def sample_genome(space: Dict[str, Any], stream: RngStream) -> Genome:
    if not space:
        raise ConfigError("search space is empty")
    rng = stream.generator()
    return {name: gene.sample(rng) for name, gene in space.items()}


def is_valid(genome: Genome, space: Dict[str, Any]) -> bool:
    return genome.keys() == space.keys() and all(space[k].contains(v) for k, v in genome.items())


def crossover(a: Genome, b: Genome, stream: RngStream, swap_p: float = 0.5) -> Tuple[Genome, Genome]:
    """Uniform crossover: each gene is swapped between the parents with probability ``swap_p``."""
    if a.keys() != b.keys():
        raise ConfigError("cannot cross genomes with different gene sets")
    rng = stream.generator()
    child_a, child_b = dict(a), dict(b)
    for name in a:
        if rng.random() < swap_p:
            child_a[name], child_b[name] = b[name], a[name]
    return child_a, child_b


def mutate(
    genome: Genome,
    p: float,
    space: Dict[str, Any],
    stream: RngStream,
    mode: str = "gene",
) -> Genome:
    """Resample genes from their prior.

    In ``"gene"`` mode every gene is resampled independently with probability
    ``p``. In ``"individual"`` mode the genome is selected for mutation with
    probability ``p`` and then each gene is resampled with probability
    ``1 / len(genome)``.
    """
    if not 0.0 <= p <= 1.0:
        raise ConfigError(f"mutation probability {p} is not a probability")
    rng = stream.generator()
    child = dict(genome)
    if mode == "gene":
        gene_p = p
    elif mode == "individual":
        if rng.random() >= p:
            return child
        gene_p = 1.0 / len(genome)
    else:
        raise ConfigError(f"unknown mutation mode {mode!r}")
    for name, gene in space.items():
        if rng.random() < gene_p:
            child[name] = gene.sample(rng)
    return child


@dataclass(frozen=True)
class EvolutionConfig:
    population: int = 50
    generations: int = 50
    tournament_size: int = 3
    crossover_p: float = 0.5
    mutation_p: float = 0.1
    mutation_mode: str = "gene"
    seed: int = 0

    def __post_init__(self):
        if not self.population >= self.tournament_size >= 1:
            raise ConfigError("need population >= tournament_size >= 1")
        if self.generations < 1:
            raise ConfigError("need at least one generation")
        for name in ("crossover_p", "mutation_p"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ConfigError(f"{name} is not a probability")


@dataclass
class GenerationStats:
    generation: int
    best_fitness: float
    mean_fitness: float
    best_genome: Genome


def _tournament(fits: np.ndarray, k: int, rng: np.random.Generator) -> int:
    contenders = rng.choice(len(fits), size=k, replace=False)
    # ties go to the lowest index so the outcome is independent of evaluation order
    return int(min(contenders, key=lambda i: (fits[i], i)))


def evolve(
    space: Dict[str, Any],
    fitness: Callable[[Genome], float],
    cfg: EvolutionConfig = EvolutionConfig(),
    map_fn: Callable = map,
    on_generation: Optional[Callable[[GenerationStats], None]] = None,
) -> Tuple[Genome, List[float]]:
    """Minimise ``fitness`` over ``space``.

    The population is evaluated ``cfg.generations`` times (the random initial
    population is generation 0), so the budget is
    ``population * generations`` fitness calls. Non-finite fitness values are
    treated as the worst possible score. ``map_fn`` may be swapped for an
    executor's ``map`` to evaluate a generation in parallel; results do not
    depend on evaluation order.

    Returns the best genome seen and the best fitness of every generation.
    """
    root = RngStream(cfg.seed, "evolve")
    pop = [sample_genome(space, root.child("init", i)) for i in range(cfg.population)]
    history: List[float] = []
    best_genome, best_fit = None, math.inf

    for gen in range(cfg.generations):
        raw = list(map_fn(fitness, pop))
        fits = np.array([f if math.isfinite(f) else math.inf for f in map(float, raw)])
        order = int(np.argmin(fits))
        if best_genome is None or fits[order] < best_fit:
            best_genome, best_fit = dict(pop[order]), float(fits[order])
        history.append(float(fits[order]))
        if on_generation is not None:
            finite = fits[np.isfinite(fits)]
            on_generation(
                GenerationStats(
                    generation=gen,
                    best_fitness=float(fits[order]),
                    mean_fitness=float(finite.mean()) if finite.size else math.inf,
                    best_genome=dict(pop[order]),
                )
            )
        if gen == cfg.generations - 1:
            break

        stream = root.child("gen", gen)
        rng = stream.child("select").generator()
        offspring = [
            dict(pop[_tournament(fits, cfg.tournament_size, rng)])
            for _ in range(cfg.population - 1)
        ]
        mate_rng = stream.child("mate").generator()
        for j in range(0, len(offspring) - 1, 2):
            if mate_rng.random() < cfg.crossover_p:
                offspring[j], offspring[j + 1] = crossover(
                    offspring[j], offspring[j + 1], stream.child("cx", j)
                )
        offspring = [
            mutate(child, cfg.mutation_p, space, stream.child("mut", j), cfg.mutation_mode)
            for j, child in enumerate(offspring)
        ]
        pop = [dict(pop[order])] + offspring

    return best_genome, history


def random_search(
    space: Dict[str, Any], fitness: Callable[[Genome], float], budget: int, seed: int = 0
) -> Tuple[Genome, float]:
    """Best of ``budget`` independent samples; the baseline the GA should beat."""
    root = RngStream(seed, "random-search")
    best, best_fit = None, math.inf
    for i in range(budget):
        genome = sample_genome(space, root.child(i))
        fit = float(fitness(genome))
        if best is None or (math.isfinite(fit) and fit < best_fit):
            best, best_fit = genome, fit
    return best, best_fit


def esn_search_space(**overrides) -> Dict[str, Any]:
    """Default gene ranges for the echo state network search."""
    space = {
        "topology": ChoiceGene(("wide", "layered", "crisscross", "wide+layered")),
        "width": IntGene(1, 4),
        "depth": IntGene(1, 3),
        "n_r": ChoiceGene((128, 256, 512, 1024)),
        "beta": LogFloatGene(1e-9, 1e-1),
        "alpha": FloatGene(0.1, 1.0),
        "rho_hat": MaybeXavier(FloatGene(0.5, 0.999)),
        "sigma_in": MaybeXavier(FloatGene(0.01, 1.0)),
        "sigma_l": MaybeXavier(FloatGene(0.01, 1.0)),
        "s_in": FloatGene(0.0, 0.9),
        "s_hat_l": FloatGene(0.0, 0.9),
        "s_l": FloatGene(0.0, 0.9),
        "ip": ChoiceGene((False, True)),
    }
    unknown = set(overrides) - set(space)
    if unknown:
        raise ConfigError(f"unknown genes: {sorted(unknown)}")
    space.update(overrides)
    return space


def decode_topology(genome: Genome) -> TopologyKind:
    name, width, depth = genome["topology"], int(genome["width"]), int(genome["depth"])
    if name == "wide":
        return TopologyKind.wide(width)
    if name == "layered":
        return TopologyKind.layered(depth)
    if name == "crisscross":
        return TopologyKind.crisscross(width)
    return TopologyKind.wide_layered(width, depth)


def decode(genome: Genome) -> Tuple[TopologyKind, InitSpec, int, float, bool]:
    """Map an ESN genome to ``(topology, init spec, n_r, beta, ip enabled)``."""
    spec = InitSpec(
        rho_hat=genome["rho_hat"],
        sigma_in=genome["sigma_in"],
        sigma_l=genome["sigma_l"],
        s_in=genome["s_in"],
        s_hat_l=genome["s_hat_l"],
        s_l=genome["s_l"],
        alpha=genome["alpha"],
    )
    return decode_topology(genome), spec, int(genome["n_r"]), float(genome["beta"]), bool(genome["ip"])
