"""Feedforward wiring between the input and the reservoirs.

Sources are indexed ``0`` for the input ``u`` and ``1..n_layers`` for the
reservoirs. Reservoirs are numbered column by column, so every
reservoir-to-reservoir edge points from a lower to a strictly higher index.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from .errors import ConfigError, DimensionError

INPUT = 0

KINDS = ("wide", "layered", "crisscross", "wide+layered")

_GRAMMAR = re.compile(r"^(wide|layered|crisscross|wide\+layered):(\d+)(?:x(\d+))?$")


@dataclass(frozen=True)
class TopologyKind:
    """One of the four network families.

    ``width`` counts parallel pathways fed by the input and ``depth`` counts
    reservoirs along each pathway. ``wide`` fixes depth 1, ``layered`` fixes
    width 1 and ``crisscross`` uses an n-by-n grid.
    """

    name: str
    width: int = 1
    depth: int = 1

    def __post_init__(self):
        if self.name not in KINDS:
            raise ConfigError(f"unknown topology {self.name!r}; expected one of {KINDS}")
        if self.width < 1 or self.depth < 1:
            raise ConfigError(f"topology sizes must be >= 1, got {self.width}x{self.depth}")
        if self.name == "wide" and self.depth != 1:
            raise ConfigError("wide topology has depth 1")
        if self.name == "layered" and self.width != 1:
            raise ConfigError("layered topology has width 1")
        if self.name == "crisscross" and self.width != self.depth:
            raise ConfigError("crisscross topology is square (n x n)")

    @classmethod
    def wide(cls, width: int) -> "TopologyKind":
        return cls("wide", width, 1)

    @classmethod
    def layered(cls, depth: int) -> "TopologyKind":
        return cls("layered", 1, depth)

    @classmethod
    def crisscross(cls, n: int) -> "TopologyKind":
        return cls("crisscross", n, n)

    @classmethod
    def wide_layered(cls, width: int, depth: int) -> "TopologyKind":
        return cls("wide+layered", width, depth)

    @classmethod
    def parse(cls, text: str) -> "TopologyKind":
        """Parse ``wide:3``, ``layered:3``, ``crisscross:2`` or ``wide+layered:2x2``."""
        match = _GRAMMAR.fullmatch(text.strip())
        if not match:
            raise ConfigError(f"cannot parse topology {text!r}")
        name, first, second = match.group(1), int(match.group(2)), match.group(3)
        if name == "wide+layered":
            if second is None:
                raise ConfigError("wide+layered needs <width>x<depth>")
            return cls.wide_layered(first, int(second))
        if second is not None:
            raise ConfigError(f"{name} takes a single size, got {text!r}")
        return {"wide": cls.wide, "layered": cls.layered, "crisscross": cls.crisscross}[name](first)

    @property
    def n_layers(self) -> int:
        return self.width * self.depth

    def __str__(self) -> str:
        if self.name == "wide":
            return f"wide:{self.width}"
        if self.name == "layered":
            return f"layered:{self.depth}"
        if self.name == "crisscross":
            return f"crisscross:{self.width}"
        return f"wide+layered:{self.width}x{self.depth}"


@dataclass(frozen=True, eq=False)
class ConnectivityMatrix:
    """Binary source->destination adjacency over ``{u, r1, ..., rN}``.

    ``adjacency[s, d] == 1`` means source ``s`` feeds reservoir ``d``.
    """

    adjacency: np.ndarray
    kind: TopologyKind

    @property
    def n_layers(self) -> int:
        return self.adjacency.shape[0] - 1

    def has_edge(self, src: int, dst: int) -> bool:
        return bool(self.adjacency[src, dst])

    def fan(self, src: int) -> int:
        """Number of reservoirs fed by ``src``."""
        return int(self.adjacency[src].sum())

    def fan_in(self, dst: int) -> int:
        return int(self.adjacency[:, dst].sum())

    def edges(self) -> List[Tuple[int, int]]:
        src, dst = np.nonzero(self.adjacency)
        return sorted(zip(src.tolist(), dst.tolist()))

    def input_layers(self) -> List[int]:
        return [int(d) for d in np.nonzero(self.adjacency[INPUT])[0]]

    def predecessors(self, layer: int) -> List[int]:
        if not 1 <= layer <= self.n_layers:
            raise DimensionError(f"reservoir index {layer} out of range 1..{self.n_layers}")
        return [int(s) for s in np.nonzero(self.adjacency[:, layer])[0]]

    def __eq__(self, other):
        if not isinstance(other, ConnectivityMatrix):
            return NotImplemented
        return self.kind == other.kind and np.array_equal(self.adjacency, other.adjacency)

    def __hash__(self):
        return hash((self.kind, self.adjacency.tobytes()))


def _index(column: int, row: int, width: int) -> int:
    # column-major numbering, both arguments zero-based
    return 1 + column * width + row


def build_connectivity(kind: TopologyKind) -> ConnectivityMatrix:
    """Build the connectivity matrix for ``kind``.

    >>> build_connectivity(TopologyKind.layered(3)).edges()
    [(0, 1), (1, 2), (2, 3)]
    """
    width, depth = kind.width, kind.depth
    n = kind.n_layers
    adj = np.zeros((n + 1, n + 1), dtype=np.int8)
    for row in range(width):
        adj[INPUT, _index(0, row, width)] = 1
    for col in range(depth - 1):
        for row in range(width):
            src = _index(col, row, width)
            if kind.name == "crisscross":
                for nxt in range(width):
                    adj[src, _index(col + 1, nxt, width)] = 1
            else:
                adj[src, _index(col + 1, row, width)] = 1
    return ConnectivityMatrix(adj, kind)
