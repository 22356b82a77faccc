"""Deployment geometry: coordinator lattices, scattered sensing nodes, radio adjacency."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import Iterable

import numpy as np


class Role(enum.Enum):
    COORDINATOR = "coordinator"
    NON_COORDINATOR = "non_coordinator"
    BASE_STATION = "base_station"


class TopologyKind(enum.Enum):
    SQUARE = "square"
    HEXAGONAL = "hexagonal"
    TRIANGULAR = "triangular"


@dataclass(frozen=True)
class Position:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"non-finite position ({self.x}, {self.y})")

    def distance(self, other: "Position") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)

    def shifted(self, dx: float, dy: float) -> "Position":
        return Position(self.x + dx, self.y + dy)


@dataclass(frozen=True)
class NodeSpec:
    id: int
    position: Position
    role: Role
    initial_energy: float  # joules

    def __post_init__(self):
        if not 0 <= self.id < 2**32:
            raise ValueError(f"node id {self.id} does not fit 32 bits")
        if self.initial_energy <= 0:
            raise ValueError(f"node {self.id}: initial energy must be positive")

    @property
    def coordinates(self) -> bool:
        """True for nodes that answer coordinator searches (the base station included)."""
        return self.role is not Role.NON_COORDINATOR


DEFAULT_ENERGY_J = 20304.0


def _lattice_points(kind: TopologyKind, spacing: float, rows: int, cols: int):
    half_root3 = math.sqrt(3.0) / 2.0
    for r in range(rows):
        for c in range(cols):
            if kind is TopologyKind.SQUARE:
                yield c * spacing, r * spacing
            elif kind is TopologyKind.TRIANGULAR:
                yield c * spacing + (r % 2) * spacing / 2.0, r * half_root3 * spacing
            else:
                # honeycomb vertices: zig-zag rows, a vertical edge only where (r + c) is odd
                yield c * half_root3 * spacing, r * 1.5 * spacing + ((r + c) % 2) * spacing / 2.0


def generate_coordinator_grid(kind: TopologyKind, spacing: float, rows: int, cols: int,
                              initial_energy: float = DEFAULT_ENERGY_J) -> list[NodeSpec]:
    """Coordinator lattice with ids assigned row-major from 0.

    Square is a plain rows x cols grid, triangular offsets every other row by half a
    pitch, hexagonal places honeycomb vertices so each node has at most three lattice
    neighbours at ``spacing``.
    """
    if not spacing > 0:
        raise ValueError("spacing must be positive")
    if rows < 1 or cols < 1:
        raise ValueError("rows and cols must be at least 1")
    kind = TopologyKind(kind)
    pts = list(_lattice_points(kind, float(spacing), rows, cols))
    # hexagonal rows with an odd offset start above y=0; keep everything anchored at the origin
    min_x = min(p[0] for p in pts)
    min_y = min(p[1] for p in pts)
    return [
        NodeSpec(i, Position(x - min_x, y - min_y), Role.COORDINATOR, initial_energy)
        for i, (x, y) in enumerate(pts)
    ]


def node_stream(seed: int, index: int) -> np.random.Generator:
    """Independent PCG64 stream for one node; adding nodes never perturbs earlier ones."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(index,))))


def scatter_noncoordinators(count: int, extent: tuple[float, float], seed: int, first_id: int = 0,
                            initial_energy: float = DEFAULT_ENERGY_J) -> list[NodeSpec]:
    if count < 0:
        raise ValueError("count must be non-negative")
    width, height = extent
    nodes = []
    for i in range(count):
        u, v = node_stream(seed, i).random(2)
        nodes.append(NodeSpec(first_id + i, Position(float(u * width), float(v * height)),
                              Role.NON_COORDINATOR, initial_energy))
    return nodes


def neighbors(nodes: Iterable[NodeSpec], range_m: float) -> dict[int, tuple[int, ...]]:
    """Symmetric adjacency: distinct nodes within ``range_m`` (boundary inclusive).

    A nanometre of slack keeps lattice neighbours at exactly one pitch connected
    despite irrational coordinates.
    """
    if not range_m > 0:
        raise ValueError("range must be positive")
    limit = range_m + 1e-9
    nodes = list(nodes)
    adj: dict[int, list[int]] = {n.id: [] for n in nodes}
    for i, a in enumerate(nodes):
        for b in nodes[i + 1:]:
            if a.position.distance(b.position) <= limit:
                adj[a.id].append(b.id)
                adj[b.id].append(a.id)
    return {k: tuple(sorted(v)) for k, v in adj.items()}


def default_extent(kind: TopologyKind, spacing: float, rows: int, cols: int) -> tuple[float, float]:
    grid = generate_coordinator_grid(kind, spacing, rows, cols)
    width = max(n.position.x for n in grid)
    height = max(n.position.y for n in grid)
    return width + spacing, height + spacing


def pick_base_station(grid: list[NodeSpec]) -> int:
    """Grid node nearest the grid centroid; ties go to the lowest id."""
    cx = sum(n.position.x for n in grid) / len(grid)
    cy = sum(n.position.y for n in grid) / len(grid)
    centre = Position(cx, cy)
    return min(grid, key=lambda n: (round(n.position.distance(centre), 9), n.id)).id


def build_deployment(kind: TopologyKind, spacing: float, rows: int, cols: int,
                     noncoordinators: int, seed: int,
                     initial_energy: float = DEFAULT_ENERGY_J) -> list[NodeSpec]:
    """Coordinators (shifted by a half-pitch margin) plus scattered sensing nodes.

    The coordinator nearest the centre becomes the base station.
    """
    margin = spacing / 2.0
    grid = [replace(n, position=n.position.shifted(margin, margin))
            for n in generate_coordinator_grid(kind, spacing, rows, cols, initial_energy)]
    bs = pick_base_station(grid)
    grid = [replace(n, role=Role.BASE_STATION) if n.id == bs else n for n in grid]
    extent = default_extent(kind, spacing, rows, cols)
    return grid + scatter_noncoordinators(noncoordinators, extent, seed, first_id=len(grid),
                                          initial_energy=initial_energy)
