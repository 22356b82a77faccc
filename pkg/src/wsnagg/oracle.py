"""Brute-force references for checking the protocol: exhaustive paths, direct aggregates.

Deliberately naive. Nothing here is shared with the routing or aggregation code.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Optional, Sequence


class TooLarge(ValueError):
    pass


class EmptySet(ValueError):
    pass


DEFAULT_BOUND = 12


@dataclass(frozen=True)
class CandidatePath:
    nodes: tuple[int, ...]
    hops: int
    min_energy: int
    total_energy: int
    feasible: bool  # every prefix passes the directional budget


def _prefix_feasible(nodes, positions, dm_rounding: bool) -> bool:
    src, dst = positions[nodes[0]], positions[nodes[-1]]
    budget = abs(dst[0] - src[0]) + abs(dst[1] - src[1])
    travelled = 0
    for prev, cur in zip(nodes, nodes[1:]):
        a, b = positions[prev], positions[cur]
        step = math.sqrt((a[0] - b[0]) ** 2 + (a[1] - b[1]) ** 2)
        rest = math.sqrt((dst[0] - b[0]) ** 2 + (dst[1] - b[1]) ** 2)
        if dm_rounding:
            travelled += int(round(step * 10))
            if travelled + 10 * rest > 10 * budget + 1e-9:
                return False
        else:
            travelled += step
            if travelled + rest > budget:
                return False
    return True


def enumerate_paths(graph: Mapping[int, Sequence[int]], src: int, dst: int,
                    energies: Optional[Mapping[int, int]] = None,
                    positions: Optional[Mapping[int, tuple[float, float]]] = None,
                    bound: int = DEFAULT_BOUND, dm_rounding: bool = True) -> list[CandidatePath]:
    """Every simple src->dst path, found by depth-first search."""
    if len(graph) > bound:
        raise TooLarge(f"{len(graph)} vertices exceeds bound {bound}")
    found = []

    def walk(path, seen):
        here = path[-1]
        if here == dst:
            found.append(tuple(path))
            return
        for nxt in sorted(graph[here]):
            if nxt not in seen:
                seen.add(nxt)
                path.append(nxt)
                walk(path, seen)
                path.pop()
                seen.discard(nxt)

    walk([src], {src})
    out = []
    for nodes in found:
        es = [energies[n] for n in nodes] if energies else [0]
        feasible = _prefix_feasible(nodes, positions, dm_rounding) if positions else True
        out.append(CandidatePath(nodes, len(nodes) - 1, min(es), sum(es), feasible))
    return out


def best_path_bruteforce(paths: Sequence[CandidatePath], strategy: str,
                         directional: bool = False) -> tuple[int, ...]:
    """Fewest hops first; then the strategy's energy order; then smallest node sequence."""
    if strategy not in ("max_min", "max_total"):
        raise ValueError(f"no brute-force ordering for {strategy!r}")
    pool = [p for p in paths if p.feasible] if directional else list(paths)
    if not pool:
        raise EmptySet("no candidate path")
    fewest = min(p.hops for p in pool)
    pool = [p for p in pool if p.hops == fewest]
    best = pool[0]
    for p in pool[1:]:
        if strategy == "max_min":
            better = (p.min_energy, p.total_energy) > (best.min_energy, best.total_energy) or (
                (p.min_energy, p.total_energy) == (best.min_energy, best.total_energy)
                and p.nodes < best.nodes)
        else:
            better = p.total_energy > best.total_energy or (
                p.total_energy == best.total_energy and p.nodes < best.nodes)
        if better:
            best = p
    return best.nodes


def aggregate_bruteforce(readings: Sequence[float], kind: str):
    if not readings:
        raise EmptySet("no readings")
    if kind == "min":
        smallest = readings[0]
        for r in readings:
            if r < smallest:
                smallest = r
        return smallest
    if kind == "avg":
        total = Fraction(0)
        for r in readings:
            total += Fraction(r)
        return total / len(readings)
    raise ValueError(f"unknown aggregate {kind!r}")
