"""Energy-aware path discovery rules.

Three strategies are supported. ``MAX_MIN`` ranks min-hop paths by their weakest
node (then by total energy) and prunes wandering floods with the directional
budget check; ``MAX_TOTAL`` ranks min-hop paths by summed residual energy;
``GREEDY`` hops to the most energetic unvisited neighbour.

The engine owns all mutable state; the functions here only decide.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .topology import Position


class EmptyPath(ValueError):
    pass


class EmptyCandidates(ValueError):
    pass


class NoRoute(RuntimeError):
    pass


class Undeliverable(RuntimeError):
    pass


class Strategy(enum.Enum):
    GREEDY = "greedy"
    MAX_TOTAL = "max_total"
    MAX_MIN = "max_min"


class RouteFlag(enum.IntEnum):
    DISCOVERING = 0
    ESTABLISHED = 1


@dataclass
class RouteEntry:
    """One routing-table row.

    ``minimum_energy`` and ``path_total_energy`` (millijoules) cover the path up to,
    but not including, the node holding the row. ``path`` is the simulator's record
    of the node sequence from the source to this node.
    """
    destination: int
    source: int
    next_hop: Optional[int]
    previous_hop: Optional[int]
    time_stamp: float
    sequence_number: int
    hop_count: int
    minimum_energy: int
    path_total_energy: int
    distance_traversed: int  # dm
    route_establish_flag: RouteFlag = RouteFlag.DISCOVERING
    neighbour_list: tuple[int, ...] = ()
    path: tuple[int, ...] = ()


@dataclass(frozen=True)
class PathScore:
    hop_count: int
    min_energy: int
    total_energy: int


def path_total_energy(energies: Sequence[float]) -> float:
    if not energies:
        raise EmptyPath("path has no nodes")
    return sum(energies)


def path_min_energy(energies: Sequence[float]) -> float:
    if not energies:
        raise EmptyPath("path has no nodes")
    return min(energies)


def score_path(energies: Sequence[int]) -> PathScore:
    return PathScore(len(energies) - 1, path_min_energy(energies), path_total_energy(energies))


def hop_length_dm(a: Position, b: Position) -> int:
    """Length of one hop as carried in the distance field."""
    return int(round(math.hypot(a.x - b.x, a.y - b.y) * 10))


def directional_valid(distance_traversed: float, current: Position, source: Position,
                      destination: Position) -> bool:
    """Distance so far plus the straight-line remainder must fit the source's Manhattan span."""
    if distance_traversed < 0:
        raise ValueError("distance_traversed must be non-negative")
    budget = abs(destination.x - source.x) + abs(destination.y - source.y)
    return distance_traversed + current.distance(destination) <= budget


def directional_valid_dm(distance_dm: int, current: Position, source: Position,
                         destination: Position) -> bool:
    """Same check with the traversed distance in wire decimeters."""
    budget = 10 * (abs(destination.x - source.x) + abs(destination.y - source.y))
    return distance_dm + 10 * current.distance(destination) <= budget + 1e-9


def _key(entry: RouteEntry, strategy: Strategy, own_mj: Optional[int]):
    """Sort key, smallest is best: fewer hops, stronger bottleneck, more total, then path order."""
    m, t = entry.minimum_energy, entry.path_total_energy
    if own_mj is not None:
        m, t = min(m, own_mj), t + own_mj
    if strategy is Strategy.MAX_MIN:
        return (entry.hop_count, -m, -t, entry.path)
    return (entry.hop_count, -t, entry.path)


def best_entry(entries: Sequence[RouteEntry], strategy: Strategy,
               own_mj: Optional[int] = None) -> RouteEntry:
    """Pick the entry the destination establishes.

    ``own_mj`` folds the holder's own energy into the scores, so the path metric
    covers source through destination. Remaining ties go to the path whose node
    sequence is lexicographically smallest from the source, i.e. the lowest
    address at the first point where candidates diverge.
    """
    if not entries:
        raise EmptyCandidates("no candidate routes")
    if strategy is Strategy.GREEDY:
        raise ValueError("greedy forwarding picks per hop, not from stored entries")
    return min(entries, key=lambda e: _key(e, strategy, own_mj))


class Verdict(enum.Enum):
    ACCEPT = "accept"
    LOW_ENERGY = "below path threshold"
    HOP_LIMIT = "hop limit"
    OFF_COURSE = "directional check"
    OLD_SEQUENCE = "old sequence"
    DOMINATED = "dominated"


@dataclass
class SearchState:
    """Discovery bookkeeping for one (source, destination) pair at one node."""
    sequence_number: int
    entries: list[RouteEntry] = field(default_factory=list)
    advertised_mj: int = 0


@dataclass(frozen=True)
class Admission:
    strategy: Strategy
    own_mj: int
    remaining_nj: int
    threshold_nj: int
    max_hop_count: int
    directional: bool
    # geometry for the directional check
    here: Optional[Position] = None
    source_pos: Optional[Position] = None
    destination_pos: Optional[Position] = None


def sequence_newer(incoming: int, stored: int) -> bool:
    """8-bit serial-number comparison."""
    return 0 < (incoming - stored) % 256 < 128


def _dominates(a: RouteEntry, b: RouteEntry, rules: Admission) -> bool:
    if rules.directional and a.distance_traversed > b.distance_traversed:
        return False
    if a.hop_count != b.hop_count:
        return a.hop_count < b.hop_count
    if rules.strategy is Strategy.MAX_MIN and (
            min(a.minimum_energy, rules.own_mj) < min(b.minimum_energy, rules.own_mj)):
        return False
    if a.path_total_energy < b.path_total_energy:
        return False
    return a.path <= b.path


def admit_search_packet(state: Optional[SearchState], candidate: RouteEntry,
                        rules: Admission) -> tuple[Verdict, Optional[SearchState]]:
    """Decide whether a PATH_SEARCH arrival is stored and rebroadcast.

    Returns the verdict and the state to keep. On acceptance the candidate joins
    the stored set and any entries it now dominates are evicted. One entry
    dominates another when, with no more distance travelled, it has fewer hops,
    or the same hops and scores at least as good under the strategy. Keeping every
    undominated entry (rather than a single best) makes the flood exact for the
    lexicographic bottleneck-then-total order.
    """
    if rules.remaining_nj < rules.threshold_nj:
        return Verdict.LOW_ENERGY, state
    if candidate.hop_count >= rules.max_hop_count:
        return Verdict.HOP_LIMIT, state
    if rules.directional and not directional_valid_dm(
            candidate.distance_traversed, rules.here, rules.source_pos, rules.destination_pos):
        return Verdict.OFF_COURSE, state
    seq = candidate.sequence_number
    if state is None or sequence_newer(seq, state.sequence_number):
        return Verdict.ACCEPT, SearchState(seq, [candidate], rules.own_mj)
    if seq != state.sequence_number:
        return Verdict.OLD_SEQUENCE, state
    if any(_dominates(e, candidate, rules) for e in state.entries):
        return Verdict.DOMINATED, state
    kept = [e for e in state.entries if not _dominates(candidate, e, rules)]
    kept.append(candidate)
    return Verdict.ACCEPT, SearchState(seq, kept, state.advertised_mj)


def rebroadcast_fields(entry: RouteEntry, own_mj: int) -> tuple[int, int]:
    """(min_energy, path_total_energy) a node advertises when relaying: itself included."""
    return min(entry.minimum_energy, own_mj), entry.path_total_energy + own_mj


def greedy_next(candidates: dict[int, int], visited: set[int], destination: int) -> Optional[int]:
    """Next hop for greedy forwarding given neighbour energies (mJ).

    The destination wins outright when it answered; otherwise the most energetic
    unvisited neighbour, lowest id on ties.
    """
    if destination in candidates:
        return destination
    fresh = [(-e, n) for n, e in candidates.items() if n not in visited]
    return min(fresh)[1] if fresh else None
