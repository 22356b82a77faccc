"""Comparison drivers: each one is a handful of ``engine.run`` calls plus a table."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

from .engine import Metrics, Simulator
from .routing import Strategy
from .scenario import AggMode, App, ConfigError, Scenario
from .topology import TopologyKind, build_deployment


@dataclass
class RoutingRow:
    strategy: Strategy
    originated: int
    delivered: int
    delivery_ratio: float
    total_j: float
    idle_j: float
    tx_j: float
    rx_j: float
    first_death_s: Optional[float]
    first_path: Optional[tuple[int, ...]]
    first_path_death_s: Optional[float]
    first_path_death_round: Optional[int]


def path_death_round(metrics: Metrics, path: Optional[tuple[int, ...]], start_s: float,
                     interval_s: float) -> tuple[Optional[float], Optional[int]]:
    """When the first node of ``path`` died, and the 1-based data round it fell in."""
    if not path:
        return None, None
    times = [metrics.deaths[n] for n in path if n in metrics.deaths]
    if not times:
        return None, None
    t = min(times)
    return t, max(1, math.floor((t - start_s) / interval_s) + 1)


def compare_routing(scenario: Scenario, strategies=(Strategy.MAX_MIN, Strategy.MAX_TOTAL,
                                                    Strategy.GREEDY)) -> list[RoutingRow]:
    if scenario.app is not App.ROUTING:
        raise ConfigError("compare-routing needs a routing scenario")
    rows = []
    for strategy in strategies:
        sim = Simulator(replace(scenario, strategy=strategy))
        _, m = sim.run()
        first = next((d.path for d in m.discoveries if d.path), None)
        t, rnd = path_death_round(m, first, scenario.start_s, scenario.interval_s)
        tot = m.totals()
        rows.append(RoutingRow(strategy, m.originated, m.delivered, m.delivery_ratio, tot["total"],
                               tot["idle"], tot["tx"], tot["rx"], m.first_death_s, first, t, rnd))
    return rows


@dataclass
class AggregationCell:
    kind: TopologyKind
    mode: AggMode
    radio_j: float
    total_j: float
    delivered: int
    metrics: Metrics


def topology_variant(scenario: Scenario, kind: TopologyKind) -> Scenario:
    """The scenario regenerated on another lattice with the same seed and node count."""
    if scenario.kind is None:
        raise ConfigError("topology variants need a generated (non-custom) topology")
    capacity = max(n.initial_energy for n in scenario.nodes)
    nodes = build_deployment(kind, scenario.spacing_m, scenario.rows, scenario.cols,
                             scenario.noncoordinators, scenario.seed, capacity)
    # honeycomb routes zig-zag and cannot satisfy the Manhattan-budget pruning
    directional = scenario.directional and kind is not TopologyKind.HEXAGONAL
    return replace(scenario, nodes=nodes, kind=kind, base_station=None, directional=directional)


def compare_aggregation(scenario: Scenario,
                        kinds=(TopologyKind.SQUARE, TopologyKind.HEXAGONAL)) -> list[AggregationCell]:
    """Columns I (all data), II (aggregate), III (handshake only) for each lattice."""
    if scenario.app is not App.AGGREGATION:
        raise ConfigError("compare-aggregation needs an aggregation scenario")
    cells = []
    for kind in kinds:
        base = topology_variant(scenario, kind)
        for mode in (AggMode.ALL_DATA, AggMode.AGGREGATE, AggMode.HANDSHAKE_ONLY):
            _, m = Simulator(replace(base, mode=mode)).run()
            tot = m.totals()
            cells.append(AggregationCell(kind, mode, tot["radio"], tot["total"], m.delivered, m))
    return cells


def format_routing(rows: list[RoutingRow]) -> str:
    head = ("strategy", "delivered", "ratio", "total_J", "idle_J", "tx_J", "rx_J",
            "first_death_s", "path_death_round", "first_path")
    lines = ["\t".join(head)]
    for r in rows:
        lines.append("\t".join([
            r.strategy.value, f"{r.delivered}/{r.originated}", f"{r.delivery_ratio:.3f}",
            f"{r.total_j:.6f}", f"{r.idle_j:.6f}", f"{r.tx_j:.6f}", f"{r.rx_j:.6f}",
            "-" if r.first_death_s is None else f"{r.first_death_s:.3f}",
            "-" if r.first_path_death_round is None else str(r.first_path_death_round),
            "-" if r.first_path is None else "-".join(map(str, r.first_path))]))
    return "\n".join(lines) + "\n"


def format_aggregation(cells: list[AggregationCell]) -> str:
    lines = ["topology\tmode\tradio_J\ttotal_J\tdelivered"]
    for c in cells:
        lines.append(f"{c.kind.value}\t{c.mode.value}\t{c.radio_j:.6f}\t{c.total_j:.6f}\t{c.delivered}")
    by = {(c.kind, c.mode): c for c in cells}
    for kind in dict.fromkeys(c.kind for c in cells):
        full, agg = by.get((kind, AggMode.ALL_DATA)), by.get((kind, AggMode.AGGREGATE))
        if full and agg and full.radio_j:
            lines.append(f"# {kind.value}: aggregate/all_data radio ratio {agg.radio_j / full.radio_j:.4f}")
    return "\n".join(lines) + "\n"
