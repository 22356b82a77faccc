"""Scenario description and its INI-style file format.

A scenario file has sections ``[scenario] [topology] [energy] [energies] [nodes]
[routing] [aggregation] [schedule] [run]``; see ``scenarios/`` for examples.
Relative paths are resolved against the file's directory.
"""

from __future__ import annotations

import configparser
import enum
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

from .energy import PowerProfile
from .routing import Strategy
from .schedule import SensorSchedule, load_schedule_file, synthesize_schedules
from .topology import (DEFAULT_ENERGY_J, NodeSpec, Position, Role, TopologyKind,
                       build_deployment)


class ConfigError(ValueError):
    pass


class App(enum.Enum):
    ROUTING = "routing"
    AGGREGATION = "aggregation"


class AggMode(enum.Enum):
    AGGREGATE = "aggregate"
    ALL_DATA = "all_data"
    HANDSHAKE_ONLY = "handshake_only"


@dataclass
class Scenario:
    nodes: list[NodeSpec]
    name: str = "scenario"
    app: App = App.AGGREGATION
    duration_s: float = 6900.0
    seed: int = 0
    # topology parameters, kept for re-generation by experiment drivers
    kind: Optional[TopologyKind] = None
    spacing_m: float = 528.0
    rows: int = 0
    cols: int = 0
    noncoordinators: int = 0
    range_m: float = 528.0
    base_station: Optional[int] = None
    # radio and battery
    profile: PowerProfile = field(default_factory=PowerProfile)
    overhearing: bool = True
    e_thresh_j: Optional[float] = None
    # routing
    strategy: Strategy = Strategy.MAX_MIN
    directional: bool = True
    settle_s: float = 2.0
    max_hop_count: Optional[int] = None
    routing_participants: str = "all"
    source: Optional[int] = None
    destination: Optional[int] = None
    packets: int = 0
    interval_s: float = 300.0
    start_s: float = 1.0
    # aggregation
    mode: AggMode = AggMode.AGGREGATE
    band: float = 0.10
    handshake_window_s: float = 0.5
    route_setup_s: float = 1.0
    collect_window_s: float = 0.5
    hop_slot_s: float = 0.05
    sensing_start_s: float = 5.0
    water_low_cm: float = 1.0
    water_high_cm: float = 4.0
    schedules: dict[int, SensorSchedule] = field(default_factory=dict)
    # run options
    loss_rate: float = 0.0
    sleep_window: Optional[tuple[float, float]] = None
    processing_latency_s: float = 0.0

    def __post_init__(self):
        ids = [n.id for n in self.nodes]
        if len(set(ids)) != len(ids):
            raise ConfigError("node ids must be unique")
        if any(n.position.x < 0 or n.position.y < 0 for n in self.nodes):
            raise ConfigError("positions travel as unsigned decimeters and must be non-negative")
        if not self.duration_s >= 0:
            raise ConfigError("duration must be non-negative")
        if not 0 <= self.loss_rate < 1:
            raise ConfigError("loss_rate must lie in [0, 1)")
        if self.base_station is None:
            bs = [n.id for n in self.nodes if n.role is Role.BASE_STATION]
            if len(bs) > 1:
                raise ConfigError("more than one base station")
            self.base_station = bs[0] if bs else self.destination
        if self.base_station is not None and self.base_station not in ids:
            raise ConfigError(f"base station {self.base_station} is not a node")
        self.nodes = [replace(n, role=Role.BASE_STATION) if n.id == self.base_station
                      else (replace(n, role=Role.COORDINATOR) if n.role is Role.BASE_STATION else n)
                      for n in self.nodes]
        if self.app is App.ROUTING:
            for name in ("source", "destination"):
                if getattr(self, name) not in ids:
                    raise ConfigError(f"routing {name} must name a node")
            if self.source == self.destination:
                raise ConfigError("source and destination must differ")

    @property
    def hop_limit(self) -> int:
        if self.max_hop_count:
            return self.max_hop_count
        if self.rows and self.cols:
            return self.rows + self.cols
        return max(len(self.nodes), 2)

    def with_overrides(self, **changes) -> "Scenario":
        return replace(self, **changes)


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


def _optional_float(text: Optional[str]) -> Optional[float]:
    if text is None or text.strip().lower() in ("", "auto", "none"):
        return None
    return float(text)


def load_scenario(path: Path, seed: Optional[int] = None) -> Scenario:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"scenario file not found: {path}")
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(path.read_text(), source=str(path))
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc
    try:
        return _from_config(cp, path.parent, path.stem, seed)
    except (KeyError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{path}: {exc}") from exc


def _from_config(cp: configparser.ConfigParser, base: Path, stem: str,
                 seed_override: Optional[int]) -> Scenario:
    sc = cp["scenario"] if cp.has_section("scenario") else {}
    topo = cp["topology"] if cp.has_section("topology") else {}
    en = cp["energy"] if cp.has_section("energy") else {}
    rt = cp["routing"] if cp.has_section("routing") else {}
    ag = cp["aggregation"] if cp.has_section("aggregation") else {}
    run = cp["run"] if cp.has_section("run") else {}

    seed = int(sc.get("seed", 0)) if seed_override is None else seed_override
    capacity = float(en.get("capacity_j", DEFAULT_ENERGY_J))
    kind_name = topo.get("kind", "square")
    kw: dict = {}
    if kind_name == "custom":
        nodes = []
        for key, value in cp["nodes"].items():
            x, y, role = [p.strip() for p in value.split(",")]
            nodes.append(NodeSpec(int(key), Position(float(x), float(y)), Role(role), capacity))
    else:
        kind = TopologyKind(kind_name)
        rows, cols = int(topo["rows"]), int(topo["cols"])
        spacing = float(topo.get("spacing_m", 528))
        nc = int(topo.get("noncoordinators", 0))
        nodes = build_deployment(kind, spacing, rows, cols, nc, seed, capacity)
        kw.update(kind=kind, rows=rows, cols=cols, spacing_m=spacing, noncoordinators=nc)
    if cp.has_section("energies"):
        overrides = {int(k): float(v) for k, v in cp["energies"].items()}
        nodes = [replace(n, initial_energy=overrides.get(n.id, n.initial_energy)) for n in nodes]

    bs = topo.get("base_station", "auto")
    base_station = None if bs.strip() == "auto" else int(bs)
    profile = PowerProfile(
        p_tx=float(en.get("p_tx_w", 0.099)), p_rx=float(en.get("p_rx_w", 0.042)),
        p_idle=float(en.get("p_idle_w", 0.006)), p_sleep=float(en.get("p_sleep_w", 0.000003)),
        data_rate=int(en.get("data_rate_bps", 76800)))

    app = App(sc.get("app", "aggregation"))
    schedules: dict[int, SensorSchedule] = {}
    if cp.has_section("schedule"):
        sch = cp["schedule"]
        if "dir" in sch:
            folder = base / sch["dir"]
            for n in nodes:
                f = folder / f"node_{n.id}.csv"
                if not f.is_file():
                    raise ConfigError(f"missing schedule file: {f}")
                schedules[n.id] = load_schedule_file(f)
        elif "synthetic_interval_s" in sch:
            pattern = tuple(int(p) for p in sch.get("pattern", "0").split(","))
            schedules = synthesize_schedules(
                [n.id for n in nodes], int(sch.get("synthetic_seed", seed)),
                float(sch["synthetic_interval_s"]), int(sch["synthetic_count"]), pattern)

    sleep = run.get("sleep_window", "").strip()
    max_hops = rt.get("max_hop_count", "auto").strip()
    strategy = Strategy(rt.get("strategy", "max_min"))
    return Scenario(
        nodes=nodes, name=sc.get("name", stem), app=app,
        duration_s=float(sc.get("duration_s", 6900)), seed=seed,
        range_m=float(topo.get("range_m", 528)), base_station=base_station,
        profile=profile, overhearing=_bool(en.get("overhearing", "true")),
        e_thresh_j=_optional_float(en.get("e_thresh_j")),
        strategy=strategy,
        directional=_bool(rt.get("directional", "true")),
        settle_s=float(rt.get("settle_s", 2.0)),
        max_hop_count=None if max_hops == "auto" else int(max_hops),
        routing_participants=rt.get("participants", "all" if app is App.ROUTING else "coordinators"),
        source=int(rt["source"]) if "source" in rt else None,
        destination=int(rt["destination"]) if "destination" in rt else None,
        packets=int(rt.get("packets", 0)), interval_s=float(rt.get("interval_s", 300)),
        start_s=float(rt.get("start_s", 1.0)),
        mode=AggMode(ag.get("mode", "aggregate")), band=float(ag.get("band", 0.10)),
        handshake_window_s=float(ag.get("handshake_window_s", 0.5)),
        route_setup_s=float(ag.get("route_setup_s", 1.0)),
        collect_window_s=float(ag.get("collect_window_s", 0.5)),
        hop_slot_s=float(ag.get("hop_slot_s", 0.05)),
        sensing_start_s=float(ag.get("sensing_start_s", 5.0)),
        water_low_cm=float(ag.get("water_low_cm", 1.0)),
        water_high_cm=float(ag.get("water_high_cm", 4.0)),
        schedules=schedules,
        loss_rate=float(run.get("loss_rate", 0.0)),
        sleep_window=tuple(float(v) for v in sleep.split(",")) if sleep else None,
        processing_latency_s=float(run.get("processing_latency_s", 0.0)),
        **kw)
