"""Energy-aware routing and in-network aggregation for grid-deployed sensor networks."""

from .engine import Metrics, Simulator, discover_path, run, transmission_delay
from .routing import NoRoute, Strategy
from .scenario import AggMode, App, ConfigError, Scenario, load_scenario
from .topology import NodeSpec, Position, Role, TopologyKind, build_deployment

__all__ = [
    "AggMode", "App", "ConfigError", "Metrics", "NoRoute", "NodeSpec", "Position", "Role",
    "Scenario", "Simulator", "Strategy", "TopologyKind", "build_deployment", "discover_path",
    "load_scenario", "run", "transmission_delay",
]
