"""Coordinator association, minimum and area-average folding, threshold events."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Sequence

from .packet import AggType, CordReply
from .topology import Position


class NoCoordinatorInRange(LookupError):
    pass


class StaleData(ValueError):
    pass


DEFAULT_BAND = 0.10


@dataclass(frozen=True)
class CoordinatorBinding:
    non_coordinator: int
    coordinator: int
    distance: float
    bound_at: float


@dataclass(frozen=True)
class MinRecord:
    value: float  # cm
    origin: int
    origin_position: Position
    sense_time: float
    origin_energy: float  # J

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise ValueError("reading must be finite")


@dataclass(frozen=True)
class Thresholds:
    e_thresh: float  # J
    water_low: float  # cm
    water_high: float  # cm

    def __post_init__(self):
        if not self.e_thresh > 0:
            raise ValueError("e_thresh must be positive")
        if not self.water_low < self.water_high:
            raise ValueError("water_low must be below water_high")


def select_coordinator(replies: Sequence[CordReply], self_position: Position,
                       band: float = DEFAULT_BAND, range_m: Optional[float] = None) -> int:
    """Nearest coordinator, unless one almost as near has more energy.

    Replies within ``(1 + band)`` times the nearest distance compete on residual
    energy; the lowest address settles exact ties. Positions in the replies are
    decimeters, energies millijoules.
    """
    scored = []
    for r in replies:
        d = math.hypot(r.x / 10 - self_position.x, r.y / 10 - self_position.y)
        if range_m is None or d <= range_m:
            scored.append((d, r))
    if not scored:
        raise NoCoordinatorInRange("no coordinator replied from within range")
    nearest = min(d for d, _ in scored)
    limit = nearest * (1 + band)
    close = [r for d, r in scored if d <= limit + 1e-9]
    return min(close, key=lambda r: (-r.energy, r.coordinator)).coordinator


def fold_min(stored: Optional[MinRecord], incoming: MinRecord, freshness_epoch: float) -> MinRecord:
    """Keep the smaller reading; equal values keep the earlier, then the lower address."""
    if incoming.sense_time < freshness_epoch:
        raise StaleData(f"reading from t={incoming.sense_time} predates epoch {freshness_epoch}")
    if stored is None:
        return incoming
    a = (stored.value, stored.sense_time, stored.origin)
    b = (incoming.value, incoming.sense_time, incoming.origin)
    return incoming if b < a else stored


def area_average(children: Iterable[float], own: Optional[float]) -> float:
    """Unweighted mean of the children's readings plus the coordinator's own."""
    values = list(children)
    if own is not None:
        values.append(own)
    if not values:
        raise ValueError("nothing to average")
    return math.fsum(values) / len(values)


def exact_mean(values: Iterable[float]) -> Fraction:
    values = [Fraction(v) for v in values]
    return sum(values, Fraction(0)) / len(values)


def check_event(reading: float, remaining_j: float, thresholds: Thresholds,
                battery_reported: bool = False) -> list[AggType]:
    """Event codes raised by one sensing instant.

    Low battery is latched: once reported it is not raised again. Water events
    use strict inequalities.
    """
    codes = []
    if remaining_j < thresholds.e_thresh and not battery_reported:
        codes.append(AggType.LOW_BATTERY)
    if reading < thresholds.water_low:
        codes.append(AggType.LOW_WATER)
    elif reading > thresholds.water_high:
        codes.append(AggType.HIGH_WATER)
    return codes
