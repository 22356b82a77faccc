"""Battery accounting for a low-power sensor mote.

All bookkeeping is done in integer nanojoules so that the per-state ledger always
sums exactly to the energy drawn from the battery. Joules appear only at the edges.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

NJ_PER_J = 1_000_000_000
NJ_PER_MJ = 1_000_000


class DeadBattery(RuntimeError):
    """Radio activity was requested from a node whose battery is empty."""


class Activity(enum.Enum):
    TRANSMIT = "tx"
    RECEIVE = "rx"
    IDLE = "idle"
    SLEEP = "sleep"


def to_nj(joules: float) -> int:
    return int(round(joules * NJ_PER_J))


def to_j(nanojoules: int) -> float:
    return nanojoules / NJ_PER_J


@dataclass(frozen=True)
class PowerProfile:
    p_tx: float = 0.099
    p_rx: float = 0.042
    p_idle: float = 0.006
    p_sleep: float = 0.000003
    data_rate: int = 76_800  # bits/s

    def __post_init__(self):
        if min(self.p_tx, self.p_rx, self.p_idle, self.p_sleep, self.data_rate) <= 0:
            raise ValueError("power figures and data rate must be positive")
        if not self.p_sleep < self.p_idle < self.p_rx < self.p_tx:
            raise ValueError("expected p_sleep < p_idle < p_rx < p_tx")

    def nanowatts(self, activity: Activity) -> int:
        watts = {Activity.TRANSMIT: self.p_tx, Activity.RECEIVE: self.p_rx,
                 Activity.IDLE: self.p_idle, Activity.SLEEP: self.p_sleep}[activity]
        return int(round(watts * NJ_PER_J))

    def radio_cost_nj(self, activity: Activity, bits: int) -> int:
        # P * bits / rate, rounded half-up in exact integer arithmetic
        num = self.nanowatts(activity) * bits
        return (2 * num + self.data_rate) // (2 * self.data_rate)

    def state_cost_nj(self, activity: Activity, duration_us: int) -> int:
        num = self.nanowatts(activity) * duration_us
        return (2 * num + 1_000_000) // 2_000_000


@dataclass
class EnergyLedger:
    spent_tx: int = 0
    spent_rx: int = 0
    spent_idle: int = 0
    spent_sleep: int = 0

    def credit(self, activity: Activity, nj: int) -> None:
        name = "spent_" + activity.value
        setattr(self, name, getattr(self, name) + nj)

    @property
    def total(self) -> int:
        return self.spent_tx + self.spent_rx + self.spent_idle + self.spent_sleep

    def as_joules(self) -> dict[str, float]:
        return {"idle": to_j(self.spent_idle), "tx": to_j(self.spent_tx),
                "rx": to_j(self.spent_rx), "sleep": to_j(self.spent_sleep)}


@dataclass
class Battery:
    capacity: int  # nJ
    remaining: int = -1
    ledger: EnergyLedger = field(default_factory=EnergyLedger)

    def __post_init__(self):
        if self.remaining < 0:
            self.remaining = self.capacity
        if not 0 <= self.remaining <= self.capacity:
            raise ValueError("remaining must lie in [0, capacity]")

    @classmethod
    def from_joules(cls, joules: float) -> "Battery":
        return cls(to_nj(joules))

    @property
    def dead(self) -> bool:
        return self.remaining == 0

    @property
    def remaining_j(self) -> float:
        return to_j(self.remaining)

    @property
    def remaining_mj(self) -> int:
        return self.remaining // NJ_PER_MJ

    def draw(self, activity: Activity, nj: int) -> int:
        """Debit up to ``nj``; returns what was actually drawn (less if the battery empties)."""
        taken = min(nj, self.remaining)
        self.remaining -= taken
        self.ledger.credit(activity, taken)
        return taken

    def balanced(self) -> bool:
        return self.capacity - self.remaining == self.ledger.total


def debit_radio(battery: Battery, profile: PowerProfile, activity: Activity, size: int) -> float:
    """Charge one transmission or reception of ``size`` bits; returns joules consumed."""
    if activity not in (Activity.TRANSMIT, Activity.RECEIVE):
        raise ValueError(f"{activity} is not a radio activity")
    if size <= 0:
        raise ValueError("packet size must be positive")
    if battery.dead:
        raise DeadBattery("battery already empty")
    return to_j(battery.draw(activity, profile.radio_cost_nj(activity, size)))


def accrue_idle(battery: Battery, profile: PowerProfile, state: Activity, duration: float) -> float:
    """Charge ``duration`` seconds spent idle or asleep; returns joules consumed."""
    if state not in (Activity.IDLE, Activity.SLEEP):
        raise ValueError(f"{state} is not an idle state")
    if duration < 0:
        raise ValueError("duration must be non-negative")
    return to_j(battery.draw(state, profile.state_cost_nj(state, int(round(duration * 1e6)))))


def below_path_threshold(battery: Battery, threshold: float) -> bool:
    if threshold < 0:
        raise ValueError("threshold must be non-negative")
    return battery.remaining < to_nj(threshold)


def path_threshold_nj(profile: PowerProfile, control_bits: int, data_bits: int) -> int:
    """Energy to send one control packet plus one data packet."""
    return (profile.radio_cost_nj(Activity.TRANSMIT, control_bits)
            + profile.radio_cost_nj(Activity.TRANSMIT, data_bits))
