"""Per-node sensing schedules in, base-station records out (CSV)."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .packet import AggType

SCHEDULE_HEADER = ("value_cm", "agg_type", "relative_interval_s")
RECORD_HEADER = ("arrival_s", "sense_s", "node_id", "value_cm", "x_m", "y_m", "agg_type", "energy_j")


class ParseError(ValueError):
    def __init__(self, message: str, line: int | None = None, source: str | None = None):
        where = ":".join(str(p) for p in (source, line) if p is not None)
        super().__init__(f"{where}: {message}" if where else message)
        self.line = line
        self.source = source


@dataclass(frozen=True)
class ScheduleRow:
    value: float
    agg_type: AggType
    relative_interval: float


@dataclass(frozen=True)
class SensorSchedule:
    rows: tuple[ScheduleRow, ...] = ()

    def sense_times(self, start: float = 0.0) -> list[float]:
        t, out = start, []
        for row in self.rows:
            t += row.relative_interval
            out.append(t)
        return out

    def __len__(self):
        return len(self.rows)


def load_schedule(text: str, source: str | None = None) -> SensorSchedule:
    """Parse ``value_cm,agg_type,relative_interval_s`` rows; a header line is optional."""
    rows = []
    for lineno, fields in enumerate(csv.reader(io.StringIO(text)), start=1):
        if not fields or all(not f.strip() for f in fields):
            continue
        if lineno == 1 and fields[0].strip() == SCHEDULE_HEADER[0]:
            continue
        if len(fields) != 3:
            raise ParseError(f"expected 3 columns, got {len(fields)}", lineno, source)
        try:
            value = float(fields[0])
            code = AggType(int(fields[1]))
            interval = float(fields[2])
        except ValueError as exc:
            raise ParseError(str(exc), lineno, source) from None
        if code not in (AggType.MINIMUM, AggType.AVERAGE):
            raise ParseError(f"aggregation type {int(code)} is not 0 or 1", lineno, source)
        if not interval >= 0:
            raise ParseError("relative interval must be non-negative", lineno, source)
        rows.append(ScheduleRow(value, code, interval))
    return SensorSchedule(tuple(rows))


def load_schedule_file(path: Path) -> SensorSchedule:
    return load_schedule(Path(path).read_text(), source=str(path))


def dump_schedule(schedule: SensorSchedule) -> str:
    lines = [",".join(SCHEDULE_HEADER)]
    for r in schedule.rows:
        lines.append(f"{r.value:.3f},{int(r.agg_type)},{r.relative_interval:g}")
    return "\n".join(lines) + "\n"


def synthesize_schedules(node_ids: Sequence[int], seed: int, interval: float, count: int,
                         pattern: Sequence[int] = (0, 0, 0, 0, 1, 0),
                         mean_cm: float = 2.5, spread_cm: float = 0.5) -> dict[int, SensorSchedule]:
    """Synchronised schedules: every node senses at the same instants.

    Readings are uniform in ``mean +/- spread`` with three decimals; the aggregation
    type of each instant cycles through ``pattern`` network-wide.
    """
    out = {}
    for nid in node_ids:
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(nid,))))
        draws = rng.random(count)
        rows = tuple(
            ScheduleRow(round(mean_cm - spread_cm + 2 * spread_cm * float(u), 3),
                        AggType(pattern[k % len(pattern)]),
                        0.0 if k == 0 else float(interval))
            for k, u in enumerate(draws))
        out[nid] = SensorSchedule(rows)
    return out


@dataclass(frozen=True)
class BaseStationRecord:
    arrival_time: float
    sense_time: float
    node_id: int
    value: float
    pos_x: float
    pos_y: float
    agg_type: int
    energy: float
    coverage: int = 1

    def __post_init__(self):
        if self.arrival_time < self.sense_time:
            raise ValueError("record arrived before it was sensed")

    def csv_row(self) -> list[str]:
        return [f"{self.arrival_time:.6f}", f"{self.sense_time:.6f}", str(self.node_id),
                f"{self.value:.6f}", f"{self.pos_x:.1f}", f"{self.pos_y:.1f}",
                str(self.agg_type), f"{self.energy:.3f}"]


def records_to_csv(records: Iterable[BaseStationRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RECORD_HEADER)
    for r in records:
        w.writerow(r.csv_row())
    return buf.getvalue()
