"""Control and data packet formats with a big-endian, word-aligned wire encoding.

Every packet starts with the 32-bit header ``type | seq | hop | reserved(0)``.
Field units on the wire: addresses are 32-bit ids, energies are millijoules,
positions and distances are decimeters, readings are thousandths of a centimetre
and sensing times are milliseconds.
"""

from __future__ import annotations

import enum
import struct
from dataclasses import dataclass, fields
from typing import ClassVar, Union


class InvariantViolation(ValueError):
    pass


class MalformedPacket(ValueError):
    pass


class PacketType(enum.IntEnum):
    PATH_SEARCH = 1
    PATH_ESTABLISH = 2
    CORD_SEARCH = 3
    CORD_REPLY = 4
    CORD_SELECT = 5
    DATA = 6
    AGG_DATA = 7
    EVENT = 8


class AggType(enum.IntEnum):
    MINIMUM = 0
    AVERAGE = 1
    LOW_BATTERY = 2
    LOW_WATER = 3
    HIGH_WATER = 4


EVENT_CODES = frozenset({AggType.LOW_BATTERY, AggType.LOW_WATER, AggType.HIGH_WATER})

_HEADER = struct.Struct(">BBBB")
_U8, _U16, _U32 = 0xFF, 0xFFFF, 0xFFFF_FFFF


def cm_to_wire(value_cm: float) -> int:
    return int(round(value_cm * 1000))


def wire_to_cm(value: int) -> float:
    return value / 1000


def m_to_dm(meters: float) -> int:
    return int(round(meters * 10))


def s_to_ms(seconds: float) -> int:
    return int(round(seconds * 1000))


@dataclass(frozen=True)
class _Packet:
    TYPE: ClassVar[PacketType]
    BODY: ClassVar[struct.Struct]
    # body field name -> max value
    WIDTHS: ClassVar[dict[str, int]]

    def _check(self) -> None:
        for name in ("seq", "hop"):
            v = getattr(self, name)
            if not 0 <= v <= _U8:
                raise InvariantViolation(f"{name}={v} exceeds 8 bits")
        for name, top in self.WIDTHS.items():
            v = getattr(self, name)
            if not isinstance(v, int) or not 0 <= v <= top:
                raise InvariantViolation(f"{type(self).__name__}.{name}={v!r} out of range")

    def _body(self) -> tuple:
        return tuple(getattr(self, n) for n in self.WIDTHS)

    @classmethod
    def _from_body(cls, seq, hop, values):
        return cls(seq, hop, *values)


@dataclass(frozen=True)
class PathSearch(_Packet):
    seq: int
    hop: int
    source: int
    destination: int
    min_energy: int
    path_total_energy: int
    distance_traversed: int
    sender_x: int
    sender_y: int

    TYPE = PacketType.PATH_SEARCH
    BODY = struct.Struct(">7I")
    WIDTHS = dict.fromkeys(["source", "destination", "min_energy", "path_total_energy",
                            "distance_traversed", "sender_x", "sender_y"], _U32)

    def _check(self):
        super()._check()
        if self.min_energy > self.path_total_energy:
            raise InvariantViolation("min_energy exceeds path_total_energy")


@dataclass(frozen=True)
class PathEstablish(_Packet):
    seq: int
    hop: int
    source: int
    destination: int

    TYPE = PacketType.PATH_ESTABLISH
    BODY = struct.Struct(">2I")
    WIDTHS = dict.fromkeys(["source", "destination"], _U32)


@dataclass(frozen=True)
class CordSearch(_Packet):
    seq: int
    hop: int
    source: int

    TYPE = PacketType.CORD_SEARCH
    BODY = struct.Struct(">I")
    WIDTHS = {"source": _U32}


@dataclass(frozen=True)
class CordReply(_Packet):
    seq: int
    hop: int
    coordinator: int
    x: int
    y: int
    energy: int

    TYPE = PacketType.CORD_REPLY
    BODY = struct.Struct(">4I")
    WIDTHS = dict.fromkeys(["coordinator", "x", "y", "energy"], _U32)


@dataclass(frozen=True)
class CordSelect(_Packet):
    seq: int
    hop: int
    non_coordinator: int
    coordinator: int
    value: int

    TYPE = PacketType.CORD_SELECT
    BODY = struct.Struct(">3I")
    WIDTHS = dict.fromkeys(["non_coordinator", "coordinator", "value"], _U32)


@dataclass(frozen=True)
class DataPacket(_Packet):
    """A reading, or an aggregate of ``count`` readings.

    For averages ``value`` carries the sum of the readings; the receiver divides
    by ``count``, which keeps the mean exact across hops.
    """
    seq: int
    hop: int
    origin: int
    value: int
    sense_time: int
    x: int
    y: int
    energy: int
    agg_type: int
    count: int = 1

    TYPE = PacketType.DATA
    BODY = struct.Struct(">6IBBH")
    WIDTHS = {**dict.fromkeys(["origin", "value", "sense_time", "x", "y", "energy"], _U32),
              "agg_type": _U8, "count": _U8}

    def _check(self):
        super()._check()
        if self.agg_type not in (AggType.MINIMUM, AggType.AVERAGE):
            raise InvariantViolation(f"agg_type {self.agg_type} is not an aggregation code")

    def _body(self):
        return super()._body() + (0,)

    @classmethod
    def _from_body(cls, seq, hop, values):
        *values, pad = values
        if pad:
            raise MalformedPacket("nonzero reserved bits")
        return cls(seq, hop, *values)

    @property
    def mean_cm(self) -> float:
        return wire_to_cm(self.value) / self.count if self.agg_type == AggType.AVERAGE else wire_to_cm(self.value)


@dataclass(frozen=True)
class AggDataPacket(DataPacket):
    TYPE = PacketType.AGG_DATA


@dataclass(frozen=True)
class EventPacket(_Packet):
    seq: int
    hop: int
    origin: int
    value: int
    energy: int
    x: int
    y: int
    sense_time: int
    event_code: int

    TYPE = PacketType.EVENT
    BODY = struct.Struct(">6IBBH")
    WIDTHS = {**dict.fromkeys(["origin", "value", "energy", "x", "y", "sense_time"], _U32),
              "event_code": _U8}

    def _check(self):
        super()._check()
        if self.event_code not in EVENT_CODES:
            raise InvariantViolation(f"event code {self.event_code} not in {sorted(EVENT_CODES)}")

    def _body(self):
        return super()._body() + (0, 0)

    @classmethod
    def _from_body(cls, seq, hop, values):
        *values, pad8, pad16 = values
        if pad8 or pad16:
            raise MalformedPacket("nonzero reserved bits")
        return cls(seq, hop, *values)


Packet = Union[PathSearch, PathEstablish, CordSearch, CordReply, CordSelect,
               DataPacket, AggDataPacket, EventPacket]

_BY_TYPE = {cls.TYPE: cls for cls in (PathSearch, PathEstablish, CordSearch, CordReply,
                                      CordSelect, DataPacket, AggDataPacket, EventPacket)}


def encode(packet: Packet) -> bytes:
    packet._check()
    return _HEADER.pack(packet.TYPE, packet.seq, packet.hop, 0) + packet.BODY.pack(*packet._body())


def decode(data: bytes) -> Packet:
    if len(data) < _HEADER.size:
        raise MalformedPacket(f"{len(data)} bytes is shorter than a header")
    code, seq, hop, reserved = _HEADER.unpack_from(data)
    try:
        cls = _BY_TYPE[PacketType(code)]
    except ValueError:
        raise MalformedPacket(f"unknown packet type 0x{code:02X}") from None
    if reserved:
        raise MalformedPacket("nonzero reserved header byte")
    expected = _HEADER.size + cls.BODY.size
    if len(data) != expected:
        raise MalformedPacket(f"{cls.TYPE.name} needs {expected} bytes, got {len(data)}")
    packet = cls._from_body(seq, hop, cls.BODY.unpack_from(data, _HEADER.size))
    try:
        packet._check()
    except InvariantViolation as exc:
        raise MalformedPacket(str(exc)) from exc
    return packet


def wire_size(packet_type: PacketType) -> int:
    """Size in bits of a packet of the given type."""
    cls = _BY_TYPE[PacketType(packet_type)]
    return 8 * (_HEADER.size + cls.BODY.size)


def with_fields(packet: Packet, **changes) -> Packet:
    values = {f.name: getattr(packet, f.name) for f in fields(packet)}
    values.update(changes)
    return type(packet)(**values)
