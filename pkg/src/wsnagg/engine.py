"""Deterministic discrete-event simulation of the sensor network.

Time is kept in integer microseconds, energy in integer nanojoules. Events that
fall on the same microsecond run in insertion order. Links are ideal disks: a
transmission reaches every live node within range after ``bits / rate`` seconds.
Every in-range node pays the receive cost (overhearing can be switched off).
"""

from __future__ import annotations

import heapq
import itertools
import logging
import random
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

from . import aggregation as agg
from .energy import Activity, Battery, PowerProfile, path_threshold_nj, to_j, to_nj
from .packet import (AggDataPacket, AggType, CordReply, CordSearch, CordSelect, DataPacket,
                     EventPacket, decode, encode, PacketType, PathEstablish, PathSearch, cm_to_wire, m_to_dm,
                     s_to_ms, wire_size, wire_to_cm)
from .routing import (Admission, RouteEntry, RouteFlag, SearchState, Strategy, Verdict,
                      admit_search_packet, best_entry, greedy_next, hop_length_dm,
                      rebroadcast_fields)
from .scenario import AggMode, App, ConfigError, Scenario
from .schedule import BaseStationRecord
from .topology import NodeSpec, Position, Role, neighbors

log = logging.getLogger(__name__)

US = 1_000_000
DAY_US = 86_400 * US


def transmission_delay(bits: int, data_rate: float, processing_latency: float = 0.0) -> float:
    """Seconds to put ``bits`` on the air plus a fixed per-hop processing latency."""
    if bits <= 0:
        raise ValueError("bits must be positive")
    return bits / data_rate + processing_latency


# -- per-node state ---------------------------------------------------------------

@dataclass
class Window:
    """Aggregation state for one sensing instant at one coordinator."""
    minimum: Optional[agg.MinRecord] = None
    min_count: int = 0
    avg_sum: int = 0  # thousandths of a cm
    avg_count: int = 0


@dataclass
class Node:
    spec: NodeSpec
    battery: Battery
    neighbors: tuple[int, ...]
    search: dict = field(default_factory=dict)
    routes: dict = field(default_factory=dict)
    advertised: dict = field(default_factory=dict)
    seq: int = 0
    power: Activity = Activity.SLEEP
    accrued_us: int = 0
    death_us: Optional[int] = None
    busy: int = 0
    coordinator: Optional[int] = None
    children: set = field(default_factory=set)
    replies: list = field(default_factory=list)
    battery_reported: bool = False
    windows: dict = field(default_factory=dict)
    closed: set = field(default_factory=set)

    @property
    def id(self) -> int:
        return self.spec.id

    @property
    def pos(self) -> Position:
        return self.spec.position

    @property
    def alive(self) -> bool:
        return self.battery.remaining > 0


@dataclass
class FloodMeta:
    path: tuple[int, ...]


@dataclass
class GreedyMeta:
    walk: "GreedyWalk"
    reply: bool = False


@dataclass
class GreedyWalk:
    source: int
    destination: int
    seq: int
    path: list
    visited: set
    replies: dict = field(default_factory=lambda: defaultdict(dict))


@dataclass
class DiscoveryLog:
    source: int
    destination: int
    seq: int
    strategy: Strategy
    started: float
    finished: Optional[float] = None
    path: Optional[tuple[int, ...]] = None
    advertised: dict = field(default_factory=dict)  # node -> mJ used as its metric


@dataclass
class Metrics:
    originated: int = 0
    delivered: int = 0
    route_repairs: int = 0
    undeliverable: int = 0
    stale_drops: int = 0
    lost_packets: int = 0
    orphans: list = field(default_factory=list)
    partial_epochs: list = field(default_factory=list)
    deaths: dict = field(default_factory=dict)
    tx_by_type: dict = field(default_factory=lambda: defaultdict(int))
    discoveries: list = field(default_factory=list)
    bindings: dict = field(default_factory=dict)
    ledgers: dict = field(default_factory=dict)
    remaining: dict = field(default_factory=dict)
    admission_trace: list = field(default_factory=list)

    @property
    def delivery_ratio(self) -> float:
        return self.delivered / self.originated if self.originated else 0.0

    @property
    def first_death_s(self) -> Optional[float]:
        return min(self.deaths.values()) if self.deaths else None

    def totals(self) -> dict[str, float]:
        keys = ("idle", "tx", "rx", "sleep")
        out = {k: sum(l[k] for l in self.ledgers.values()) for k in keys}
        out["radio"] = out["tx"] + out["rx"]
        out["total"] = out["radio"] + out["idle"] + out["sleep"]
        return out

    def summary(self) -> dict:
        return {
            "originated": self.originated,
            "delivered": self.delivered,
            "delivery_ratio": self.delivery_ratio,
            "route_repairs": self.route_repairs,
            "undeliverable": self.undeliverable,
            "stale_drops": self.stale_drops,
            "lost_packets": self.lost_packets,
            "orphans": list(self.orphans),
            "partial_epochs": [list(p) for p in self.partial_epochs],
            "first_death_s": self.first_death_s,
            "deaths": {str(k): v for k, v in sorted(self.deaths.items())},
            "transmissions": {PacketType(k).name: v for k, v in sorted(self.tx_by_type.items())},
            "energy_totals_j": self.totals(),
            "energy_per_node_j": {str(k): v for k, v in sorted(self.ledgers.items())},
            "discoveries": [
                {"source": d.source, "destination": d.destination, "seq": d.seq,
                 "strategy": d.strategy.value, "started": d.started, "finished": d.finished,
                 "path": list(d.path) if d.path else None}
                for d in self.discoveries],
        }


# -- simulator ------------------------------------------------------------------

class Simulator:
    def __init__(self, scenario: Scenario, trace: bool = False):
        self.sc = scenario
        self.profile: PowerProfile = scenario.profile
        self.now_us = 0
        self._queue: list = []
        self._counter = itertools.count()
        self._loss = random.Random(scenario.seed)
        self.trace = trace
        self.trace_rows: list[tuple] = []
        self.records: list[BaseStationRecord] = []
        self.metrics = Metrics()
        adj = neighbors(scenario.nodes, scenario.range_m)
        self.nodes: dict[int, Node] = {
            n.id: Node(n, Battery(to_nj(n.initial_energy)), adj[n.id]) for n in scenario.nodes}
        self.positions = {n.id: n.position for n in scenario.nodes}
        self.bs = scenario.base_station
        if scenario.e_thresh_j is None:
            self.threshold_nj = path_threshold_nj(
                self.profile, wire_size(PacketType.PATH_SEARCH), wire_size(PacketType.DATA))
        else:
            self.threshold_nj = to_nj(scenario.e_thresh_j)
        self.thresholds = agg.Thresholds(to_j(self.threshold_nj), scenario.water_low_cm,
                                         scenario.water_high_cm)
        self.max_hops = scenario.hop_limit
        self._latency_us = int(round(scenario.processing_latency_s * US))
        self._pending: dict[tuple[int, int], list] = {}
        self._discoveries: dict[tuple[int, int, int], DiscoveryLog] = {}
        self._sense_counts: dict[int, int] = defaultdict(int)
        self._handlers = {
            PacketType.PATH_SEARCH: self._on_path_search,
            PacketType.PATH_ESTABLISH: self._on_path_establish,
            PacketType.CORD_SEARCH: self._on_cord_search,
            PacketType.CORD_REPLY: self._on_cord_reply,
            PacketType.CORD_SELECT: self._on_cord_select,
            PacketType.DATA: self._on_data,
            PacketType.AGG_DATA: self._on_data,
            PacketType.EVENT: self._on_event,
        }
        for node in self.nodes.values():
            self._refresh_power(node)

    # -- clock and queue ----------------------------------------------------------

    @property
    def now(self) -> float:
        return self.now_us / US

    def at(self, time_us: int, fn: Callable, *args) -> None:
        if time_us < self.now_us:
            raise ValueError("cannot schedule into the past")
        heapq.heappush(self._queue, (time_us, next(self._counter), fn, args))

    def after(self, seconds: float, fn: Callable, *args) -> None:
        self.at(self.now_us + int(round(seconds * US)), fn, *args)

    def run_until(self, horizon_us: int) -> None:
        while self._queue and self._queue[0][0] <= horizon_us:
            t, _, fn, args = heapq.heappop(self._queue)
            self.now_us = t
            fn(*args)
        self.now_us = max(self.now_us, horizon_us)

    def drain(self, limit_us: Optional[int] = None) -> None:
        """Process events until the queue empties (or ``limit_us`` is reached)."""
        while self._queue and (limit_us is None or self._queue[0][0] <= limit_us):
            t, _, fn, args = heapq.heappop(self._queue)
            self.now_us = t
            fn(*args)

    # -- energy -------------------------------------------------------------------

    def _in_sleep_window(self, t_us: int) -> bool:
        win = self.sc.sleep_window
        if not win:
            return False
        start, end = (int(round(w * US)) % DAY_US for w in win)
        tod = t_us % DAY_US
        return start <= tod < end if start <= end else (tod >= start or tod < end)

    def _window_edges(self, t0: int, t1: int):
        """Split [t0, t1) at sleep-window boundaries."""
        win = self.sc.sleep_window
        if not win:
            return [(t0, t1)]
        cuts = set()
        first_day = t0 // DAY_US
        for day in range(first_day, t1 // DAY_US + 1):
            for w in win:
                c = day * DAY_US + int(round(w * US)) % DAY_US
                if t0 < c < t1:
                    cuts.add(c)
        edges = [t0, *sorted(cuts), t1]
        return list(zip(edges, edges[1:]))

    def _settle(self, node: Node) -> None:
        """Charge idle/sleep time up to now."""
        t0, t1 = node.accrued_us, self.now_us
        node.accrued_us = t1
        if t1 <= t0 or not node.alive:
            return
        for a, b in self._window_edges(t0, t1):
            state = Activity.SLEEP if self._in_sleep_window(a) else node.power
            cost = self.profile.state_cost_nj(state, b - a)
            before = node.battery.remaining
            node.battery.draw(state, cost)
            if not node.alive:
                nw = self.profile.nanowatts(state)
                self._mark_dead(node, a + (before * US) // nw)
                return

    def _mark_dead(self, node: Node, when_us: Optional[int] = None) -> None:
        if node.death_us is None:
            node.death_us = self.now_us if when_us is None else min(when_us, self.now_us)
            self.metrics.deaths[node.id] = node.death_us / US
            log.debug("node %d died at %.6f s", node.id, node.death_us / US)

    def _refresh_power(self, node: Node) -> None:
        wanted = Activity.IDLE if (node.routes or node.busy or node.spec.role is Role.BASE_STATION) \
            else Activity.SLEEP
        if wanted is not node.power:
            self._settle(node)
            node.power = wanted

    def _draw(self, node: Node, activity: Activity, nj: int) -> bool:
        got = node.battery.draw(activity, nj)
        if not node.alive:
            self._mark_dead(node)
        return got == nj

    def _usable(self, node_id: int) -> bool:
        node = self.nodes[node_id]
        self._settle(node)
        return node.alive and node.battery.remaining >= self.threshold_nj

    # -- radio --------------------------------------------------------------------

    def delay_us(self, bits: int) -> int:
        return int(round(bits * US / self.profile.data_rate)) + self._latency_us

    def transmit(self, sender_id: int, packet, to: Optional[int] = None, meta: Any = None) -> bool:
        """Send one packet; ``to=None`` broadcasts. Returns False if the sender could not."""
        node = self.nodes[sender_id]
        self._settle(node)
        if not node.alive:
            return False
        packet = decode(encode(packet))  # only what fits the wire format travels
        bits = wire_size(packet.TYPE)
        if not self._draw(node, Activity.TRANSMIT, self.profile.radio_cost_nj(Activity.TRANSMIT, bits)):
            return False
        self.metrics.tx_by_type[packet.TYPE] += 1
        if self.trace:
            self.trace_rows.append((self.now, sender_id, packet.TYPE.name, -1 if to is None else to, bits))
        rx_cost = self.profile.radio_cost_nj(Activity.RECEIVE, bits)
        arrival = self.now_us + self.delay_us(bits)
        for nb in node.neighbors:
            intended = to is None or nb == to
            if not intended and not self.sc.overhearing:
                continue
            rcv = self.nodes[nb]
            self._settle(rcv)
            if not rcv.alive:
                continue
            if intended and isinstance(packet, PathSearch) and isinstance(meta, FloodMeta):
                key = (packet.source, packet.destination)
                seen = rcv.advertised.get(key)
                if seen is None or seen[0] != packet.seq:
                    rcv.advertised[key] = (packet.seq, rcv.battery.remaining_mj)
            if not self._draw(rcv, Activity.RECEIVE, rx_cost) or not intended:
                continue
            if self.sc.loss_rate and self._loss.random() < self.sc.loss_rate:
                self.metrics.lost_packets += 1
                continue
            self.at(arrival, self._deliver, nb, sender_id, packet, meta)
        return True

    def _deliver(self, node_id: int, sender: int, packet, meta) -> None:
        node = self.nodes[node_id]
        self._settle(node)
        if node.alive:
            self._handlers[packet.TYPE](node, sender, packet, meta)

    # -- path discovery -----------------------------------------------------------

    def _participates(self, node: Node) -> bool:
        return self.sc.routing_participants == "all" or node.spec.coordinates

    def discover(self, src: int, dst: int, on_done: Callable[[Optional[tuple]], None],
                 strategy: Optional[Strategy] = None) -> None:
        """Start (or join) a discovery from ``src`` to ``dst``; ``on_done`` gets the path or None."""
        strategy = strategy or self.sc.strategy
        node = self.nodes[src]
        waiting = self._pending.get((src, dst))
        if waiting is not None:
            waiting.append(on_done)
            return
        self._settle(node)
        if not node.alive:
            on_done(None)
            return
        self._pending[(src, dst)] = [on_done]
        node.seq = (node.seq + 1) % 256
        seq = node.seq
        record = DiscoveryLog(src, dst, seq, strategy, self.now)
        self._discoveries[(src, dst, seq)] = record
        self.metrics.discoveries.append(record)
        node.busy += 1
        self._refresh_power(node)
        own = node.battery.remaining_mj
        record.advertised[src] = own
        if strategy is Strategy.GREEDY:
            walk = GreedyWalk(src, dst, seq, [src], {src})
            self._greedy_query(walk)
        else:
            x, y = m_to_dm(node.pos.x), m_to_dm(node.pos.y)
            self.transmit(src, PathSearch(seq, 0, src, dst, own, own, 0, x, y), meta=FloodMeta((src,)))
        ps_us = self.delay_us(wire_size(PacketType.PATH_SEARCH))
        pe_us = self.delay_us(wire_size(PacketType.PATH_ESTABLISH))
        hops = self.max_hops + 1
        budget = int(round(self.sc.settle_s * US)) + hops * (ps_us + pe_us) + US
        if strategy is Strategy.GREEDY:
            budget = len(self.nodes) * 2 * hops * (3 * ps_us + US // 100) + hops * pe_us + US
        self.at(self.now_us + budget, self._discovery_timeout, src, dst, seq)

    def _finish_discovery(self, src: int, dst: int, seq: int, path: Optional[tuple]) -> None:
        record = self._discoveries.get((src, dst, seq))
        if record is None or record.finished is not None:
            return
        record.finished = self.now
        record.path = path
        node = self.nodes[src]
        node.busy -= 1
        self._refresh_power(node)
        for cb in self._pending.pop((src, dst), []):
            cb(path)

    def _discovery_timeout(self, src: int, dst: int, seq: int) -> None:
        record = self._discoveries.get((src, dst, seq))
        if record is not None and record.finished is None:
            log.debug("discovery %d->%d seq %d timed out", src, dst, seq)
            self._finish_discovery(src, dst, seq, None)

    def _on_path_search(self, node: Node, sender: int, pkt: PathSearch, meta) -> None:
        if isinstance(meta, GreedyMeta):
            self._on_greedy(node, sender, pkt, meta)
            return
        src, dst = pkt.source, pkt.destination
        if node.id == src or not self._participates(node):
            return
        record = self._discoveries[(src, dst, pkt.seq)]
        strategy = record.strategy
        own = node.advertised.get((src, dst), (pkt.seq, node.battery.remaining_mj))[1]
        candidate = RouteEntry(
            destination=dst, source=src, next_hop=None, previous_hop=sender,
            time_stamp=self.now, sequence_number=pkt.seq, hop_count=pkt.hop + 1,
            minimum_energy=pkt.min_energy, path_total_energy=pkt.path_total_energy,
            distance_traversed=pkt.distance_traversed + hop_length_dm(self.positions[sender], node.pos),
            neighbour_list=node.neighbors, path=meta.path + (node.id,))
        rules = Admission(strategy, own, node.battery.remaining, self.threshold_nj, self.max_hops,
                          self.sc.directional and strategy is Strategy.MAX_MIN,
                          node.pos, self.positions[src], self.positions[dst])
        verdict, state = admit_search_packet(node.search.get((src, dst)), candidate, rules)
        if self.trace:
            self.metrics.admission_trace.append((src, dst, pkt.seq, candidate.path, verdict))
        if verdict is not Verdict.ACCEPT:
            return
        record.advertised.setdefault(node.id, own)
        first = (src, dst) not in node.search or node.search[(src, dst)].sequence_number != pkt.seq
        node.search[(src, dst)] = state
        if node.id == dst:
            if first:
                self.after(self.sc.settle_s, self._choose_route, node.id, src, pkt.seq)
            return
        m, t = rebroadcast_fields(candidate, own)
        self.transmit(node.id, PathSearch(pkt.seq, candidate.hop_count, src, dst, m, t,
                                          candidate.distance_traversed,
                                          m_to_dm(node.pos.x), m_to_dm(node.pos.y)),
                      meta=FloodMeta(candidate.path))

    def _choose_route(self, dst_id: int, src: int, seq: int) -> None:
        node = self.nodes[dst_id]
        state: SearchState = node.search.get((src, dst_id))
        if state is None or state.sequence_number != seq or not node.alive:
            return
        record = self._discoveries[(src, dst_id, seq)]
        best = best_entry(state.entries, record.strategy, own_mj=state.advertised_mj)
        self._establish_from_destination(node, best.path, seq)

    def _establish_from_destination(self, node: Node, path: tuple, seq: int) -> None:
        src, dst = path[0], path[-1]
        self._install_route(node, path, seq)
        self.transmit(dst, PathEstablish(seq, 0, src, dst), to=path[-2], meta=FloodMeta(path))

    def _install_route(self, node: Node, path: tuple, seq: int) -> None:
        i = path.index(node.id)
        node.routes[(path[0], path[-1])] = RouteEntry(
            destination=path[-1], source=path[0],
            next_hop=path[i + 1] if i + 1 < len(path) else None,
            previous_hop=path[i - 1] if i > 0 else None,
            time_stamp=self.now, sequence_number=seq, hop_count=i,
            minimum_energy=0, path_total_energy=0, distance_traversed=0,
            route_establish_flag=RouteFlag.ESTABLISHED, neighbour_list=node.neighbors, path=path)
        self._refresh_power(node)

    def _on_path_establish(self, node: Node, sender: int, pkt: PathEstablish, meta: FloodMeta) -> None:
        path = meta.path
        if node.id not in path:
            return
        self._install_route(node, path, pkt.seq)
        i = path.index(node.id)
        if i == 0:
            self._finish_discovery(pkt.source, pkt.destination, pkt.seq, path)
        else:
            self.transmit(node.id, PathEstablish(pkt.seq, pkt.hop + 1, pkt.source, pkt.destination),
                          to=path[i - 1], meta=meta)

    # greedy neighbour-energy walk

    def _greedy_query(self, walk: GreedyWalk) -> None:
        cur = self.nodes[walk.path[-1]]
        own = cur.battery.remaining_mj
        ok = self.transmit(cur.id, PathSearch(walk.seq, len(walk.path) - 1, walk.source, walk.destination,
                                              own, own, 0, m_to_dm(cur.pos.x), m_to_dm(cur.pos.y)),
                           meta=GreedyMeta(walk))
        if not ok:
            self._finish_discovery(walk.source, walk.destination, walk.seq, None)
            return
        ps_us = self.delay_us(wire_size(PacketType.PATH_SEARCH))
        self.at(self.now_us + 2 * ps_us + US // 100, self._greedy_decide, walk)

    def _on_greedy(self, node: Node, sender: int, pkt: PathSearch, meta: GreedyMeta) -> None:
        walk = meta.walk
        if meta.reply:
            walk.replies[node.id][sender] = pkt.min_energy
            return
        if not self._participates(node) or node.battery.remaining < self.threshold_nj:
            return
        own = node.battery.remaining_mj
        self.transmit(node.id, PathSearch(pkt.seq, pkt.hop, pkt.source, pkt.destination, own, own, 0,
                                          m_to_dm(node.pos.x), m_to_dm(node.pos.y)),
                      to=sender, meta=GreedyMeta(walk, reply=True))

    def _greedy_decide(self, walk: GreedyWalk) -> None:
        record = self._discoveries[(walk.source, walk.destination, walk.seq)]
        if record.finished is not None:
            return
        while walk.path:
            cur = walk.path[-1]
            options = walk.replies.get(cur, {})
            nxt = greedy_next(options, walk.visited, walk.destination) \
                if len(walk.path) < self.max_hops else None
            if nxt is not None:
                break
            walk.path.pop()
        if not walk.path:
            self._finish_discovery(walk.source, walk.destination, walk.seq, None)
            return
        record.advertised[nxt] = walk.replies[walk.path[-1]][nxt]
        walk.path.append(nxt)
        walk.visited.add(nxt)
        if nxt == walk.destination:
            self._establish_from_destination(self.nodes[nxt], tuple(walk.path), walk.seq)
        elif nxt in walk.replies:
            self._greedy_decide(walk)
        else:
            self._greedy_query(walk)

    # -- routed delivery ----------------------------------------------------------

    def route_for(self, node: Node, dst: int) -> Optional[RouteEntry]:
        own = node.routes.get((node.id, dst))
        if own is not None and own.next_hop is not None:
            return own
        others = [r for (s, d), r in node.routes.items() if d == dst and r.next_hop is not None]
        return min(others, key=lambda r: r.source) if others else None

    def send_toward(self, node_id: int, dst: int, packet) -> None:
        """Forward along an established route, repairing it through a fresh discovery if needed."""
        node = self.nodes[node_id]
        if packet.hop >= self.max_hops:
            self.metrics.undeliverable += 1
            return
        route = self.route_for(node, dst)
        if route is not None and self._usable(route.next_hop):
            if not self.transmit(node_id, packet, to=route.next_hop):
                self.metrics.undeliverable += 1
            return
        if route is not None:
            self.metrics.route_repairs += 1
            for key in [k for k, r in node.routes.items() if r.next_hop == route.next_hop and k[1] == dst]:
                del node.routes[key]
            self._refresh_power(node)

        def resume(path):
            if path is None or not self.nodes[node_id].alive:
                self.metrics.undeliverable += 1
            else:
                self.send_toward(node_id, dst, packet)

        self.discover(node_id, dst, resume)

    # -- coordinator association ----------------------------------------------------

    def _start_handshake(self) -> None:
        for node in self.nodes.values():
            if node.spec.role is Role.NON_COORDINATOR:
                node.busy += 1
                self._refresh_power(node)
                self.transmit(node.id, CordSearch(1, 0, node.id))
        self.after(self.sc.handshake_window_s, self._finish_handshake)

    def _on_cord_search(self, node: Node, sender: int, pkt: CordSearch, meta) -> None:
        if node.spec.coordinates:
            self.transmit(node.id, CordReply(pkt.seq, 0, node.id, m_to_dm(node.pos.x), m_to_dm(node.pos.y),
                                             node.battery.remaining_mj), to=sender)

    def _on_cord_reply(self, node: Node, sender: int, pkt: CordReply, meta) -> None:
        node.replies.append(pkt)

    def _finish_handshake(self) -> None:
        for node in self.nodes.values():
            if node.spec.role is not Role.NON_COORDINATOR:
                continue
            node.busy -= 1
            self._refresh_power(node)
            try:
                chosen = agg.select_coordinator(node.replies, node.pos, self.sc.band, self.sc.range_m)
            except agg.NoCoordinatorInRange:
                self.metrics.orphans.append(node.id)
                continue
            node.coordinator = chosen
            self.metrics.bindings[node.id] = chosen
            sched = self.sc.schedules.get(node.id)
            summary = cm_to_wire(sched.rows[0].value) if sched and sched.rows else 0
            self.transmit(node.id, CordSelect(1, 0, node.id, chosen, summary), to=chosen)

    def _on_cord_select(self, node: Node, sender: int, pkt: CordSelect, meta) -> None:
        if pkt.coordinator == node.id:
            node.children.add(pkt.non_coordinator)

    def _setup_routes(self) -> None:
        for node in self.nodes.values():
            if node.spec.role is Role.COORDINATOR:
                self.discover(node.id, self.bs, lambda path: None)

    # -- sensing and aggregation --------------------------------------------------

    def _data_packet(self, node: Node, reading: float, agg_type: AggType, cls=DataPacket, count=1,
                     value: Optional[int] = None):
        return cls(0, 0, node.id, cm_to_wire(reading) if value is None else value, s_to_ms(self.now),
                   m_to_dm(node.pos.x), m_to_dm(node.pos.y), node.battery.remaining_mj,
                   int(agg_type), count)

    def _sense(self, node_id: int, reading: float, agg_type: AggType) -> None:
        node = self.nodes[node_id]
        self._settle(node)
        if not node.alive or self._in_sleep_window(self.now_us):
            return
        key = s_to_ms(self.now)
        self.metrics.originated += 1
        if agg_type is AggType.MINIMUM:
            self._sense_counts[key] += 1
        codes = agg.check_event(reading, node.battery.remaining_j, self.thresholds, node.battery_reported)
        for code in codes:
            if code is AggType.LOW_BATTERY:
                node.battery_reported = True
            ev = EventPacket(0, 0, node.id, cm_to_wire(reading), node.battery.remaining_mj,
                             m_to_dm(node.pos.x), m_to_dm(node.pos.y), key, int(code))
            self._dispatch_upward(node, ev)
        if not node.alive:
            return
        role = node.spec.role
        if role is Role.NON_COORDINATOR:
            if node.coordinator is None:
                self.metrics.undeliverable += 1
            else:
                self.transmit(node.id, self._data_packet(node, reading, agg_type), to=node.coordinator)
        elif self.sc.mode is AggMode.ALL_DATA:
            pkt = self._data_packet(node, reading, agg_type)
            if role is Role.BASE_STATION:
                self._record_data(pkt)
            else:
                self.send_toward(node.id, self.bs, pkt)
        else:
            self._fold_reading(node, self._data_packet(node, reading, agg_type))

    def _dispatch_upward(self, node: Node, pkt) -> None:
        if node.spec.role is Role.BASE_STATION:
            self._record_event(pkt)
        elif node.spec.role is Role.NON_COORDINATOR:
            if node.coordinator is not None:
                self.transmit(node.id, pkt, to=node.coordinator)
            else:
                self.metrics.undeliverable += 1
        else:
            self.send_toward(node.id, self.bs, pkt)

    def _on_event(self, node: Node, sender: int, pkt: EventPacket, meta) -> None:
        if node.id == self.bs:
            self._record_event(pkt)
        elif node.spec.coordinates:
            self.send_toward(node.id, self.bs, _hop(pkt))

    def _on_data(self, node: Node, sender: int, pkt: DataPacket, meta) -> None:
        if self.sc.app is App.ROUTING:
            if node.id == self.sc.destination:
                self.metrics.delivered += 1
                self._record_data(pkt)
            else:
                self.send_toward(node.id, self.sc.destination, _hop(pkt))
            return
        if not node.spec.coordinates:
            return
        relay = (self.sc.mode is AggMode.ALL_DATA
                 or (pkt.TYPE is PacketType.AGG_DATA and pkt.agg_type == AggType.AVERAGE))
        if relay:
            if node.id == self.bs:
                self._record_data(pkt)
            else:
                self.send_toward(node.id, self.bs, _hop(pkt))
        else:
            self._fold_reading(node, pkt)

    def _tree_depth(self, node: Node) -> Optional[int]:
        depth, cur, seen = 0, node, set()
        while cur.id != self.bs:
            if cur.id in seen:
                return None
            seen.add(cur.id)
            route = self.route_for(cur, self.bs)
            if route is None:
                return None
            cur = self.nodes[route.next_hop]
            depth += 1
        return depth

    def _fold_reading(self, node: Node, pkt: DataPacket) -> None:
        key = pkt.sense_time
        if key in node.closed:
            self.metrics.stale_drops += 1
            return
        win = node.windows.get(key)
        if win is None:
            win = node.windows[key] = Window()
            depth = self._tree_depth(node)
            slots = 0 if depth is None else max(self.max_hops - depth, 0)
            close_us = key * 1000 + int(round((self.sc.collect_window_s + slots * self.sc.hop_slot_s) * US))
            node.busy += 1
            self._refresh_power(node)
            self.at(max(close_us, self.now_us), self._close_window, node.id, key)
        if pkt.agg_type == AggType.MINIMUM:
            rec = agg.MinRecord(wire_to_cm(pkt.value), pkt.origin, Position(pkt.x / 10, pkt.y / 10),
                                pkt.sense_time / 1000, pkt.energy / 1000)
            try:
                win.minimum = agg.fold_min(win.minimum, rec, key / 1000)
            except agg.StaleData:
                self.metrics.stale_drops += 1
                return
            win.min_count += pkt.count
        else:
            win.avg_sum += pkt.value
            win.avg_count += pkt.count

    def _close_window(self, node_id: int, key: int) -> None:
        node = self.nodes[node_id]
        win = node.windows.pop(key)
        node.closed.add(key)
        node.busy -= 1
        self._refresh_power(node)
        self._settle(node)
        if not node.alive:
            return
        if win.minimum is not None:
            m = win.minimum
            pkt = AggDataPacket(0, 0, m.origin, cm_to_wire(m.value), key, m_to_dm(m.origin_position.x),
                                m_to_dm(m.origin_position.y), int(round(m.origin_energy * 1000)),
                                int(AggType.MINIMUM), win.min_count)
            if node.id == self.bs:
                self._record_data(pkt)
                expected = self._sense_counts.get(key, 0)
                if win.min_count < expected:
                    self.metrics.partial_epochs.append((key / 1000, win.min_count, expected))
            else:
                self.send_toward(node.id, self.bs, pkt)
        if win.avg_count:
            pkt = AggDataPacket(0, 0, node.id, win.avg_sum, key, m_to_dm(node.pos.x), m_to_dm(node.pos.y),
                                node.battery.remaining_mj, int(AggType.AVERAGE), win.avg_count)
            if node.id == self.bs:
                self._record_data(pkt)
            else:
                self.send_toward(node.id, self.bs, pkt)

    def _record_data(self, pkt: DataPacket) -> None:
        if self.sc.app is App.AGGREGATION:
            self.metrics.delivered += pkt.count
        value = wire_to_cm(pkt.value)
        if pkt.agg_type == AggType.AVERAGE:
            value = value / pkt.count
        self.records.append(BaseStationRecord(
            self.now, pkt.sense_time / 1000, pkt.origin, value, pkt.x / 10, pkt.y / 10,
            pkt.agg_type, pkt.energy / 1000, pkt.count))

    def _record_event(self, pkt: EventPacket) -> None:
        self.records.append(BaseStationRecord(
            self.now, pkt.sense_time / 1000, pkt.origin, wire_to_cm(pkt.value), pkt.x / 10, pkt.y / 10,
            pkt.event_code, pkt.energy / 1000))

    # -- routing experiment -------------------------------------------------------

    def _source_round(self, k: int) -> None:
        src = self.nodes[self.sc.source]
        self._settle(src)
        self.metrics.originated += 1
        if not src.alive:
            self.metrics.undeliverable += 1
            return
        pkt = DataPacket(k % 256, 0, src.id, 0, s_to_ms(self.now), m_to_dm(src.pos.x),
                         m_to_dm(src.pos.y), src.battery.remaining_mj, int(AggType.MINIMUM))
        self.send_toward(src.id, self.sc.destination, pkt)

    # -- top level --------------------------------------------------------------

    def schedule_scenario(self) -> None:
        sc = self.sc
        if sc.app is App.ROUTING:
            for k in range(sc.packets):
                self.after(sc.start_s + k * sc.interval_s, self._source_round, k)
            return
        self.after(0.0, self._start_handshake)
        if sc.mode is AggMode.HANDSHAKE_ONLY:
            return
        self.after(sc.route_setup_s, self._setup_routes)
        for nid in sorted(sc.schedules):
            if nid not in self.nodes:
                raise ConfigError(f"schedule given for unknown node {nid}")
            sched = sc.schedules[nid]
            for row, t in zip(sched.rows, sched.sense_times(sc.sensing_start_s)):
                self.after(t, self._sense, nid, row.value, row.agg_type)

    def finish(self) -> None:
        for node in self.nodes.values():
            self._settle(node)
            self.metrics.ledgers[node.id] = node.battery.ledger.as_joules()
            self.metrics.remaining[node.id] = node.battery.remaining_j

    def balanced(self) -> bool:
        return all(n.battery.balanced() for n in self.nodes.values())

    def run(self) -> tuple[list[BaseStationRecord], Metrics]:
        if self.sc.duration_s > 0:
            self.schedule_scenario()
        self.run_until(int(round(self.sc.duration_s * US)))
        self.finish()
        return self.records, self.metrics


def _hop(pkt):
    from .packet import with_fields
    return with_fields(pkt, hop=min(pkt.hop + 1, 255))


def run(scenario: Scenario, trace: bool = False) -> tuple[list[BaseStationRecord], Metrics]:
    return Simulator(scenario, trace=trace).run()


def discover_path(nodes: list[NodeSpec], src: int, dst: int, strategy: Strategy, *,
                  range_m: float = 528.0, energies_mj: Optional[dict[int, int]] = None,
                  directional: bool = True, max_hop_count: Optional[int] = None,
                  settle_s: float = 2.0, trace: bool = False,
                  scenario_kwargs: Optional[dict] = None) -> tuple[Optional[tuple[int, ...]], Simulator]:
    """Run one discovery on a fresh network and return (path or None, simulator).

    ``energies_mj`` sets each battery to that many millijoules plus half a
    millijoule of headroom, so the advertised (floored) value is exactly the
    given one despite the small drain of the flood itself.
    """
    from dataclasses import replace
    if energies_mj:
        nodes = [replace(n, initial_energy=(energies_mj[n.id] + 0.5) / 1000) for n in nodes]
    sc = Scenario(nodes=list(nodes), app=App.ROUTING, duration_s=0, source=src, destination=dst,
                  base_station=dst, range_m=range_m, strategy=strategy, directional=directional,
                  max_hop_count=max_hop_count or len(nodes) + 1, settle_s=settle_s,
                  **(scenario_kwargs or {}))
    sim = Simulator(sc, trace=trace)
    result: list = []
    sim.discover(src, dst, result.append)
    sim.drain()
    sim.finish()
    return (result[0] if result else None), sim
