from dataclasses import replace
from pathlib import Path

import pytest

from wsnagg.engine import Simulator, discover_path, run, transmission_delay
from wsnagg.packet import PacketType
from wsnagg.routing import RouteFlag, Strategy
from wsnagg.scenario import App, Scenario, load_scenario
from wsnagg.topology import NodeSpec, Position, Role, TopologyKind, generate_coordinator_grid

SCENARIOS = Path(__file__).parent.parent / "scenarios"


def line(n, energy=10.0, spacing=100.0):
    return [NodeSpec(i, Position(i * spacing, 0), Role.COORDINATOR, energy) for i in range(n)]


def routing(nodes, src, dst, **kw):
    kw.setdefault("range_m", 100)
    return Scenario(nodes=nodes, app=App.ROUTING, source=src, destination=dst, **kw)


def test_transmission_delay():
    assert transmission_delay(256, 76800) == pytest.approx(3.333e-3, abs=1e-6)
    assert transmission_delay(96, 76800) == pytest.approx(1.25e-3)
    assert transmission_delay(512, 76800) == pytest.approx(2 * transmission_delay(256, 76800))
    with pytest.raises(ValueError):
        transmission_delay(0, 76800)


def test_single_packet_delivered_with_energy_split():
    sc = routing(line(4), 0, 3, packets=1, duration_s=60)
    records, m = run(sc)
    assert (m.originated, m.delivered) == (1, 1)
    assert len(records) == 1 and records[0].node_id == 0
    tot = m.totals()
    assert tot["tx"] > 0 and tot["rx"] > 0 and tot["idle"] > 0


def test_24_attempts_over_6900_s():
    sc = routing(line(3, energy=20304.0), 0, 2, packets=24, interval_s=300, start_s=0, duration_s=6900)
    _, m = run(sc)
    # the round sent at the 6900 s horizon is still in flight when the run stops
    assert m.originated == 24 and m.delivered == 23
    _, m = run(sc.with_overrides(duration_s=6901))
    assert m.delivered == 24


def test_zero_duration_does_nothing():
    sc = load_scenario(SCENARIOS / "square75.ini").with_overrides(duration_s=0)
    sim = Simulator(sc)
    records, m = sim.run()
    assert records == [] and m.totals()["total"] == 0


def test_no_route_when_disconnected():
    nodes = line(3)
    nodes[2] = replace(nodes[2], position=Position(1000, 0))
    path, _ = discover_path(nodes, 0, 2, Strategy.MAX_MIN, range_m=100)
    assert path is None


def test_established_route_is_cycle_free():
    nodes = generate_coordinator_grid(TopologyKind.SQUARE, 100, 4, 4, 5.0)
    path, sim = discover_path(nodes, 0, 15, Strategy.MAX_TOTAL, range_m=100)
    assert len(set(path)) == len(path)
    hop, seen = 15, set()
    while hop != 0:
        assert hop not in seen
        seen.add(hop)
        entry = sim.nodes[hop].routes[(0, 15)]
        assert entry.route_establish_flag is RouteFlag.ESTABLISHED
        hop = entry.previous_hop
    assert sim.balanced()


def test_greedy_terminates_and_delivers():
    nodes = generate_coordinator_grid(TopologyKind.SQUARE, 100, 4, 4, 5.0)
    sc = routing(nodes, 0, 15, strategy=Strategy.GREEDY, packets=2, interval_s=10, duration_s=60)
    _, m = run(sc)
    assert m.delivered == 2


def test_greedy_backtracks_out_of_dead_end():
    # 0 - 1 - 2 (dead end, rich) and 0 - 3 - 4 (poorer, reaches the target)
    pos = {0: (0, 0), 1: (100, 0), 2: (200, 0), 3: (0, 100), 4: (0, 200)}
    energy = {0: 5, 1: 9, 2: 9, 3: 2, 4: 2}
    nodes = [NodeSpec(i, Position(*pos[i]), Role.COORDINATOR, energy[i]) for i in pos]
    path, _ = discover_path(nodes, 0, 4, Strategy.GREEDY, range_m=100)
    assert path == (0, 3, 4)


@pytest.mark.parametrize("k", [2, 3, 7])
@pytest.mark.parametrize("strategy", list(Strategy))
def test_scale_invariance(k, strategy):
    nodes = generate_coordinator_grid(TopologyKind.SQUARE, 100, 3, 4, 1.0)
    energies = {n.id: 1000 + 137 * ((n.id * 5) % 7) for n in nodes}
    a, _ = discover_path(nodes, 0, 11, strategy, range_m=100, energies_mj=energies)
    b, _ = discover_path(nodes, 0, 11, strategy, range_m=100,
                         energies_mj={i: k * e for i, e in energies.items()})
    assert a == b


def test_repair_after_next_hop_dies():
    # a diamond: 0 -> {1, 2} -> 3; node 1 is preferred but too weak to last
    pos = {0: (0, 70), 1: (70, 140), 2: (70, 0), 3: (140, 70)}
    energy = {0: 50.0, 1: 1.5, 2: 1.0, 3: 50.0}
    nodes = [NodeSpec(i, Position(*pos[i]), Role.COORDINATOR, energy[i]) for i in pos]
    sc = routing(nodes, 0, 3, packets=6, interval_s=100, start_s=0, duration_s=520,
                 strategy=Strategy.MAX_MIN, directional=False)
    records, m = run(sc)
    assert m.route_repairs >= 1
    assert m.deaths and 1 in m.deaths
    assert m.delivered >= 2
    paths = [d.path for d in m.discoveries if d.path]
    assert paths[0] == (0, 1, 3) and (0, 2, 3) in paths


def test_undeliverable_when_network_exhausted():
    nodes = line(3, energy=1.0)
    nodes[1] = replace(nodes[1], initial_energy=5e-4)  # below the path threshold from the start
    sc = routing(nodes, 0, 2, packets=2, interval_s=10, duration_s=60)
    _, m = run(sc)
    assert m.delivered == 0 and m.undeliverable == 2


def test_dead_nodes_stay_silent():
    sc = routing(line(4, energy=2.0), 0, 3, packets=20, interval_s=60, start_s=0, duration_s=1300)
    sim = Simulator(sc, trace=True)
    _, m = sim.run()
    assert m.deaths
    for t, sender, *_ in sim.trace_rows:
        if sender in m.deaths:
            assert t <= m.deaths[sender]
    assert sim.balanced()


def test_loss_is_seeded():
    sc = routing(line(5, energy=100.0), 0, 4, packets=10, interval_s=5, duration_s=80, loss_rate=0.2, seed=4)
    a, ma = run(sc)
    b, mb = run(sc)
    assert a == b and ma.lost_packets == mb.lost_packets > 0


def test_sleep_window_suppresses_sensing():
    sc = load_scenario(SCENARIOS / "square75.ini")
    night = sc.with_overrides(sleep_window=(1000.0, 3000.0))
    recs, _ = run(night)
    assert not any(1000 <= r.sense_time < 3000 for r in recs)
    day, _ = run(sc)
    assert any(1000 <= r.sense_time < 3000 for r in day)


def test_arrivals_follow_transmission_delay():
    # the first packet waits for discovery; the second uses the established route
    sc = routing(line(3), 0, 2, packets=2, interval_s=10, start_s=0, duration_s=30)
    records, _ = run(sc)
    two_hops = 2 * transmission_delay(256, 76800)
    assert records[1].arrival_time - records[1].sense_time == pytest.approx(two_hops, abs=2e-6)


def test_transmissions_by_type_are_counted():
    _, m = run(load_scenario(SCENARIOS / "square75.ini"))
    assert m.tx_by_type[PacketType.CORD_SEARCH] == 54
    assert m.tx_by_type[PacketType.AGG_DATA] > 0
    assert m.orphans == []
