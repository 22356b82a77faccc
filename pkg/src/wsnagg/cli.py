"""Command-line front end: ``wsnagg run|compare-routing|compare-aggregation <scenario>``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from collections import defaultdict
from pathlib import Path
from typing import Optional, Sequence

from . import oracle
from .engine import Simulator
from .experiments import compare_aggregation, compare_routing, format_aggregation, format_routing
from .packet import AggType
from .routing import Strategy
from .scenario import AggMode, App, ConfigError, Scenario, load_scenario
from .schedule import ParseError, records_to_csv
from .topology import neighbors

log = logging.getLogger("wsnagg")


class VerificationFailed(RuntimeError):
    pass


def verify_routes(scenario: Scenario, sim: Simulator) -> list[str]:
    """Compare each flood discovery's established path with the exhaustive oracle."""
    problems = []
    adj = neighbors(scenario.nodes, scenario.range_m)
    positions = {n.id: (n.position.x, n.position.y) for n in scenario.nodes}
    first = {}
    for d in sim.metrics.discoveries:
        first.setdefault((d.source, d.destination), d)
    for d in first.values():
        if d.strategy is Strategy.GREEDY or d.path is None:
            continue
        # energies each node held when the flood first reached it
        energies = {d.source: d.advertised[d.source]}
        for n, node in sim.nodes.items():
            snap = node.advertised.get((d.source, d.destination))
            if snap is not None and snap[0] == d.seq and snap[1] * 1_000_000 >= sim.threshold_nj:
                energies[n] = snap[1]
        graph = {n: [v for v in adj[n] if v in energies] for n in energies}
        paths = oracle.enumerate_paths(graph, d.source, d.destination, energies, positions,
                                       bound=oracle.DEFAULT_BOUND, dm_rounding=True)
        directional = scenario.directional and d.strategy is Strategy.MAX_MIN
        want = oracle.best_path_bruteforce(paths, d.strategy.value, directional)
        if want != d.path:
            problems.append(f"discovery {d.source}->{d.destination}: got {d.path}, oracle {want}")
    return problems


def verify_aggregates(scenario: Scenario, records, metrics) -> list[str]:
    """Check base-station minima and area averages against the raw schedules."""
    if scenario.app is not App.AGGREGATION or scenario.mode is not AggMode.AGGREGATE:
        return []
    readings: dict[int, dict[int, tuple[float, AggType]]] = defaultdict(dict)
    for nid, sched in scenario.schedules.items():
        for row, t in zip(sched.rows, sched.sense_times(scenario.sensing_start_s)):
            if t <= scenario.duration_s and not sim_sleeps(scenario, t):
                readings[round(t * 1000)][nid] = (row.value, row.agg_type)
    area = defaultdict(set)
    for child, coord in metrics.bindings.items():
        area[coord].add(child)
    problems = []
    for r in records:
        key = round(r.sense_time * 1000)
        if r.agg_type == AggType.MINIMUM and r.coverage == len(readings[key]):
            want = oracle.aggregate_bruteforce([v for v, _ in readings[key].values()], "min")
            if r.value != want:
                problems.append(f"minimum at {r.sense_time}: got {r.value}, oracle {want}")
        elif r.agg_type == AggType.AVERAGE:
            members = [readings[key][n][0] for n in area[r.node_id] | {r.node_id}
                       if n in readings[key] and readings[key][n][1] == AggType.AVERAGE]
            want = oracle.aggregate_bruteforce(members, "avg")
            if len(members) != r.coverage or abs(r.value - float(want)) > 1e-9:
                problems.append(f"average of area {r.node_id} at {r.sense_time}: got {r.value}, "
                                f"oracle {float(want)} over {len(members)}")
    return problems


def sim_sleeps(scenario: Scenario, t: float) -> bool:
    if not scenario.sleep_window:
        return False
    start, end = (w % 86400 for w in scenario.sleep_window)
    tod = t % 86400
    return start <= tod < end if start <= end else (tod >= start or tod < end)


def _write_outputs(out: Path, scenario: Scenario, sim: Simulator, records, metrics, trace: bool):
    out.mkdir(parents=True, exist_ok=True)
    (out / "records.csv").write_text(records_to_csv(records))
    summary = {"scenario": scenario.name, "seed": scenario.seed, **metrics.summary()}
    (out / "metrics.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    if trace:
        with open(out / "trace.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("time_s", "sender", "packet", "to", "bits"))
            for t, s, name, to, bits in sim.trace_rows:
                w.writerow((f"{t:.6f}", s, name, to, bits))


def cmd_run(args) -> int:
    scenario = load_scenario(args.scenario, seed=args.seed)
    sim = Simulator(scenario, trace=args.trace)
    records, metrics = sim.run()
    _write_outputs(Path(args.out), scenario, sim, records, metrics, args.trace)
    print(f"{len(records)} records, delivery ratio {metrics.delivery_ratio:.3f}, "
          f"energy {metrics.totals()['total']:.6f} J -> {args.out}")
    if args.verify:
        problems = verify_aggregates(scenario, records, metrics)
        if len(scenario.nodes) <= oracle.DEFAULT_BOUND:
            problems += verify_routes(scenario, sim)
        if not sim.balanced():
            problems.append("energy ledger does not balance")
        for p in problems:
            print(f"verify: {p}", file=sys.stderr)
        if problems:
            raise VerificationFailed(f"{len(problems)} verification failures")
        print("verify: ok")
    return 0


def cmd_compare_routing(args) -> int:
    scenario = load_scenario(args.scenario, seed=args.seed)
    table = format_routing(compare_routing(scenario))
    _emit(table, args.out, "compare_routing.tsv")
    return 0


def cmd_compare_aggregation(args) -> int:
    scenario = load_scenario(args.scenario, seed=args.seed)
    table = format_aggregation(compare_aggregation(scenario))
    _emit(table, args.out, "compare_aggregation.tsv")
    return 0


def _emit(table: str, out: Optional[str], name: str) -> None:
    sys.stdout.write(table)
    if out:
        Path(out).mkdir(parents=True, exist_ok=True)
        (Path(out) / name).write_text(table)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wsnagg", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn, default_out in (("run", cmd_run, "out"),
                                  ("compare-routing", cmd_compare_routing, None),
                                  ("compare-aggregation", cmd_compare_aggregation, None)):
        p = sub.add_parser(name)
        p.add_argument("scenario", type=Path)
        p.add_argument("--out", default=default_out, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override the scenario seed")
        p.add_argument("--trace", action="store_true", help="also write a per-transmission trace")
        p.add_argument("--verify", action="store_true", help="cross-check results with the oracle")
        p.set_defaults(func=fn)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, ParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except VerificationFailed as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
