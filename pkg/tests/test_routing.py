import itertools
import math

import pytest
from hypothesis import given, strategies as st

from wsnagg.routing import (Admission, EmptyCandidates, EmptyPath, RouteEntry, SearchState,
                            Strategy, Verdict, admit_search_packet, best_entry, directional_valid,
                            directional_valid_dm, greedy_next, path_min_energy, path_total_energy,
                            rebroadcast_fields, sequence_newer)
from wsnagg.topology import Position


def test_path_totals():
    assert path_total_energy([1, 5, 1, 3, 1]) == 11
    assert path_total_energy([4, 1, 1, 1, 8, 1, 1, 3, 2]) == 22
    assert path_total_energy([7]) == 7
    with pytest.raises(EmptyPath):
        path_total_energy([])


def test_path_minimum():
    assert path_min_energy([4, 2, 2, 2, 2, 2, 2, 3, 2]) == 2
    assert path_min_energy([4, 2, 2, 2, 2, 2, 2, 2, 2]) == 2
    assert path_min_energy([3, 3, 3]) == 3
    with pytest.raises(EmptyPath):
        path_min_energy([])


@given(st.lists(st.integers(-10 ** 6, 10 ** 6), min_size=1))
def test_min_matches_scan(xs):
    smallest = xs[0]
    for x in xs:
        smallest = x if x < smallest else smallest
    assert path_min_energy(xs) == smallest


def test_directional_examples():
    src, dst = Position(0, 0), Position(3, 4)
    assert directional_valid(0, src, src, dst)
    assert directional_valid(2, Position(0, 2), src, dst)
    assert not directional_valid(6, Position(0, 6), src, dst)
    with pytest.raises(ValueError):
        directional_valid(-1, src, src, dst)
    assert directional_valid_dm(20, Position(0, 2), src, dst)
    assert not directional_valid_dm(60, Position(0, 6), src, dst)


def entry(path, m, t, hops=None, dist=0, seq=1):
    return RouteEntry(destination=path[-1], source=path[0], next_hop=None, previous_hop=path[-2] if len(path) > 1 else None,
                      time_stamp=0.0, sequence_number=seq, hop_count=len(path) - 1 if hops is None else hops,
                      minimum_energy=m, path_total_energy=t, distance_traversed=dist, path=tuple(path))


def rules(strategy=Strategy.MAX_MIN, own=1000, remaining=10 ** 12, directional=False, max_hops=10):
    return Admission(strategy, own, remaining, 660_000, max_hops, directional,
                     Position(0, 0), Position(0, 0), Position(0, 0))


def test_admission_first_packet():
    v, s = admit_search_packet(None, entry((0, 1), 5, 5), rules())
    assert v is Verdict.ACCEPT and s.sequence_number == 1 and len(s.entries) == 1


def test_admission_drops_weaker_duplicate():
    _, s = admit_search_packet(None, entry((0, 2, 5), 3000, 7000), rules(own=5000))
    v, s2 = admit_search_packet(s, entry((0, 3, 5), 2000, 6000), rules(own=5000))
    assert v is Verdict.DOMINATED and s2 is s


def test_admission_keeps_incomparable_entries():
    # stronger bottleneck vs larger total: both can matter once the holder's energy is folded in
    _, s = admit_search_packet(None, entry((0, 2, 5), 3000, 7000), rules(own=5000))
    v, s = admit_search_packet(s, entry((0, 3, 5), 2000, 9000), rules(own=5000))
    assert v is Verdict.ACCEPT and len(s.entries) == 2


def test_admission_hop_limit_and_energy():
    assert admit_search_packet(None, entry((0, 1, 2), 1, 1), rules(max_hops=2))[0] is Verdict.HOP_LIMIT
    assert admit_search_packet(None, entry((0, 1), 1, 1), rules(remaining=1))[0] is Verdict.LOW_ENERGY


def test_admission_old_sequence_and_wrap():
    _, s = admit_search_packet(None, entry((0, 1), 1, 1, seq=5), rules())
    assert admit_search_packet(s, entry((0, 1), 9, 9, seq=4), rules())[0] is Verdict.OLD_SEQUENCE
    assert sequence_newer(0, 255)
    assert not sequence_newer(255, 0)
    assert not sequence_newer(3, 3)


def test_admission_off_course():
    r = Admission(Strategy.MAX_MIN, 1, 10 ** 12, 0, 10, True, Position(0, 6), Position(0, 0), Position(3, 4))
    assert admit_search_packet(None, entry((0, 1), 1, 1, dist=60), r)[0] is Verdict.OFF_COURSE


def test_best_entry_examples():
    a, b = entry((0, 1, 9), 2000, 20000), entry((0, 2, 9), 2000, 21000)
    assert best_entry([a, b], Strategy.MAX_MIN) is b
    assert best_entry([a], Strategy.MAX_MIN) is a
    with pytest.raises(EmptyCandidates):
        best_entry([], Strategy.MAX_TOTAL)
    with pytest.raises(ValueError):
        best_entry([a], Strategy.GREEDY)


entries = st.lists(st.tuples(st.integers(1, 4), st.integers(1, 9), st.integers(0, 30),
                             st.lists(st.integers(1, 9), min_size=1, max_size=3)), min_size=1, max_size=8)


@given(entries, st.sampled_from([Strategy.MAX_MIN, Strategy.MAX_TOTAL]), st.integers(1, 9))
def test_best_entry_matches_scan(raw, strategy, own):
    es = [entry((0, *mid), m, m + t, hops=h) for h, m, t, mid in raw]

    def better(x, y):
        xm, ym = min(x.minimum_energy, own), min(y.minimum_energy, own)
        xt, yt = x.path_total_energy + own, y.path_total_energy + own
        if x.hop_count != y.hop_count:
            return x.hop_count < y.hop_count
        if strategy is Strategy.MAX_MIN and xm != ym:
            return xm > ym
        if xt != yt:
            return xt > yt
        return x.path < y.path

    best = es[0]
    for e in es[1:]:
        if better(e, best):
            best = e
    got = best_entry(es, strategy, own_mj=own)
    assert (got.hop_count, got.minimum_energy, got.path_total_energy, got.path) == \
        (best.hop_count, best.minimum_energy, best.path_total_energy, best.path)


def test_rebroadcast_includes_self():
    assert rebroadcast_fields(entry((0, 1), 4000, 4000), 1000) == (1000, 5000)


def test_greedy_next():
    assert greedy_next({1: 5, 2: 9, 3: 9}, set(), 7) == 2
    assert greedy_next({1: 5, 7: 1}, set(), 7) == 7
    assert greedy_next({1: 5, 2: 9}, {2}, 7) == 1
    assert greedy_next({1: 5}, {1}, 7) is None
