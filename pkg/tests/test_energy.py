import pytest
from hypothesis import given, strategies as st

from wsnagg.energy import (Activity, Battery, DeadBattery, PowerProfile, accrue_idle,
                           below_path_threshold, debit_radio, path_threshold_nj, to_nj)

P = PowerProfile()


def test_radio_costs():
    b = Battery.from_joules(1.0)
    assert debit_radio(b, P, Activity.TRANSMIT, 128) == pytest.approx(0.099 * 128 / 76800, abs=1e-12)
    assert debit_radio(b, P, Activity.RECEIVE, 128) == pytest.approx(0.042 * 128 / 76800, abs=1e-12)
    assert b.ledger.spent_tx == 165_000
    assert b.ledger.spent_rx == 70_000
    assert b.balanced()


def test_transmit_drains_tiny_battery_to_zero():
    b = Battery(1)
    assert debit_radio(b, P, Activity.TRANSMIT, 128) == pytest.approx(1e-9)
    assert b.dead and b.remaining == 0
    with pytest.raises(DeadBattery):
        debit_radio(b, P, Activity.TRANSMIT, 128)


def test_idle_and_sleep():
    b = Battery.from_joules(10)
    assert accrue_idle(b, P, Activity.IDLE, 300) == pytest.approx(1.8)
    assert accrue_idle(b, P, Activity.SLEEP, 300) == pytest.approx(9e-4)
    assert accrue_idle(b, P, Activity.SLEEP, 0) == 0
    with pytest.raises(ValueError):
        accrue_idle(b, P, Activity.IDLE, -1)
    with pytest.raises(ValueError):
        accrue_idle(b, P, Activity.TRANSMIT, 1)


def test_path_threshold():
    e = path_threshold_nj(P, 256, 256)
    # two 256-bit transmissions at 0.099 W and 76 800 bit/s
    assert e == 2 * 330_000
    assert below_path_threshold(Battery(0), 1e-3)
    assert not below_path_threshold(Battery(e), e / 1e9)
    assert not below_path_threshold(Battery.from_joules(20304), e / 1e9)


def test_profile_validation():
    with pytest.raises(ValueError):
        PowerProfile(p_tx=0.01)
    with pytest.raises(ValueError):
        PowerProfile(data_rate=0)


@given(st.integers(1, 10 ** 13),
       st.lists(st.tuples(st.sampled_from(list(Activity)), st.integers(0, 10 ** 10)), max_size=40))
def test_ledger_conserves_and_is_monotone(capacity, draws):
    b = Battery(capacity)
    last = b.remaining
    for activity, nj in draws:
        b.draw(activity, nj)
        assert b.remaining <= last
        assert b.balanced()
        last = b.remaining
    assert b.remaining >= 0


def test_to_nj_round_trip():
    assert to_nj(20304) == 20_304_000_000_000
