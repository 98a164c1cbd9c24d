"""Tests for link module"""

import pytest

from stadia_inspector.errors import ScheduleError
from stadia_inspector.link import (
    Delivered,
    DropOutcome,
    Link,
    LinkConfig,
    TokenBucket,
    current_rate,
    drop_scenario,
    raise_scenario,
)


# Test Fixtures

@pytest.fixture
def shaped_config():
    """10 Mbit/s link with a one-packet burst and a 24000 B queue"""
    return LinkConfig(capacity_schedule=((0.0, 10e6),), burst=1194, queue_cap=24000)


# Tests for LinkConfig and schedules

def test_current_rate_steps():
    """Test the rate of the last step at or before t"""
    config = drop_scenario(30e6, at=120.0)
    assert current_rate(config, 0.0) == 100e6
    assert current_rate(config, 119.9) == 100e6
    assert current_rate(config, 120.0) == 30e6
    assert current_rate(config, 500.0) == 30e6


def test_current_rate_before_schedule():
    """Test lookups before the first schedule point"""
    config = LinkConfig(capacity_schedule=((10.0, 5e6),))
    with pytest.raises(ScheduleError):
        current_rate(config, 5.0)


def test_link_config_validation():
    """Test schedule times must increase and rates be positive"""
    with pytest.raises(ValueError):
        LinkConfig(capacity_schedule=((0.0, 5e6), (0.0, 6e6)))
    with pytest.raises(ValueError):
        LinkConfig(capacity_schedule=((0.0, 0.0),))
    with pytest.raises(ValueError):
        LinkConfig(capacity_schedule=())


def test_scenario_builders():
    """Test drop and raise scenarios charge IP/UDP overhead"""
    drop = drop_scenario(10e6, at=60.0)
    assert drop.capacity_schedule == ((0.0, 100e6), (60.0, 10e6))
    assert drop.per_packet_overhead == 28

    lifted = raise_scenario(15e6, at=30.0)
    assert lifted.capacity_schedule == ((0.0, 15e6), (30.0, 100e6))


# Tests for TokenBucket

def test_serialisation_delay_after_burst():
    """Test that a packet behind a spent burst waits size*8/rate"""
    bucket = TokenBucket(LinkConfig(capacity_schedule=((0.0, 12e6),), burst=1194, one_way_delay_ms=0))
    first = bucket.admit(1194, 0.0)
    second = bucket.admit(1194, 0.0)

    assert first.depart == 0.0
    assert second.depart == pytest.approx(0.000796)


def test_tokens_refill_up_to_burst():
    """Test that an idle bucket refills but never beyond burst"""
    bucket = TokenBucket(LinkConfig(capacity_schedule=((0.0, 8000.0),), burst=1000))
    bucket.admit(1000, 0.0)
    later = bucket.admit(1000, 10.0)
    assert later.depart == 10.0
    assert bucket.tokens == 0.0


def test_wait_spans_a_rate_change():
    """Test credit accrues at each step's own rate"""
    config = LinkConfig(capacity_schedule=((0.0, 8000.0), (1.0, 80000.0)), burst=1, queue_cap=10_000)
    bucket = TokenBucket(config)
    outcome = bucket.admit(1501, 0.0)
    assert outcome.depart == pytest.approx(1.05)


def test_queue_overflow_drops(shaped_config):
    """Test tail drop once queued bytes would exceed the cap"""
    bucket = TokenBucket(shaped_config)
    outcomes = [bucket.admit(1194, 0.0) for _ in range(22)]

    # the first packet leaves at once and never occupies the queue
    assert all(isinstance(o, Delivered) for o in outcomes[:21])
    assert isinstance(outcomes[21], DropOutcome)
    assert bucket.queued_bytes == 20 * 1194


def test_queue_drains_over_time(shaped_config):
    """Test that departed packets free queue space"""
    bucket = TokenBucket(shaped_config)
    for _ in range(20):
        bucket.admit(1194, 0.0)
    assert isinstance(bucket.admit(1194, 0.005), Delivered)


def test_fifo_order(shaped_config):
    """Test that departures follow arrival order"""
    bucket = TokenBucket(shaped_config)
    departs = [bucket.admit(size, 0.001 * i).depart for i, size in enumerate([1194, 100, 1194, 50])]
    assert departs == sorted(departs)


def test_throughput_under_overload():
    """Test a link offered twice its rate delivers its rate and drops the rest"""
    bucket = TokenBucket(LinkConfig(capacity_schedule=((0.0, 10e6),)))
    departs = []
    dropped = 0
    for i in range(25_000):
        outcome = bucket.admit(1000, i * 0.0004)
        if isinstance(outcome, Delivered):
            departs.append(outcome.depart)
        else:
            dropped += 1

    in_window = sum(1 for depart in departs if 1.0 <= depart < 10.0)
    assert in_window * 1000 * 8 / 9.0 == pytest.approx(10e6, rel=0.01)
    assert dropped == pytest.approx(12_500, rel=0.02)


def test_out_of_order_arrival(shaped_config):
    """Test that arrivals must be offered in time order"""
    bucket = TokenBucket(shaped_config)
    bucket.admit(100, 1.0)
    with pytest.raises(ValueError):
        bucket.admit(100, 0.5)


def test_one_way_delay(shaped_config):
    """Test delivery time adds the propagation delay"""
    outcome = TokenBucket(shaped_config).admit(100, 2.0)
    assert outcome.t_out == pytest.approx(2.005)


# Tests for Link

def test_rtt_probe_unshaped():
    """Test that an idle link answers in two one-way delays"""
    link = Link(LinkConfig())
    assert link.rtt_probe(1.0) == pytest.approx(0.010)


def test_rtt_probe_behind_queue(shaped_config):
    """Test that the response queues behind downlink video"""
    link = Link(shaped_config)
    for _ in range(20):
        link.send('downlink', 1194, 0.0)
    assert link.rtt_probe(0.0) == pytest.approx(0.0232136)


def test_rtt_probe_dropped():
    """Test that a lost request yields no RTT"""
    link = Link(LinkConfig(capacity_schedule=((0.0, 1e6),), burst=100, queue_cap=100))
    link.send('uplink', 100, 0.0)
    link.send('uplink', 50, 0.0)
    assert link.rtt_probe(0.0) is None


def test_link_log_and_drop_counts(shaped_config):
    """Test per-packet log rows and drop counters"""
    link = Link(shaped_config, log_packets=True)
    for _ in range(22):
        link.send('downlink', 1194, 0.0)

    assert link.dropped == {'downlink': 1, 'uplink': 0}
    assert len(link.log) == 22
    assert link.log[-1].outcome == 'dropped'
    assert link.log[-1].t_out is None
    assert link.log[0].t_out == pytest.approx(0.005)
