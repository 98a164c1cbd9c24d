"""Tests for harness module"""

import json

import pytest

from stadia_inspector.analyzer import summary_stats
from stadia_inspector.config import REPORT_HEADER, RESOLUTION_HEIGHT
from stadia_inspector.errors import ConfigError, InsufficientDataError, UnknownMetricError
from stadia_inspector.harness import (
    Scenario,
    Target,
    compare,
    load_scenario,
    load_targets,
    run,
    run_many,
)
from stadia_inspector.link import LinkConfig, drop_scenario


# Test Fixtures

@pytest.fixture
def open_link_scenario():
    """Ten seconds of TR on an unshaped link"""
    return Scenario(name='open', game='TR', duration=10, seed=1)


@pytest.fixture
def drop_report():
    """TR at 1080p with capacity falling to 10 Mbit/s at 20 s"""
    scenario = Scenario(name='drop10', game='TR', link=drop_scenario(10e6, at=20.0), duration=40, seed=2)
    return run(scenario)


@pytest.fixture
def scenario_file(tmp_path):
    """A scenario TOML with a capacity drop"""
    path = tmp_path / "drop.toml"
    path.write_text(
        'name = "drop10"\n'
        'game = "TH"\n'
        'max_resolution = "1080p"\n'
        'duration = 60\n'
        'seed = 3\n'
        '\n'
        '[link]\n'
        'capacity_schedule = [[0.0, 100000000.0], [20.0, 10000000.0]]\n'
        'per_packet_overhead = 28\n'
        '\n'
        '[adaptation]\n'
        'hold_s = 5.0\n'
    )
    return path


# Tests for Scenario

def test_load_scenario(scenario_file):
    """Test reading a scenario with nested link and adaptation tables"""
    scenario = load_scenario(scenario_file)

    assert scenario.game == 'TH'
    assert scenario.link.capacity_schedule == ((0.0, 100e6), (20.0, 10e6))
    assert scenario.adaptation.hold_s == 5.0
    assert scenario.adaptation.steady_after_s == 60.0
    assert scenario.start_capacity == 100e6
    assert scenario.capacity_drop_time() == 20.0
    assert scenario.resolutions == ('720p', '1080p')


def test_load_scenario_unknown_key(tmp_path):
    """Test that misspelt keys are rejected"""
    path = tmp_path / "bad.toml"
    path.write_text('game = "TR"\nduration = 10\nsede = 3\n')
    with pytest.raises(ConfigError):
        load_scenario(path)


def test_scenario_needs_positive_duration():
    """Test the duration bound"""
    with pytest.raises(ValueError):
        Scenario(duration=0)


def test_scenario_without_drop():
    """Test that a raise scenario has no drop time"""
    scenario = Scenario(link=LinkConfig(capacity_schedule=((0.0, 15e6), (30.0, 100e6))), duration=60)
    assert scenario.capacity_drop_time() is None
    assert scenario.start_capacity == 15e6


# Tests for run

def test_run_one_second():
    """Test that a one second session yields one record"""
    report = run(Scenario(duration=1))

    assert not report.refused
    assert len(report.records) == 1
    assert report.records[0].second == 0
    assert report.records[0].fps == 60


def test_run_drains_packets_after_the_end():
    """Test arrivals past the session end settle as in flight"""
    scenario = Scenario(link=LinkConfig(one_way_delay_ms=50.0), duration=2, seed=3)
    report = run(scenario)

    assert len(report.records) == 2
    video = report.streams['video']
    assert video.in_flight > 0
    assert video.generated == video.delivered + video.dropped + video.in_flight
    assert report.streams['rtcp'].in_flight > 0


def test_run_refused_session():
    """Test that a 5 Mbit/s start is refused with an empty report"""
    scenario = Scenario(link=LinkConfig(capacity_schedule=((0.0, 5e6),)), duration=30)
    report = run(scenario)

    assert report.refused
    assert report.reason == "insufficient capacity"
    assert report.records == []
    with pytest.raises(InsufficientDataError):
        report.summary()

    lines = report.to_csv().splitlines()
    assert lines[0] == REPORT_HEADER
    assert lines[2] == '# refused: insufficient capacity'
    assert lines[3].startswith('second,')
    assert len(lines) == 4


def test_run_open_link(open_link_scenario):
    """Test an unconstrained session plays 1080p at full frame rate"""
    report = run(open_link_scenario)

    assert len(report.records) == 10
    for record in report.records:
        assert record.resolution_height == 1080
        assert record.fps == 60
        assert record.packets_lost == 0
        assert record.rtt == pytest.approx(0.010, abs=0.002)
        assert 0.020 <= record.jitter_buffer_delay <= 0.120
    summary = report.summary()
    assert summary['mean_load'] == pytest.approx(25.6, rel=0.05)
    assert summary['resolution_changes'] == 0
    assert summary['transient_length'] is None
    assert report.changes == ()


def test_run_is_deterministic(open_link_scenario):
    """Test identical scenarios give byte-identical reports"""
    first = run(open_link_scenario).to_csv()
    second = run(open_link_scenario).to_csv()
    other = run(open_link_scenario.model_copy(update={'seed': 9})).to_csv()

    assert first == second
    assert first != other


def test_run_conserves_packets(drop_report):
    """Test every generated packet is delivered, dropped or in flight"""
    for name, counters in drop_report.streams.items():
        assert counters.generated == counters.delivered + counters.dropped + counters.in_flight, name
    assert drop_report.streams['video'].dropped > 0
    assert drop_report.streams['rtcp'].generated > 0
    assert drop_report.streams['dtls'].generated > 0


def test_feedback_applied_once_per_delivered_rtcp(drop_report):
    """Test the sender acts only on feedback that crossed the uplink in time"""
    rtcp = drop_report.streams['rtcp']
    assert len(drop_report.gcc_history) == rtcp.delivered
    assert rtcp.delivered >= 39


def test_feedback_travels_on_the_uplink(open_link_scenario):
    """Test every feedback message is admitted to the uplink as a 66 B packet"""
    report = run(open_link_scenario, log_packets=True)

    uplink = [row for row in report.link_log if row.direction == 'uplink']
    assert sum(1 for row in uplink if row.size == 66) == report.streams['rtcp'].generated
    downlink_dtls = [row for row in report.link_log if row.direction == 'downlink' and row.size == 119]
    assert sum(1 for row in uplink if row.size == 123) + len(downlink_dtls) == report.streams['dtls'].generated
    assert all(row.t_out is not None for row in uplink if row.outcome == 'delivered')
    assert [row.t_arrival for row in uplink] == sorted(row.t_arrival for row in uplink)


def test_run_without_link_log(open_link_scenario):
    """Test the link log stays empty unless requested"""
    assert run(open_link_scenario).link_log == []


def test_open_link_rtt(open_link_scenario):
    """Test the STUN round trip on an open link is two one-way delays plus queueing"""
    summary = run(open_link_scenario).summary()

    assert 10.0 - 1e-6 <= summary['rtt_mean'] <= 15.0
    assert summary['rtt_p95'] < 1000.0 / 60


def test_jitter_buffer_shrinks_with_resolution():
    """Test denser frame bursts give a smaller jitter buffer"""
    jitter = {}
    for resolution in ('720p', '1080p', '4K'):
        scenario = Scenario(name=resolution, game='TR', max_resolution=resolution, duration=10, seed=4)
        report = run(scenario)
        assert report.records[-1].resolution_height == RESOLUTION_HEIGHT[resolution]
        jitter[resolution] = report.summary()['jitter_buffer_mean']

    assert jitter['720p'] > jitter['1080p'] > jitter['4K']


def test_session_start_refused_at_10_mbps():
    """Test a 10 Mbit/s link is refused"""
    scenario = Scenario(link=LinkConfig(capacity_schedule=((0.0, 10e6),), per_packet_overhead=28), duration=10)
    assert run(scenario).refused


def test_session_starts_at_720p_on_15_mbps():
    """Test a 15 Mbit/s start plays 720p within the link"""
    scenario = Scenario(link=LinkConfig(capacity_schedule=((0.0, 15e6),), per_packet_overhead=28),
                        duration=30, seed=5)
    report = run(scenario)

    assert not report.refused
    assert report.records[0].resolution_height == 720
    first_change = report.changes[0].t if report.changes else scenario.duration
    at_720p = [r.delivered_load for r in report.records if r.second + 1 <= first_change]
    assert at_720p
    assert max(at_720p) <= 13.5


def test_session_starts_at_1080p_on_20_mbps():
    """Test a 20 Mbit/s start plays 1080p"""
    scenario = Scenario(link=LinkConfig(capacity_schedule=((0.0, 20e6),), per_packet_overhead=28),
                        duration=5, seed=5)
    report = run(scenario)

    assert report.records[0].resolution_height == 1080


def test_capacity_drop_causes_loss_and_downswitch(drop_report):
    """Test that loss starts after the drop and sends the stream to 720p"""
    before = [r for r in drop_report.records if r.second < 20]
    assert all(r.packets_lost == 0 for r in before)
    assert sum(r.packets_lost for r in drop_report.records) > 0

    first = drop_report.changes[0]
    assert first.reason == 'loss'
    assert first.t > 20.0
    assert first.new.resolution == '720p'

    summary = drop_report.summary()
    assert 0 <= summary['loss_spike_time'] <= 2
    assert summary['transient_length'] >= first.t - 20.0


def test_report_json(drop_report):
    """Test the JSON report carries records, changes and the summary"""
    data = json.loads(drop_report.to_json())

    assert data['version'] == 1
    assert data['scenario']['name'] == 'drop10'
    assert len(data['records']) == 40
    assert data['changes'][0]['reason'] == 'loss'
    assert data['summary']['packets_lost'] > 0
    assert set(data['streams']) == {'video', 'audio', 'stun', 'dtls', 'rtcp'}


def test_report_csv_layout(open_link_scenario):
    """Test the versioned CSV preamble and one row per second"""
    lines = run(open_link_scenario).to_csv().splitlines()

    assert lines[0] == REPORT_HEADER
    assert lines[1].startswith('# scenario=open game=TR codec=VP9 max_resolution=1080p')
    assert lines[2] == ('second,resolution_height,fps,rtt,packets_lost,jitter_buffer_delay,'
                        'delivered_load,target_rate,encoder_bitrate,phase')
    assert len(lines) == 13
    assert lines[3].startswith('0,1080,60,')


def test_run_many_matches_serial():
    """Test parallel runs return reports in input order"""
    scenarios = [Scenario(name=f"s{seed}", duration=2, seed=seed) for seed in (1, 2)]
    parallel = run_many(scenarios, workers=2)
    serial = run_many(scenarios, workers=1)

    assert [r.scenario.name for r in parallel] == ['s1', 's2']
    assert [r.to_csv() for r in parallel] == [r.to_csv() for r in serial]


@pytest.mark.slow
def test_long_drop_scenario_settles():
    """Test a five minute session with a drop to 30 Mbit/s"""
    scenario = Scenario(name='drop30', game='TR', link=drop_scenario(30e6, at=120.0), duration=300)
    report = run(scenario)

    assert len(report.records) == 300
    assert all(r.fps >= 58 for r in report.records[:120])
    assert all(r.packets_lost == 0 for r in report.records[:120])
    for counters in report.streams.values():
        assert counters.generated == counters.delivered + counters.dropped + counters.in_flight

    # the 1080p stream fits under 30 Mbit/s, so it rides the drop out
    assert all(r.packets_lost == 0 for r in report.records)
    assert all(r.resolution_height == 1080 for r in report.records)
    summary = report.summary()
    assert summary['tail_load'] <= 0.95 * 30
    assert summary['transient_length'] == 0


@pytest.mark.slow
@pytest.mark.parametrize("limit", [10e6, 15e6, 20e6])
def test_drop_below_1080p_load(limit):
    """Test a drop under the 1080p load is lossy at once and falls back to 720p"""
    scenario = Scenario(name='drop', game='TR', link=drop_scenario(limit, at=120.0), duration=150, seed=6)
    report = run(scenario)

    summary = report.summary()
    assert summary['loss_spike_time'] <= 2
    first = next(change for change in report.changes if change.t >= 120.0)
    assert first.reason == 'loss'
    assert first.new.resolution == '720p'
    assert first.t - 120.0 <= 10
    assert summary['transient_length'] > 0


# Tests for compare

def test_compare_within_tolerance():
    """Test a value within 5% of the target passes"""
    result = compare({'mean_load': 25.1}, {'mean_load': Target(value=25.60)})
    assert result.passed
    assert result.rows[0].low == pytest.approx(24.32)
    assert result.rows[0].high == pytest.approx(26.88)


def test_compare_band():
    """Test a value inside an absolute band passes"""
    result = compare({'rtt_mean': 10.9}, {'rtt_mean': {'band': [10.28, 12.30]}})
    assert result.passed
    assert result.rows[0].tolerance is None


def test_compare_failure_rows():
    """Test failing and missing values are reported"""
    result = compare({'fps_mean': 40.0, 'rtt_mean': None}, {'fps_mean': 60.0, 'rtt_mean': 10.0})
    assert not result.passed
    assert [row.metric for row in result.failures()] == ['fps_mean', 'rtt_mean']


def test_compare_empty_source():
    """Test that an empty source cannot be compared"""
    with pytest.raises(InsufficientDataError):
        compare({}, {'mean_load': 25.6})


def test_compare_unknown_metric():
    """Test that targets must name known metrics"""
    with pytest.raises(UnknownMetricError):
        compare({'mean_load': 25.1}, {'mean_lod': 25.6})


def test_compare_traffic_stats(constant_trace):
    """Test comparing measured trace statistics"""
    result = compare(summary_stats(constant_trace), {'load': 0.8, 'mean_ipt': Target(value=10.0, tolerance=0.01)})
    assert result.passed


def test_compare_report(open_link_scenario):
    """Test comparing a simulated report's summary"""
    result = compare(run(open_link_scenario), {'fps_mean': {'value': 60.0, 'tolerance': 0.01}})
    assert result.passed


def test_target_needs_one_form():
    """Test a target is either a value or a band"""
    with pytest.raises(ValueError):
        Target()
    with pytest.raises(ValueError):
        Target(value=1.0, band=(0.0, 2.0))
    with pytest.raises(ValueError):
        Target(band=(2.0, 1.0))


def test_load_targets(tmp_path):
    """Test the [targets] table with numbers and tables"""
    path = tmp_path / "targets.toml"
    path.write_text(
        '[targets]\n'
        'mean_load = 25.6\n'
        'rtt_mean = { band = [10.28, 12.30] }\n'
        'fps_mean = { value = 60, tolerance = 0.02 }\n'
    )
    targets = load_targets(path)

    assert targets['mean_load'].bounds == pytest.approx((24.32, 26.88))
    assert targets['rtt_mean'].bounds == (10.28, 12.30)
    assert targets['fps_mean'].tolerance == 0.02
