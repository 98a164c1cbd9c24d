"""Tests for adaptation module"""

import pytest

from stadia_inspector.adaptation import (
    STARTING,
    STEADY,
    TRANSIENT,
    EncoderConfig,
    ResolutionChange,
    SessionRefused,
    initial_config,
    on_capacity_increase,
    on_report,
    resolution_for_capacity,
    start,
    transient_length,
)


# Test Fixtures

@pytest.fixture
def steady_1080p():
    """A 1080p session started on a 20 Mbit/s link, capped at 1080p"""
    return start(initial_config(20e6, max_resolution='1080p'), max_resolution='1080p')


def drive(state, reports):
    """Feed (loss, target, t) reports and return the final state"""
    for loss, target, t in reports:
        state, _ = on_report(state, loss, target, t)
    return state


def reasons(state):
    return [change.reason for change in state.change_log]


# Tests for initial_config

def test_initial_config_refuses_low_capacity():
    """Test that 10 Mbit/s and below is refused"""
    assert isinstance(initial_config(5e6), SessionRefused)
    refused = initial_config(10e6)
    assert isinstance(refused, SessionRefused)
    assert refused.reason == "insufficient capacity"


def test_initial_config_resolution_bands():
    """Test the starting resolution and bitrate per capacity"""
    low = initial_config(15e6)
    assert low.resolution == '720p'
    assert low.encoder_bitrate == pytest.approx(12.75e6)

    mid = initial_config(20e6)
    assert mid.resolution == '1080p'
    assert mid.encoder_bitrate == pytest.approx(17e6)

    high = initial_config(40e6)
    assert high.resolution == '4K'
    assert high.encoder_bitrate == pytest.approx(34e6)


def test_initial_config_respects_max_resolution():
    """Test the cap on resolution clamps the bitrate to that band"""
    capped = initial_config(40e6, max_resolution='1080p', codec='H264')
    assert capped.resolution == '1080p'
    assert capped.encoder_bitrate == 30e6
    assert capped.codec == 'H264'


def test_initial_config_rejects_non_positive_capacity():
    """Test that capacity must be positive"""
    with pytest.raises(ValueError):
        initial_config(0)


def test_resolution_for_capacity_boundaries():
    """Test band edges are inclusive at the top"""
    assert resolution_for_capacity(17.5e6) == '720p'
    assert resolution_for_capacity(17.6e6) == '1080p'
    assert resolution_for_capacity(30e6) == '1080p'
    assert resolution_for_capacity(30.1e6) == '4K'
    assert resolution_for_capacity(50e6, max_resolution='720p') == '720p'


def test_encoder_config_band_check():
    """Test bitrates outside the resolution band are rejected"""
    with pytest.raises(ValueError):
        EncoderConfig(resolution='720p', encoder_bitrate=20e6)
    assert EncoderConfig(resolution='4K', encoder_bitrate=30e6).describe() == '4K@30.00Mbps'


# Tests for the steady phase

def test_first_report_leaves_starting(steady_1080p):
    """Test that the first report moves the session to steady"""
    assert steady_1080p.phase == STARTING
    state, encoder = on_report(steady_1080p, 0.0, 20e6, 1.0)

    assert state.phase == STEADY
    assert encoder.resolution == '1080p'
    assert steady_1080p.phase == STARTING


def test_steady_without_loss_keeps_resolution(steady_1080p):
    """Test that a loss-free session never changes resolution"""
    state = drive(steady_1080p, [(0.0, 20e6, float(t)) for t in range(1, 101)])

    assert state.phase == STEADY
    assert state.current.resolution == '1080p'
    assert state.resolution_change_count == 0
    assert state.change_log == ()


def test_two_lossy_reports_drop_to_720p(steady_1080p):
    """Test that consecutive lossy reports open a transient at 720p"""
    state = drive(steady_1080p, [(0.0, 20e6, 1.0), (0.05, 20e6, 2.0)])
    assert state.current.resolution == '1080p'
    assert state.lossy_reports == 1

    state, encoder = on_report(state, 0.05, 20e6, 3.0)
    assert state.phase == TRANSIENT
    assert encoder.resolution == '720p'
    assert encoder.encoder_bitrate == 4e6
    assert reasons(state) == ['loss']
    assert state.hold == 10.0


def test_clean_report_resets_loss_count(steady_1080p):
    """Test that an isolated lossy report is forgiven"""
    state = drive(steady_1080p, [(0.05, 20e6, 1.0), (0.0, 20e6, 2.0), (0.05, 20e6, 3.0)])
    assert state.phase == STEADY
    assert state.lossy_reports == 1


def test_steady_bitrate_follows_target(steady_1080p):
    """Test the bitrate ceiling of target over headroom, floored at the band"""
    state = drive(steady_1080p, [(0.0, 10e6, 1.0)])
    assert state.current.encoder_bitrate == pytest.approx(10e6 / 0.85)

    state = drive(state, [(0.0, 5e6, 2.0)])
    assert state.current.encoder_bitrate == 10e6
    assert state.current.resolution == '1080p'


def test_band_minimum_stays_above_headroom_ceiling(steady_1080p):
    """Test a low loss-free target keeps 1080p at its band minimum"""
    state = drive(steady_1080p, [(0.0, 6e6, float(t)) for t in range(1, 11)])

    assert state.current.encoder_bitrate == 10e6
    assert state.current.encoder_bitrate > 6e6 / 0.85
    assert state.current.resolution == '1080p'
    assert state.phase == STEADY
    assert state.change_log == ()


# Tests for the transient phase

def enter_transient(state, target):
    return drive(state, [(0.05, target, 1.0), (0.05, target, 2.0)])


def test_transient_probes_after_hold(steady_1080p):
    """Test a probe one step up once the hold has passed without loss"""
    state = enter_transient(steady_1080p, 30e6)
    state = drive(state, [(0.0, 30e6, float(t)) for t in range(3, 12)])
    assert state.current.resolution == '720p'
    assert state.current.encoder_bitrate == 14e6

    state, encoder = on_report(state, 0.0, 30e6, 12.0)
    assert encoder.resolution == '1080p'
    assert encoder.encoder_bitrate == pytest.approx(25.5e6)
    assert state.probing
    assert reasons(state) == ['loss', 'probe']


def test_transient_ends_after_a_loss_free_minute(steady_1080p):
    """Test the return to steady 60 s after the last loss"""
    state = enter_transient(steady_1080p, 30e6)
    state = drive(state, [(0.0, 30e6, float(t)) for t in range(3, 62)])
    assert state.phase == TRANSIENT

    state = drive(state, [(0.0, 30e6, 62.0)])
    assert state.phase == STEADY
    assert state.current.resolution == '1080p'
    assert not state.probing


def test_failed_probe_reverts_and_doubles_hold(steady_1080p):
    """Test that loss during a probe reverts it and doubles the hold"""
    state = enter_transient(steady_1080p, 30e6)
    state = drive(state, [(0.0, 30e6, float(t)) for t in range(3, 13)])
    assert state.current.resolution == '1080p'

    state, encoder = on_report(state, 0.05, 30e6, 13.0)
    assert encoder.resolution == '720p'
    assert state.hold == 20.0
    assert not state.probing
    assert reasons(state) == ['loss', 'probe', 'probe_failed']


def test_hold_is_capped(steady_1080p):
    """Test the hold never exceeds the maximum"""
    state = enter_transient(steady_1080p, 30e6)
    t = 3.0
    for _ in range(3):
        while not state.probing:
            state, _ = on_report(state, 0.0, 30e6, t)
            t += 1
        state, _ = on_report(state, 0.05, 30e6, t)
        t += 1
    assert state.hold == 60.0


def test_unviable_probe_steps_down_at_steady(steady_1080p):
    """Test that a held probe above the viable resolution is undone when the transient ends"""
    state = enter_transient(steady_1080p, 15e6)
    state = drive(state, [(0.0, 15e6, float(t)) for t in range(3, 62)])
    assert state.current.resolution == '1080p'

    state = drive(state, [(0.0, 15e6, 62.0)])
    assert state.phase == STEADY
    assert state.current.resolution == '720p'
    assert reasons(state) == ['loss', 'probe', 'not_viable']


def test_sustained_loss_in_transient_stays_lowest(steady_1080p):
    """Test that loss without a probe keeps the lowest resolution"""
    state = enter_transient(steady_1080p, 20e6)
    state = drive(state, [(0.05, 20e6, float(t)) for t in range(3, 10)])
    assert state.phase == TRANSIENT
    assert state.current.resolution == '720p'
    assert state.loss_free_time(10.0) == 0.0


# Tests for on_capacity_increase

def test_upswitch_after_sustained_capacity():
    """Test a step up once the target stays high for five seconds"""
    state = start(initial_config(15e6, max_resolution='1080p'), max_resolution='1080p')
    state = drive(state, [(0.0, 20e6, float(t)) for t in range(1, 6)])
    assert state.current.resolution == '720p'
    assert state.current.encoder_bitrate == 14e6

    state = drive(state, [(0.0, 20e6, 6.0)])
    assert state.current.resolution == '1080p'
    assert state.current.encoder_bitrate == pytest.approx(17e6)
    assert reasons(state) == ['upswitch']


def test_no_upswitch_when_not_viable():
    """Test that a target inside the 720p range never steps up"""
    state = start(initial_config(15e6))
    state = drive(state, [(0.0, 15e6, float(t)) for t in range(1, 31)])
    assert state.current.resolution == '720p'
    assert state.change_log == ()


def test_upswitch_timer_resets():
    """Test that a dip restarts the five-second timer"""
    state = start(initial_config(15e6, max_resolution='1080p'), max_resolution='1080p')
    reports = [(0.0, 20e6, 1.0), (0.0, 20e6, 2.0), (0.0, 20e6, 3.0), (0.0, 15e6, 4.0)]
    reports += [(0.0, 20e6, float(t)) for t in range(5, 10)]
    state = drive(state, reports)
    assert state.current.resolution == '720p'

    state = drive(state, [(0.0, 20e6, 10.0)])
    assert state.current.resolution == '1080p'


def test_capacity_increase_ignored_in_transient(steady_1080p):
    """Test that only the steady phase reacts to capacity increases"""
    state = enter_transient(steady_1080p, 20e6)
    after, encoder = on_capacity_increase(state, 40e6, 5.0)
    assert after is state
    assert encoder.resolution == '720p'


# Tests for transient_length

def test_transient_length():
    """Test the span from the drop to the last change after it"""
    low = EncoderConfig(resolution='720p', encoder_bitrate=4e6)
    high = EncoderConfig(resolution='1080p', encoder_bitrate=10e6)
    log = (
        ResolutionChange(50.0, low, high, 'upswitch'),
        ResolutionChange(125.0, high, low, 'loss'),
        ResolutionChange(140.0, low, high, 'probe'),
    )
    assert transient_length(log, 120.0) == 20.0
    assert transient_length(log, 150.0) == 0.0
    assert transient_length((), 120.0) == 0.0
