"""Tests for generator module"""

import io

import numpy as np
import pytest

from stadia_inspector.analyzer import fit_generator_params, load_timeseries, segment_stats, summary_stats
from stadia_inspector.errors import ConfigError, RateScaleError
from stadia_inspector.generator import (
    DiscreteDist,
    GeneratorParams,
    expected_load,
    generate_frame,
    generate_schedule,
    generate_session,
    generate_stateful_session,
    list_presets,
    load_params,
    load_preset,
    save_params,
    scale_to_rate,
    state_loads,
    state_schedule_preset,
)


# Test Fixtures

@pytest.fixture
def tr_params():
    """The shipped TR 1080p VP9 preset"""
    return load_preset('TR', '1080p', 'VP9')


# Tests for DiscreteDist

def test_discrete_dist_mean_and_bounds():
    """Test mean, min and max of a distribution"""
    dist = DiscreteDist(values=(1, 2, 3), probs=(0.25, 0.5, 0.25))
    assert dist.mean == 2.0
    assert dist.min == 1
    assert dist.max == 3


def test_discrete_dist_rejects_bad_probs():
    """Test probabilities must sum to one"""
    with pytest.raises(ValueError):
        DiscreteDist(values=(1, 2), probs=(0.5, 0.6))
    with pytest.raises(ValueError):
        DiscreteDist(values=(1, 2), probs=(1.0,))


def test_discrete_dist_from_samples():
    """Test the empirical distribution of samples"""
    dist = DiscreteDist.from_samples([4, 4, 4, 8])
    assert dist.values == (4.0, 8.0)
    assert dist.probs == (0.75, 0.25)


def test_total_variation():
    """Test total-variation distance"""
    a = DiscreteDist(values=(1, 2), probs=(0.5, 0.5))
    b = DiscreteDist(values=(2, 3), probs=(0.5, 0.5))
    assert a.total_variation(a) == 0.0
    assert a.total_variation(b) == pytest.approx(0.5)


# Tests for GeneratorParams

def test_params_groups_must_fit_in_frame():
    """Test that the group burst must fit inside one frame period"""
    with pytest.raises(ValueError):
        GeneratorParams(
            group_count_dist=DiscreteDist.point(10),
            group_size_dist=DiscreteDist.point(8),
            group_spacing_ms=2.0,
            video_size_dist=DiscreteDist.point(1194),
        )


def test_params_reject_oversized_packets():
    """Test that packet sizes stay within UDP payload bounds"""
    with pytest.raises(ValueError):
        GeneratorParams(
            group_count_dist=DiscreteDist.point(6),
            group_size_dist=DiscreteDist.point(8),
            video_size_dist=DiscreteDist.point(70000),
        )


def test_expected_load(tr_params):
    """Test the analytic load of the TR 1080p preset"""
    load = expected_load(tr_params)
    assert load['audio'] == pytest.approx(0.144)
    assert load['video'] == pytest.approx(25.488, rel=1e-4)
    assert load['total'] == pytest.approx(25.632, rel=1e-4)


# Tests for generation

def test_generate_frame(tr_params):
    """Test a single frame burst layout"""
    rng = np.random.default_rng(1)
    packets = generate_frame(tr_params, rng, frame_start=1.0, frame_id=3)

    assert 5 * 7 <= len(packets) <= 7 * 9
    assert all(p.stream == 'video' and p.direction == 'downlink' for p in packets)
    assert all(p.frame_id == 3 for p in packets)
    assert packets[0].t == 1.0
    assert max(p.t for p in packets) < 1.0 + tr_params.frame_period


def test_generate_session_is_deterministic(tr_params):
    """Test that the seed fixes the generated trace"""
    first = generate_session(tr_params.with_seed(11), 5.0)
    second = generate_session(tr_params.with_seed(11), 5.0)
    other = generate_session(tr_params.with_seed(12), 5.0)

    assert first == second
    assert first != other


def test_generate_session_load(tr_params):
    """Test that the generated load matches the analytic load"""
    trace = generate_session(tr_params, 30.0)
    stats = summary_stats(trace)
    assert stats.load == pytest.approx(expected_load(tr_params)['total'], rel=0.03)


def test_generate_session_protocols(tr_params):
    """Test per-protocol streams carry their own packet sizes"""
    stun = generate_session(tr_params, 10.0, protocol='STUN', direction='uplink')
    assert set(stun.payload_len.tolist()) == {tr_params.stun.uplink_size}
    assert len(stun) == pytest.approx(10.0 / 0.265, rel=0.15)

    rtcp = generate_session(tr_params, 2.0, protocol='RTCP', direction='uplink')
    assert len(rtcp) > 0
    assert rtcp.meta.protocol == 'RTCP'


def test_generate_schedule_is_time_ordered(tr_params):
    """Test that the merged schedule is sorted by time"""
    schedule = generate_schedule(tr_params, 3.0)
    assert np.all(np.diff(schedule.t) >= 0)
    assert schedule.t[-1] < 3.0 + tr_params.frame_period


def test_generate_schedule_bad_duration(tr_params):
    """Test that a session needs a positive duration"""
    with pytest.raises(ValueError):
        generate_schedule(tr_params, 0)


# Tests for scale_to_rate

def test_scale_to_rate_down(tr_params):
    """Test scaling down keeps the expected load exact"""
    scaled = scale_to_rate(tr_params, 10.0)
    assert expected_load(scaled)['total'] == pytest.approx(10.0)
    assert scaled.audio == tr_params.audio
    assert scaled.group_count_dist == tr_params.group_count_dist


def test_scale_to_rate_up(tr_params):
    """Test scaling up only adds packets"""
    scaled = scale_to_rate(tr_params, 40.0)
    assert expected_load(scaled)['total'] == pytest.approx(40.0)
    assert scaled.video_size_dist == tr_params.video_size_dist


def test_scale_to_rate_identity(tr_params):
    """Test the preset's own load returns the preset unchanged"""
    assert scale_to_rate(tr_params, expected_load(tr_params)['total']) is tr_params


def test_scale_to_rate_720p_band(tr_params):
    """Test scaling into the 720p band keeps frames and audio"""
    scaled = scale_to_rate(tr_params, 12.71)
    assert expected_load(scaled)['total'] == pytest.approx(12.71)
    assert expected_load(scaled)['audio'] == pytest.approx(0.144)
    assert scaled.frame_rate == tr_params.frame_rate


def test_scale_to_rate_below_floor(tr_params):
    """Test that the target must clear the audio floor"""
    with pytest.raises(RateScaleError):
        scale_to_rate(tr_params, 0.1)


# Tests for presets

def test_list_presets():
    """Test shipped presets cover every game and resolution"""
    presets = list_presets()
    assert 'tr_1080p' in presets
    assert 'sp_4k' in presets
    assert 'states' not in presets


def test_load_preset_codec_section(tr_params):
    """Test H.264 variants relabel full-size packets and lower the load"""
    h264 = load_preset('TR', '1080p', 'H264')

    assert h264.codec == 'H264'
    assert 1194.0 not in h264.video_size_dist.values
    assert 1183.0 in h264.video_size_dist.values
    assert expected_load(h264)['total'] == pytest.approx(expected_load(tr_params)['total'] * 0.922)


@pytest.mark.parametrize("game, load, rel", [('TR', 25.6, 0.05), ('TH', 18.33, 0.05), ('SP', 1.87, 0.10)])
def test_preset_expected_loads(game, load, rel):
    """Test the 1080p presets carry the measured per-game loads"""
    assert expected_load(load_preset(game, '1080p'))['total'] == pytest.approx(load, rel=rel)


@pytest.mark.slow
@pytest.mark.parametrize("game, load, rel", [('TR', 25.6, 0.05), ('TH', 18.33, 0.05), ('SP', 1.87, 0.10)])
def test_ten_minute_session_loads(game, load, rel):
    """Test ten generated minutes reproduce the per-game loads"""
    trace = generate_session(load_preset(game, '1080p').with_seed(8), 600.0)
    assert summary_stats(trace).load == pytest.approx(load, rel=rel)


@pytest.mark.parametrize("name", ['tr_1080p', 'th_1080p', 'tr_720p'])
def test_audio_load_in_measured_range(name):
    """Test the audio stream stays within 110 to 150 kbit/s"""
    game, resolution = name.split('_')
    audio = expected_load(load_preset(game.upper(), resolution))['audio']
    assert 0.110 <= audio <= 0.150


def test_full_size_share_of_sp_video():
    """Test the share of full-size SP video packets"""
    trace = generate_session(load_preset('SP', '1080p').with_seed(10), 120.0)
    video = trace.payload_len[trace.payload_len != 360]
    assert (video >= 1194).mean() == pytest.approx(0.4542, abs=0.02)


@pytest.mark.parametrize("game, resolution", [('TR', '720p'), ('TR', '1080p'), ('TH', '1080p'), ('SP', '1080p')])
def test_fit_recovers_preset(game, resolution):
    """Test fitting a generated minute recovers the preset it came from"""
    params = load_preset(game, resolution).with_seed(9)
    fitted = fit_generator_params(generate_session(params, 60.0))

    assert 1.0 / fitted.frame_rate == pytest.approx(1.0 / params.frame_rate, rel=0.02)
    assert expected_load(fitted)['total'] == pytest.approx(expected_load(params)['total'], rel=0.05)
    assert fitted.video_size_dist.total_variation(params.video_size_dist) < 0.05


def test_load_preset_unknown():
    """Test a missing preset"""
    with pytest.raises(ConfigError):
        load_preset('XX', '1080p')


def test_save_then_load_params(tmp_path, tr_params):
    """Test that saved parameters load back equal"""
    out = io.StringIO()
    save_params(tr_params.with_seed(5), out)
    path = tmp_path / "params.toml"
    path.write_text(out.getvalue())

    assert load_params(path) == tr_params.with_seed(5)


# Tests for game-state sessions

def test_state_loads():
    """Test per-state loads of the shipped table"""
    loads = state_loads('TR')
    assert loads['play'] == 25.6
    assert list(loads) == ['main_menu', 'loading', 'idle', 'play', 'pause']
    with pytest.raises(ConfigError):
        state_loads('XX')


def test_state_schedule_preset():
    """Test the default walk through the game states"""
    schedule = state_schedule_preset('TH', segment_s=60.0)
    assert schedule[0] == ('main_menu', 0.0, 60.0)
    assert schedule[-1] == ('pause', 240.0, 300.0)


def test_generate_stateful_session(tr_params):
    """Test each segment of a stateful session carries its state's load"""
    loads = state_loads('TR')
    schedule = state_schedule_preset('TR', segment_s=20.0)
    trace = generate_stateful_session(tr_params, schedule, loads)

    series = load_timeseries(trace, 1.0)
    checked = [s for s in schedule if s[0] in ('main_menu', 'play')]
    for segment in segment_stats(series, checked, trim=5.0):
        assert segment.mean_load == pytest.approx(loads[segment.state], rel=0.05)
