"""Configuration constants for Stadia Inspector"""

# Dataset limits
MIN_PAYLOAD_LEN = 1
MAX_PAYLOAD_LEN = 65507
DELTA_TOLERANCE_S = 1e-5
TIMESTAMP_DECIMALS = 6

GAMES = ('TR', 'TH', 'SP')
PROTOCOLS = ('RTP', 'RTCP', 'DTLS', 'STUN', 'MIXED')
DIRECTIONS = ('downlink', 'uplink')
CODECS = ('VP9', 'H264', 'NA')
RESOLUTIONS = ('720p', '1080p', '4K', 'NA')
DATASET_IDS = tuple(f"D{i}" for i in range(1, 9))
COLUMNS = tuple(f"Y{i}" for i in range(1, 9))
PACKET_COLUMNS = ('Y1', 'Y2', 'Y3')
STATS_COLUMNS = ('Y4', 'Y5', 'Y6', 'Y7', 'Y8')

GAME_STATES = ('main_menu', 'loading', 'idle', 'play', 'pause')

# Traffic analyzer
DEFAULT_GROUP_GAP_MS = 1.0
DEFAULT_STATE_TRIM_S = 10.0
DEFAULT_MIN_PERIOD_MS = 10.0
DEFAULT_MAX_PERIOD_MS = 40.0
DEFAULT_MIN_CONCENTRATION = 0.3
DEFAULT_AUDIO_SIZE_RANGE = (300, 420)
DEFAULT_AUDIO_PERIOD_MS = 20.0
DEFAULT_AUDIO_PERIOD_TOLERANCE_MS = 2.0
DEFAULT_FIT_MIN_DURATION_S = 10.0
TOP_SIZES_COUNT = 3

ANALYZER_DEFAULTS = {
    'group_gap_ms': DEFAULT_GROUP_GAP_MS,
    'state_trim_s': DEFAULT_STATE_TRIM_S,
    'min_period_ms': DEFAULT_MIN_PERIOD_MS,
    'max_period_ms': DEFAULT_MAX_PERIOD_MS,
    'min_concentration': DEFAULT_MIN_CONCENTRATION,
    'audio_size_min': DEFAULT_AUDIO_SIZE_RANGE[0],
    'audio_size_max': DEFAULT_AUDIO_SIZE_RANGE[1],
    'audio_period_ms': DEFAULT_AUDIO_PERIOD_MS,
    'audio_period_tolerance_ms': DEFAULT_AUDIO_PERIOD_TOLERANCE_MS,
    'fit_min_duration_s': DEFAULT_FIT_MIN_DURATION_S,
}

# Traffic generator
DEFAULT_FRAME_RATE = 60.0
DEFAULT_GROUP_SPACING_MS = 2.0
DEFAULT_INTRA_GROUP_SPACING_MS = 0.1
DEFAULT_STUN_JITTER = 0.1
SMALL_PACKET_SIZE = 43  # smallest video payload seen in the packet-size table
COUNT_SHARE = 0.85  # share of a downward rate change taken by packet counts
RATE_FLOOR_MARGIN_MBPS = 0.05

# Google Congestion Control
GCC_DEFAULTS = {
    'gradient_alpha': 0.1,
    'overuse_threshold_ms': 1.0,
    'increase_factor': 1.05,
    'increase_per_second': False,
    'receive_rate_cap': 1.5,
    'overuse_backoff': 0.85,
    'receive_window_s': 0.5,
    'loss_low': 0.02,
    'loss_high': 0.1,
    'loss_increase': 1.05,
    'loss_decrease_gain': 0.5,
    'as_min': 0.5e6,
    'as_max': 45e6,
    'notify_interval_s': 1.0,
    'notify_change': 0.03,
}

# Link emulator
LINK_DEFAULTS = {
    'one_way_delay_ms': 5.0,
    'queue_cap': 64_000,
    'burst': 10_000,
    'per_packet_overhead': 0,
}
UNLIMITED_RATE = 100e6
STUN_PROBE_SIZE = 81
# IP + UDP headers, counted on the wire by the shaper in simulated scenarios
WIRE_OVERHEAD = 28

# Adaptation engine
RESOLUTION_ORDER = ('720p', '1080p', '4K')
RESOLUTION_HEIGHT = {'720p': 720, '1080p': 1080, '4K': 2160}
BITRATE_BANDS = {
    '720p': (4e6, 14e6),
    '1080p': (10e6, 30e6),
    '4K': (25e6, 45e6),
}
ADAPTATION_DEFAULTS = {
    'refuse_capacity': 10e6,
    'max_720p_capacity': 17.5e6,
    'max_1080p_capacity': 30e6,
    'headroom': 0.85,
    'loss_trigger': 0.02,
    'loss_reports': 2,
    'hold_s': 10.0,
    'probe_window_s': 15.0,
    'max_hold_s': 60.0,
    'steady_after_s': 60.0,
    'upswitch_margin': 1.2,
    'upswitch_after_s': 5.0,
}

# Simulation harness
HARNESS_DEFAULTS = {
    'jitter_alpha': 0.05,
    'jitter_gain': 3.0,
    'jitter_min_ms': 20.0,
    'jitter_max_ms': 120.0,
    'report_interval_s': 1.0,
}
REPORT_VERSION = 1
REPORT_HEADER = f"# stadia-inspector sim report v{REPORT_VERSION}"

# Comparison
DEFAULT_TOLERANCE = 0.05

# Inspector UI trace filters (duration in seconds)
FILTER_DEFAULTS = {
    'min_duration': 0,
    'max_duration': 100_000,
}
SCENARIO_DEFAULTS = {
    'kind': 'drop',
    'limit_mbps': 30.0,
    'at_s': 120.0,
    'duration_s': 300.0,
}

# Color scheme constants
COLORS = {
    'selected_trace_bg': '#d4e3ff',
    'selected_trace_border': '#5b8def',
    'stats_bg': '#eff6ff',
    'stats_border': '#bfdbfe',
    'refused_bg': '#fef2f2',
    'refused_border': '#fecaca',
    'load_line': '#5b8def',
    'rtt_line': '#f97316',
    'fps_line': '#16a34a',
    'loss_bar': '#dc2626',
    'resolution_line': '#7c3aed',
}
