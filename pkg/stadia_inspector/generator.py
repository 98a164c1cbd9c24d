"""Parametric Stadia traffic generator

Video is emitted once per frame period as a burst of packet groups; audio,
STUN keepalives, DTLS input traffic and uplink RTCP feedback run alongside.
Shipped presets live in ``stadia_inspector/presets`` as TOML files.
"""

import logging
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Dict, Iterable, List, Literal, Mapping, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from stadia_inspector.config import (
    COUNT_SHARE,
    DEFAULT_FRAME_RATE,
    DEFAULT_GROUP_SPACING_MS,
    DEFAULT_INTRA_GROUP_SPACING_MS,
    DEFAULT_STUN_JITTER,
    GAME_STATES,
    MAX_PAYLOAD_LEN,
    MIN_PAYLOAD_LEN,
    RATE_FLOOR_MARGIN_MBPS,
    SMALL_PACKET_SIZE,
)
from stadia_inspector.errors import ConfigError, RateScaleError
from stadia_inspector.ingest import Codec, Direction, Game, Resolution, StreamMeta, Trace
from stadia_inspector.settings import load_toml, parse_model

logger = logging.getLogger(__name__)

Stream = Literal['video', 'audio', 'stun', 'dtls', 'rtcp']
STREAMS: Tuple[str, ...] = ('video', 'audio', 'stun', 'dtls', 'rtcp')
DIRECTIONS: Tuple[str, ...] = ('downlink', 'uplink')
STREAM_PROTOCOL = {'video': 'RTP', 'audio': 'RTP', 'stun': 'STUN', 'dtls': 'DTLS', 'rtcp': 'RTCP'}
PROTOCOL_STREAMS = {'RTP': ('video', 'audio'), 'RTCP': ('rtcp',), 'STUN': ('stun',), 'DTLS': ('dtls',)}

PRESET_PACKAGE = 'stadia_inspector.presets'


class DiscreteDist(BaseModel):
    """A finite discrete distribution"""
    model_config = ConfigDict(frozen=True)

    values: Tuple[float, ...]
    probs: Tuple[float, ...]

    @model_validator(mode='after')
    def _check(self) -> "DiscreteDist":
        if not self.values or len(self.values) != len(self.probs):
            raise ValueError("values and probs must be non-empty and of equal length")
        if any(p < 0 for p in self.probs):
            raise ValueError("probabilities must be non-negative")
        if abs(sum(self.probs) - 1.0) > 1e-6:
            raise ValueError(f"probabilities sum to {sum(self.probs)}, not 1")
        return self

    @classmethod
    def point(cls, value: float) -> "DiscreteDist":
        return cls(values=(value,), probs=(1.0,))

    @classmethod
    def from_mapping(cls, weights: Mapping[float, float]) -> "DiscreteDist":
        """Normalised distribution from value -> weight, dropping zero weights"""
        items = sorted((v, w) for v, w in weights.items() if w > 0)
        total = sum(w for _, w in items)
        return cls(values=tuple(v for v, _ in items), probs=tuple(w / total for _, w in items))

    @classmethod
    def from_samples(cls, samples: Iterable[float]) -> "DiscreteDist":
        """Empirical distribution of the observed samples"""
        values, counts = np.unique(np.asarray(list(samples)), return_counts=True)
        if len(values) == 0:
            raise ValueError("cannot build a distribution from no samples")
        return cls.from_mapping({float(v): float(c) for v, c in zip(values, counts)})

    @property
    def mean(self) -> float:
        return float(np.dot(self.values, self.probs))

    @property
    def max(self) -> float:
        return max(v for v, p in zip(self.values, self.probs) if p > 0)

    @property
    def min(self) -> float:
        return min(v for v, p in zip(self.values, self.probs) if p > 0)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.choice(np.asarray(self.values), size=size, p=np.asarray(self.probs))

    def total_variation(self, other: "DiscreteDist") -> float:
        """Total-variation distance to another distribution"""
        mine = dict(zip(self.values, self.probs))
        theirs = dict(zip(other.values, other.probs))
        support = set(mine) | set(theirs)
        return 0.5 * sum(abs(mine.get(v, 0.0) - theirs.get(v, 0.0)) for v in support)


def _check_sizes(dist: DiscreteDist) -> DiscreteDist:
    if any(not MIN_PAYLOAD_LEN <= v <= MAX_PAYLOAD_LEN for v in dist.values):
        raise ValueError(f"packet sizes must lie in [{MIN_PAYLOAD_LEN}, {MAX_PAYLOAD_LEN}]")
    return dist


def _check_counts(dist: DiscreteDist) -> DiscreteDist:
    if any(v < 0 or v != int(v) for v in dist.values):
        raise ValueError("counts must be non-negative integers")
    return dist


class AudioParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    enabled: bool = True
    period_ms: float = Field(20.0, gt=0)
    size: int = Field(360, ge=MIN_PAYLOAD_LEN, le=MAX_PAYLOAD_LEN)


class StunParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    period_ms: float = Field(265.0, gt=0)
    size: int = Field(81, ge=MIN_PAYLOAD_LEN, le=MAX_PAYLOAD_LEN)
    uplink_size: int = Field(79, ge=MIN_PAYLOAD_LEN, le=MAX_PAYLOAD_LEN)
    jitter: float = Field(DEFAULT_STUN_JITTER, ge=0, lt=1)


class DtlsParams(BaseModel):
    """Player input channel, modeled as a memoryless process in each direction"""
    model_config = ConfigDict(frozen=True)

    mean_ipt_ms: float = Field(7.44, gt=0)
    size_dist: DiscreteDist = DiscreteDist.point(119)
    uplink_mean_ipt_ms: float = Field(7.10, gt=0)
    uplink_size_dist: DiscreteDist = DiscreteDist.point(123)

    _sizes = field_validator('size_dist', 'uplink_size_dist')(_check_sizes)


class RtcpParams(BaseModel):
    """Uplink feedback; one packet per received video group unless per_group is off"""
    model_config = ConfigDict(frozen=True)

    per_group: bool = True
    mean_ipt_ms: float = Field(1.44, gt=0)
    size_dist: DiscreteDist = DiscreteDist.point(66)

    _sizes = field_validator('size_dist')(_check_sizes)


class GeneratorParams(BaseModel):
    """The full parametric traffic model of one game/resolution/codec"""
    model_config = ConfigDict(frozen=True)

    name: str = "custom"
    game: Game = 'TR'
    codec: Codec = 'VP9'
    resolution: Resolution = '1080p'
    frame_rate: float = Field(DEFAULT_FRAME_RATE, gt=0)
    group_count_dist: DiscreteDist
    group_size_dist: DiscreteDist
    group_spacing_ms: float = Field(DEFAULT_GROUP_SPACING_MS, ge=0)
    intra_group_spacing_ms: float = Field(DEFAULT_INTRA_GROUP_SPACING_MS, ge=0)
    video_size_dist: DiscreteDist
    audio: AudioParams = AudioParams()
    stun: StunParams = StunParams()
    dtls: DtlsParams = DtlsParams()
    rtcp_uplink: RtcpParams = RtcpParams()
    seed: int = 0

    _counts = field_validator('group_count_dist', 'group_size_dist')(_check_counts)
    _sizes = field_validator('video_size_dist')(_check_sizes)

    @model_validator(mode='after')
    def _groups_fit_in_frame(self) -> "GeneratorParams":
        frame_ms = 1000.0 / self.frame_rate
        span = self.group_spacing_ms * (self.group_count_dist.max - 1)
        if span >= frame_ms:
            raise ValueError(
                f"{int(self.group_count_dist.max)} groups spaced {self.group_spacing_ms} ms "
                f"do not fit in a {frame_ms:.2f} ms frame")
        return self

    @property
    def frame_period(self) -> float:
        return 1.0 / self.frame_rate

    def with_seed(self, seed: int) -> "GeneratorParams":
        return self.model_copy(update={'seed': seed})


@dataclass(slots=True)
class ScheduledPacket:
    """A packet the source emits at time t (seconds from session start)"""
    t: float
    size: int
    stream: str
    direction: str
    frame_id: Optional[int] = None


@dataclass(frozen=True)
class PacketSchedule:
    """All packets of a generated session, column-wise and time-ordered"""
    t: np.ndarray
    size: np.ndarray
    stream: np.ndarray  # index into STREAMS
    direction: np.ndarray  # index into DIRECTIONS

    def __len__(self) -> int:
        return len(self.t)

    def mask(self, streams: Sequence[str], direction: str) -> np.ndarray:
        codes = [STREAMS.index(s) for s in streams]
        return np.isin(self.stream, codes) & (self.direction == DIRECTIONS.index(direction))

    def to_trace(self, meta: StreamMeta, streams: Sequence[str], start_epoch: float = 0.0) -> Trace:
        m = self.mask(streams, meta.direction)
        return Trace.from_times(meta, self.t[m], self.size[m], start_epoch)


def expected_load(params: GeneratorParams) -> Dict[str, float]:
    """Analytic RTP downlink load in Mbit/s: video, audio and their total"""
    video = (params.frame_rate * params.group_count_dist.mean * params.group_size_dist.mean
             * params.video_size_dist.mean * 8 / 1e6)
    audio = 0.0
    if params.audio.enabled:
        audio = params.audio.size * 8 / (params.audio.period_ms / 1000.0) / 1e6
    return {'video': video, 'audio': audio, 'total': video + audio}


def generate_frame(params: GeneratorParams, rng: np.random.Generator, frame_start: float,
                   frame_id: Optional[int] = None) -> List[ScheduledPacket]:
    """Packets of one video frame burst

    Group g starts at frame_start + g * group_spacing; its packets follow each
    other at the intra-group spacing.
    """
    spacing = params.group_spacing_ms / 1000.0
    intra = params.intra_group_spacing_ms / 1000.0
    groups = int(params.group_count_dist.sample(rng, 1)[0])
    packets = []
    for g in range(groups):
        count = int(params.group_size_dist.sample(rng, 1)[0])
        sizes = params.video_size_dist.sample(rng, count)
        for k in range(count):
            packets.append(ScheduledPacket(
                t=frame_start + g * spacing + k * intra,
                size=int(sizes[k]),
                stream='video',
                direction='downlink',
                frame_id=frame_id,
            ))
    return packets


def _video_arrays(params: GeneratorParams, rng: np.random.Generator,
                  duration: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorised frame bursts: packet times, sizes and group start times"""
    n_frames = max(1, math.ceil(duration * params.frame_rate - 1e-9))
    frame_starts = np.arange(n_frames) / params.frame_rate

    groups = params.group_count_dist.sample(rng, n_frames).astype(np.int64)
    total_groups = int(groups.sum())
    group_frame = np.repeat(np.arange(n_frames), groups)
    group_index = np.arange(total_groups) - np.repeat(np.cumsum(groups) - groups, groups)
    group_start = frame_starts[group_frame] + group_index * params.group_spacing_ms / 1000.0

    counts = params.group_size_dist.sample(rng, total_groups).astype(np.int64)
    total = int(counts.sum())
    packet_group = np.repeat(np.arange(total_groups), counts)
    packet_index = np.arange(total) - np.repeat(np.cumsum(counts) - counts, counts)
    times = group_start[packet_group] + packet_index * params.intra_group_spacing_ms / 1000.0
    sizes = params.video_size_dist.sample(rng, total).astype(np.int64)

    group_end = group_start + np.maximum(counts - 1, 0) * params.intra_group_spacing_ms / 1000.0
    return times, sizes, group_end[counts > 0]


def _jittered_periodic(rng: np.random.Generator, duration: float, period: float, jitter: float) -> np.ndarray:
    n = int(duration / period) + 2
    gaps = period * (1.0 + rng.uniform(-jitter, jitter, size=n))
    times = np.cumsum(gaps) - gaps[0]
    return times[times < duration]


def _poisson(rng: np.random.Generator, duration: float, mean_ipt: float) -> np.ndarray:
    n = int(duration / mean_ipt * 1.2) + 16
    times = np.cumsum(rng.exponential(mean_ipt, size=n))
    while times[-1] < duration:
        times = np.concatenate([times, times[-1] + np.cumsum(rng.exponential(mean_ipt, size=n))])
    return times[times < duration]


def generate_schedule(params: GeneratorParams, duration: float) -> PacketSchedule:
    """Every stream of a session, deterministic given params.seed

    Args:
        params: Traffic model
        duration: Session length in seconds (> 0)
    """
    if duration <= 0:
        raise ValueError(f"duration must be positive, got {duration}")
    rng = np.random.default_rng(params.seed)
    parts: List[Tuple[np.ndarray, np.ndarray, str, str]] = []

    video_t, video_size, group_end = _video_arrays(params, rng, duration)
    parts.append((video_t, video_size, 'video', 'downlink'))

    if params.audio.enabled:
        audio_t = np.arange(0.0, duration, params.audio.period_ms / 1000.0)
        parts.append((audio_t, np.full(len(audio_t), params.audio.size), 'audio', 'downlink'))

    stun_period = params.stun.period_ms / 1000.0
    for direction, size in (('uplink', params.stun.uplink_size), ('downlink', params.stun.size)):
        stun_t = _jittered_periodic(rng, duration, stun_period, params.stun.jitter)
        parts.append((stun_t, np.full(len(stun_t), size), 'stun', direction))

    dtls = params.dtls
    for direction, ipt, dist in (('downlink', dtls.mean_ipt_ms, dtls.size_dist),
                                 ('uplink', dtls.uplink_mean_ipt_ms, dtls.uplink_size_dist)):
        dtls_t = _poisson(rng, duration, ipt / 1000.0)
        parts.append((dtls_t, dist.sample(rng, len(dtls_t)), 'dtls', direction))

    rtcp = params.rtcp_uplink
    if rtcp.per_group:
        rtcp_t = group_end + params.intra_group_spacing_ms / 1000.0
    else:
        rtcp_t = _poisson(rng, duration, rtcp.mean_ipt_ms / 1000.0)
    parts.append((rtcp_t, rtcp.size_dist.sample(rng, len(rtcp_t)), 'rtcp', 'uplink'))

    t = np.concatenate([p[0] for p in parts])
    size = np.concatenate([np.asarray(p[1], dtype=np.int64) for p in parts])
    stream = np.concatenate([np.full(len(p[0]), STREAMS.index(p[2]), dtype=np.int8) for p in parts])
    direction = np.concatenate([np.full(len(p[0]), DIRECTIONS.index(p[3]), dtype=np.int8) for p in parts])
    order = np.argsort(t, kind='stable')
    return PacketSchedule(t[order], size[order], stream[order], direction[order])


def generate_session(params: GeneratorParams, duration: float, protocol: str = 'RTP',
                     direction: Direction = 'downlink', start_epoch: float = 0.0,
                     dataset_id: str = 'D2') -> Trace:
    """Generated trace of one protocol/direction, in the dataset's format

    The default is the downlink RTP stream (video and audio), the stream the
    analyzer's load figures refer to.
    """
    schedule = generate_schedule(params, duration)
    meta = StreamMeta(game=params.game, protocol=protocol, direction=direction,
                      codec=params.codec, resolution=params.resolution, dataset_id=dataset_id)
    streams = PROTOCOL_STREAMS[protocol] if protocol != 'MIXED' else STREAMS
    return schedule.to_trace(meta, streams, start_epoch)


def _scale_counts(dist: DiscreteDist, ratio: float) -> DiscreteDist:
    """Stretch integer support by ratio, splitting mass to keep the mean exact"""
    weights: Dict[float, float] = {}
    for value, prob in zip(dist.values, dist.probs):
        x = value * ratio
        low = math.floor(x)
        frac = x - low
        weights[float(low)] = weights.get(float(low), 0.0) + prob * (1.0 - frac)
        weights[float(low + 1)] = weights.get(float(low + 1), 0.0) + prob * frac
    return DiscreteDist.from_mapping({v: w for v, w in weights.items() if w > 1e-12})


def _shrink_sizes(dist: DiscreteDist, ratio: float) -> DiscreteDist:
    """Mix in small packets so the mean size becomes ratio times the original"""
    mean = dist.mean
    if mean <= SMALL_PACKET_SIZE:
        raise RateScaleError(f"mean packet size {mean:.1f} B cannot shrink further")
    mix = (mean - mean * ratio) / (mean - SMALL_PACKET_SIZE)
    if not 0.0 <= mix < 1.0:
        raise RateScaleError(f"cannot shrink mean packet size by {ratio:.3f}")
    weights = {v: p * (1.0 - mix) for v, p in zip(dist.values, dist.probs)}
    weights[float(SMALL_PACKET_SIZE)] = weights.get(float(SMALL_PACKET_SIZE), 0.0) + mix
    return DiscreteDist.from_mapping(weights)


def scale_to_rate(params: GeneratorParams, target_rate: float) -> GeneratorParams:
    """Rescale the video model so the expected RTP downlink load is target_rate

    Packets per group absorb most of a reduction and the size distribution
    shifts toward small packets for the rest; increases only add packets.
    Audio, STUN, DTLS and RTCP are untouched.

    Args:
        params: Model to rescale
        target_rate: Expected video plus audio load in Mbit/s

    Raises:
        RateScaleError: target at or below the audio floor
    """
    load = expected_load(params)
    floor = load['audio'] + RATE_FLOOR_MARGIN_MBPS
    if target_rate <= floor:
        raise RateScaleError(f"target {target_rate:.3f} Mbit/s is below the {floor:.3f} Mbit/s floor")
    if load['video'] <= 0:
        raise RateScaleError("model has no video traffic to scale")

    ratio = (target_rate - load['audio']) / load['video']
    if abs(ratio - 1.0) < 1e-9:
        return params

    count_ratio, size_ratio = ratio, 1.0
    if ratio < 1.0:
        count_ratio = ratio ** COUNT_SHARE
        smallest = min(v for v in params.group_size_dist.values if v > 0)
        count_ratio = max(count_ratio, 1.0 / smallest)
        size_ratio = ratio / count_ratio

    update = {'group_size_dist': _scale_counts(params.group_size_dist, count_ratio)}
    if size_ratio < 1.0:
        update['video_size_dist'] = _shrink_sizes(params.video_size_dist, size_ratio)
    logger.debug("Scaled %s to %.2f Mbit/s (counts x%.3f, sizes x%.3f)",
                 params.name, target_rate, count_ratio, size_ratio)
    return params.model_copy(update=update)


def _preset_text(name: str) -> Path:
    return resources.files(PRESET_PACKAGE).joinpath(f"{name}.toml")


def list_presets() -> List[str]:
    """Names of the shipped game/resolution presets"""
    return sorted(
        p.name[:-len('.toml')] for p in resources.files(PRESET_PACKAGE).iterdir()
        if p.name.endswith('.toml') and p.name != 'states.toml'
    )


def _apply_codec(params: GeneratorParams, codec: str, section: Mapping) -> GeneratorParams:
    """Apply a preset's [codecs.X] section: size relabelling and a load ratio"""
    size_map = {float(a): float(b) for a, b in section.get('size_map', [])}
    sizes = params.video_size_dist
    if size_map:
        weights: Dict[float, float] = {}
        for v, p in zip(sizes.values, sizes.probs):
            key = size_map.get(v, v)
            weights[key] = weights.get(key, 0.0) + p
        sizes = DiscreteDist.from_mapping(weights)
    ratio = float(section.get('load_ratio', 1.0))
    changed = params.model_copy(update={
        'video_size_dist': sizes,
        'codec': codec,
        'name': f"{params.name}_{codec.lower()}",
    })
    return scale_to_rate(changed, expected_load(params)['total'] * ratio)


def params_from_dict(data: Mapping, source: str = "params") -> GeneratorParams:
    """Validate a generator parameter mapping (the TOML layout)"""
    data = {k: v for k, v in data.items() if k != 'codecs'}
    return parse_model(GeneratorParams, data, source)


def load_params(path: Path) -> GeneratorParams:
    """Read generator parameters from a TOML file"""
    return params_from_dict(load_toml(path), str(path))


def load_preset(game: str, resolution: str = '1080p', codec: str = 'VP9') -> GeneratorParams:
    """Shipped preset for a game, resolution and codec

    Raises:
        ConfigError: no preset for the game/resolution, or no section for the codec
    """
    name = f"{game.lower()}_{resolution.lower()}"
    path = _preset_text(name)
    if not path.is_file():
        raise ConfigError(f"no preset named {name}; available: {', '.join(list_presets())}")
    data = load_toml(path)
    params = params_from_dict(data, name)
    if codec == params.codec:
        return params
    section = data.get('codecs', {}).get(codec)
    if section is None:
        raise ConfigError(f"preset {name} has no [codecs.{codec}] section")
    return _apply_codec(params, codec, section)


def save_params(params: GeneratorParams, out) -> None:
    """Write parameters in the TOML layout read by load_params"""
    def dist(d: DiscreteDist) -> str:
        values = ', '.join(repr(float(v)) for v in d.values)
        probs = ', '.join(repr(float(p)) for p in d.probs)
        return f"{{ values = [{values}], probs = [{probs}] }}"

    lines = [
        f'name = "{params.name}"',
        f'game = "{params.game}"',
        f'codec = "{params.codec}"',
        f'resolution = "{params.resolution}"',
        f'frame_rate = {params.frame_rate!r}',
        f'group_spacing_ms = {params.group_spacing_ms!r}',
        f'intra_group_spacing_ms = {params.intra_group_spacing_ms!r}',
        f'seed = {params.seed}',
        f'group_count_dist = {dist(params.group_count_dist)}',
        f'group_size_dist = {dist(params.group_size_dist)}',
        f'video_size_dist = {dist(params.video_size_dist)}',
        '',
        '[audio]',
        f'enabled = {str(params.audio.enabled).lower()}',
        f'period_ms = {params.audio.period_ms!r}',
        f'size = {params.audio.size}',
        '',
        '[stun]',
        f'period_ms = {params.stun.period_ms!r}',
        f'size = {params.stun.size}',
        f'uplink_size = {params.stun.uplink_size}',
        f'jitter = {params.stun.jitter!r}',
        '',
        '[dtls]',
        f'mean_ipt_ms = {params.dtls.mean_ipt_ms!r}',
        f'size_dist = {dist(params.dtls.size_dist)}',
        f'uplink_mean_ipt_ms = {params.dtls.uplink_mean_ipt_ms!r}',
        f'uplink_size_dist = {dist(params.dtls.uplink_size_dist)}',
        '',
        '[rtcp_uplink]',
        f'per_group = {str(params.rtcp_uplink.per_group).lower()}',
        f'mean_ipt_ms = {params.rtcp_uplink.mean_ipt_ms!r}',
        f'size_dist = {dist(params.rtcp_uplink.size_dist)}',
    ]
    out.write('\n'.join(lines) + '\n')


def state_loads(game: str) -> Dict[str, float]:
    """Per-state mean RTP load (Mbit/s) of a game, from presets/states.toml"""
    data = load_toml(_preset_text('states'))
    if game not in data:
        raise ConfigError(f"no game-state loads for {game}")
    loads = {state: float(data[game][state]) for state in GAME_STATES if state in data[game]}
    return loads


def state_schedule_preset(game: str, segment_s: float = 120.0) -> List[Tuple[str, float, float]]:
    """The measurement campaign's state walk: one segment per state"""
    states = list(state_loads(game))
    return [(state, i * segment_s, (i + 1) * segment_s) for i, state in enumerate(states)]


def generate_stateful_session(play_params: GeneratorParams,
                              schedule: Sequence[Tuple[str, float, float]],
                              loads: Mapping[str, float]) -> Trace:
    """Concatenate per-state sessions, each scaled to its state's mean load"""
    times, sizes = [], []
    for i, (state, start, end) in enumerate(schedule):
        params = scale_to_rate(play_params, loads[state]).with_seed(play_params.seed + i)
        schedule_i = generate_schedule(params, end - start)
        mask = schedule_i.mask(PROTOCOL_STREAMS['RTP'], 'downlink')
        times.append(schedule_i.t[mask] + start)
        sizes.append(schedule_i.size[mask])
    meta = StreamMeta(game=play_params.game, protocol='RTP', direction='downlink',
                      codec=play_params.codec, resolution=play_params.resolution, dataset_id='D3')
    return Trace.from_times(meta, np.concatenate(times), np.concatenate(sizes))
