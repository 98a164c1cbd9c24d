"""Closed-loop session simulator and report comparison

One simulated session wires the generator to a shaped link. The receiver
rebuilds frames, runs the delay-based half of GCC and sends a report every
second; reports and Ar notifications travel back as RTCP on the uplink, where
they compete with STUN and player input and can be lost. The sender applies
the feedback through the loss-based half of GCC and the adaptation engine.
Time advances from one frame tick to the next and everything between two
ticks is handled in time order: packet arrivals at the receiver, periodic
reports, player input and feedback reaching the sender.

The per-second records mirror the WebRTC-internals columns of the dataset
(frame height, decoded fps, RTT, packets lost, jitter-buffer delay) plus the
delivered load and the controller state.
"""

import heapq
import io
import itertools
import logging
import math
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Deque, Dict, Iterable, List, Literal, Mapping, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from stadia_inspector import adaptation, exporters
from stadia_inspector.adaptation import AdaptationState, EncoderConfig, ResolutionChange, SessionRefused, StreamResolution
from stadia_inspector.analyzer import TrafficStats, percentile
from stadia_inspector.config import DEFAULT_TOLERANCE, RESOLUTION_HEIGHT, RESOLUTION_ORDER
from stadia_inspector.congestion import FeedbackMsg, FrameSample, GccController
from stadia_inspector.errors import InsufficientDataError, UnknownMetricError
from stadia_inspector.generator import (
    STREAMS,
    GeneratorParams,
    ScheduledPacket,
    expected_load,
    generate_frame,
    list_presets,
    load_preset,
    scale_to_rate,
)
from stadia_inspector.ingest import Game
from stadia_inspector.link import Delivered, Link, LinkConfig, LinkLogRow, current_rate
from stadia_inspector.settings import (
    AdaptationConfig,
    FrozenModel,
    GccConfig,
    HarnessConfig,
    load_toml,
    parse_model,
)

logger = logging.getLogger(__name__)

RTP_STREAMS = ('video', 'audio')
# encoder rates are rounded to this step (Mbit/s) before rescaling a preset
RATE_STEP_MBPS = 0.1


class Scenario(BaseModel):
    """One simulated session: game preset, link and controller settings"""
    model_config = ConfigDict(frozen=True, extra='forbid')

    name: str = 'scenario'
    game: Game = 'TR'
    max_resolution: StreamResolution = '1080p'
    codec: Literal['VP9', 'H264'] = 'VP9'
    link: LinkConfig = LinkConfig()
    duration: float = Field(gt=0)
    seed: int = 0
    # capacity the session start sees; the first schedule rate when unset
    initial_capacity: Optional[float] = Field(None, gt=0)
    gcc: GccConfig = GccConfig()
    adaptation: AdaptationConfig = AdaptationConfig()
    harness: HarnessConfig = HarnessConfig()

    @model_validator(mode='after')
    def _presets_exist(self) -> 'Scenario':
        available = set(list_presets())
        for resolution in self.resolutions:
            name = f"{self.game.lower()}_{resolution.lower()}"
            if name not in available:
                raise ValueError(f"no preset {name} for game {self.game}")
        return self

    @property
    def resolutions(self) -> Tuple[str, ...]:
        return RESOLUTION_ORDER[:RESOLUTION_ORDER.index(self.max_resolution) + 1]

    @property
    def start_capacity(self) -> float:
        if self.initial_capacity is not None:
            return self.initial_capacity
        return current_rate(self.link, self.link.capacity_schedule[0][0])

    def capacity_drop_time(self) -> Optional[float]:
        """Time of the first capacity decrease in the link schedule"""
        schedule = self.link.capacity_schedule
        for (_, before), (t, after) in zip(schedule, schedule[1:]):
            if after < before:
                return t
        return None


def load_scenario(path: Path) -> Scenario:
    """Read a scenario TOML file (see README for the layout)"""
    return parse_model(Scenario, load_toml(path), str(path))


@dataclass(frozen=True, slots=True)
class SecondRecord:
    second: int
    resolution_height: int
    fps: int
    rtt: Optional[float]  # s, None when the probe was lost
    packets_lost: int
    jitter_buffer_delay: float  # s
    delivered_load: float  # Mbit/s of RTP payload
    target_rate: float  # bit/s
    encoder_bitrate: float  # bit/s
    phase: str


@dataclass(slots=True)
class StreamCounters:
    """Packet accounting of one stream at the end of a run"""
    generated: int = 0
    delivered: int = 0
    dropped: int = 0
    in_flight: int = 0


@dataclass
class SimReport:
    scenario: Scenario
    records: List[SecondRecord] = field(default_factory=list)
    refused: bool = False
    reason: Optional[str] = None
    changes: Tuple[ResolutionChange, ...] = ()
    streams: Dict[str, StreamCounters] = field(default_factory=dict)
    gcc_history: List[Tuple[float, float, float, float]] = field(default_factory=list)
    final_phase: Optional[str] = None
    link_log: List[LinkLogRow] = field(default_factory=list)

    def to_csv(self) -> str:
        out = io.StringIO()
        exporters.write_report_csv(out, self)
        return out.getvalue()

    def to_json(self) -> str:
        return exporters.to_json(exporters.report_to_dict(self))

    def summary(self, t_drop: Optional[float] = None) -> Dict[str, Optional[float]]:
        """Scalar metrics for comparison; RTT and jitter-buffer values in ms

        t_drop defaults to the scenario's first capacity decrease.
        """
        if not self.records:
            raise InsufficientDataError(f"report for {self.scenario.name} has no records")
        if t_drop is None:
            t_drop = self.scenario.capacity_drop_time()
        rtts = [r.rtt * 1000.0 for r in self.records if r.rtt is not None]
        loads = [r.delivered_load for r in self.records]
        tail = loads[-min(len(loads), 60):]
        metrics: Dict[str, Optional[float]] = {
            'mean_load': float(np.mean(loads)),
            'tail_load': float(np.mean(tail)),
            'fps_mean': float(np.mean([r.fps for r in self.records])),
            'rtt_mean': float(np.mean(rtts)) if rtts else None,
            'rtt_p95': percentile(rtts, 95) if rtts else None,
            'jitter_buffer_mean': float(np.mean([r.jitter_buffer_delay for r in self.records])) * 1000.0,
            'packets_lost': float(sum(r.packets_lost for r in self.records)),
            'final_resolution': float(self.records[-1].resolution_height),
            'resolution_changes': float(len(self.changes)),
            'transient_length': None,
            'loss_spike_time': None,
        }
        if t_drop is not None:
            metrics['transient_length'] = adaptation.transient_length(self.changes, t_drop)
            lossy = [r.second for r in self.records if r.second >= math.floor(t_drop) and r.packets_lost > 0]
            if lossy:
                metrics['loss_spike_time'] = lossy[0] - t_drop
        return metrics


@dataclass(slots=True)
class _FrameTrack:
    start: float
    second: int
    expected: int
    resolved: int = 0
    lost: int = 0
    first_send: float = math.inf
    last_send: float = -math.inf
    first_arrival: Optional[float] = None
    last_arrival: Optional[float] = None
    max_gap: Optional[float] = None


class _Session:
    """Mutable state of one run; single-threaded and deterministic for a seed"""

    def __init__(self, scenario: Scenario, encoder: EncoderConfig, log_packets: bool = False):
        self.scenario = scenario
        self.config = scenario.harness
        self.duration = float(scenario.duration)
        self.n_seconds = max(1, math.ceil(self.duration - 1e-9))
        self.rng = np.random.default_rng(scenario.seed)
        self.link = Link(scenario.link, log_packets=log_packets)
        self.owd = scenario.link.one_way_delay
        self.overhead = scenario.link.per_packet_overhead

        self.presets: Dict[str, GeneratorParams] = {
            r: load_preset(scenario.game, r, scenario.codec) for r in scenario.resolutions
        }
        self._scaled: Dict[Tuple[str, float], GeneratorParams] = {}
        self.frame_rate = self.presets[encoder.resolution].frame_rate
        self.frame_period = 1.0 / self.frame_rate

        self.gcc = GccController(encoder.encoder_bitrate, scenario.gcc)
        self.state: AdaptationState = adaptation.start(encoder, scenario.max_resolution, 0.0, scenario.adaptation)

        self._events: List[Tuple[float, int, str, object]] = []
        self._seq = itertools.count()
        for s in range(1, int(math.floor(self.duration)) + 1):
            self._push(float(s), 'report', s)

        self._delivered: Deque[Tuple[float, ScheduledPacket]] = deque()
        self._dropped: Deque[Tuple[float, ScheduledPacket]] = deque()
        self._frames: Dict[int, _FrameTrack] = {}
        self._pending_stun: List[ScheduledPacket] = []
        self._next_audio = 0
        # player input: Poisson on both directions of the DTLS channel
        dtls = self.presets[encoder.resolution].dtls
        self._next_dtls = float(self.rng.exponential(dtls.mean_ipt_ms / 1000.0))
        self._push(float(self.rng.exponential(dtls.uplink_mean_ipt_ms / 1000.0)), 'input', None)
        self._last_video_arrival: Optional[float] = None
        self._base_delay = math.inf
        self._gap_ewma: Optional[float] = None
        self.jitter_buffer = self._clamp_jitter(self.frame_period)
        self._interval_received = 0
        self._interval_lost = 0

        self.streams = {name: StreamCounters() for name in STREAMS}
        n = self.n_seconds
        self.fps = [0] * n
        self.lost = [0] * n
        self.rtt: List[Optional[float]] = [None] * n
        self.load_bytes = [0] * n
        self.jb_sum = [0.0] * n
        self.jb_count = [0] * n
        self.snapshot: List[Optional[Tuple[int, float, float, str]]] = [None] * n

    def _push(self, t: float, kind: str, payload: object) -> None:
        heapq.heappush(self._events, (t, next(self._seq), kind, payload))

    def _clamp_jitter(self, value: float) -> float:
        return min(max(value, self.config.jitter_min_ms / 1000.0), self.config.jitter_max_ms / 1000.0)

    def _params_for(self, encoder: EncoderConfig) -> GeneratorParams:
        """The resolution's preset rescaled to the encoder bitrate

        An unconstrained encoder produces the preset's own video load.
        """
        base = self.presets[encoder.resolution]
        load = expected_load(base)
        video = round(min(encoder.encoder_bitrate / 1e6, load['video']) / RATE_STEP_MBPS) * RATE_STEP_MBPS
        key = (encoder.resolution, video)
        if key not in self._scaled:
            self._scaled[key] = scale_to_rate(base, video + load['audio'])
        return self._scaled[key]

    # -- receiver ----------------------------------------------------------

    def _next_packet_time(self) -> float:
        t = math.inf
        if self._delivered:
            t = self._delivered[0][0]
        if self._dropped:
            t = min(t, self._dropped[0][0])
        return t

    def advance_to(self, t_end: float, control: bool = True) -> None:
        """Handle every arrival, drop notice and control event up to t_end"""
        while True:
            t_packet = self._next_packet_time()
            t_event = self._events[0][0] if control and self._events else math.inf
            t_next = min(t_packet, t_event)
            if t_next > t_end or t_next == math.inf:
                return
            if t_packet <= t_event:
                self._receive_next()
            else:
                t, _, kind, payload = heapq.heappop(self._events)
                if kind == 'report':
                    self._send_report(t)
                elif kind == 'input':
                    self._send_input(t)
                else:
                    self._apply_feedback(payload, t)

    def _receive_next(self) -> None:
        delivered_first = bool(self._delivered) and (
            not self._dropped or self._delivered[0][0] <= self._dropped[0][0])
        if delivered_first:
            t, packet = self._delivered.popleft()
            self._on_arrival(packet, t)
        else:
            t, packet = self._dropped.popleft()
            self._on_loss(packet, t)

    def _on_arrival(self, packet: ScheduledPacket, t: float) -> None:
        counters = self.streams[packet.stream]
        if t <= self.duration:
            counters.delivered += 1
        else:
            counters.in_flight += 1
        if packet.stream not in RTP_STREAMS:
            return
        self.gcc.record_arrival(t, packet.size + self.overhead)
        self._interval_received += 1
        second = int(t)
        if t <= self.duration and second < self.n_seconds:
            self.load_bytes[second] += packet.size
        if packet.stream != 'video':
            return

        track = self._frames[packet.frame_id]
        gap = None if self._last_video_arrival is None else t - self._last_video_arrival
        self._last_video_arrival = t
        if gap is not None and (track.max_gap is None or gap > track.max_gap):
            track.max_gap = gap
        self._base_delay = min(self._base_delay, t - packet.t)
        if track.first_arrival is None:
            track.first_arrival = t
        track.last_arrival = t
        track.first_send = min(track.first_send, packet.t)
        track.last_send = max(track.last_send, packet.t)
        track.resolved += 1
        if track.resolved == track.expected:
            self._finish_frame(packet.frame_id, track, t)

    def _on_loss(self, packet: ScheduledPacket, t: float) -> None:
        if packet.stream not in RTP_STREAMS:
            return
        self._interval_lost += 1
        if packet.stream == 'video':
            track = self._frames[packet.frame_id]
            track.lost += 1
            track.resolved += 1
            if track.resolved == track.expected:
                self._finish_frame(packet.frame_id, track, t)

    def _finish_frame(self, frame_id: int, track: _FrameTrack, now: float) -> None:
        """Decide decoding against the jitter-buffer deadline, then update the buffer and GCC"""
        del self._frames[frame_id]
        deadline = track.start + self._base_delay + self.jitter_buffer
        decoded = track.lost == 0 and (track.last_arrival is None or track.last_arrival <= deadline)
        if track.second < self.n_seconds:
            if decoded:
                self.fps[track.second] += 1
            self.jb_sum[track.second] += self.jitter_buffer
            self.jb_count[track.second] += 1

        if track.max_gap is not None:
            alpha = self.config.jitter_alpha
            self._gap_ewma = (track.max_gap if self._gap_ewma is None
                              else (1 - alpha) * self._gap_ewma + alpha * track.max_gap)
            self.jitter_buffer = self._clamp_jitter(self.frame_period + self.config.jitter_gain * self._gap_ewma)

        if track.first_arrival is not None:
            sample = FrameSample(send_duration=track.last_send - track.first_send,
                                 receive_duration=track.last_arrival - track.first_arrival,
                                 t=track.last_arrival)
            msg = self.gcc.on_frame(sample)
            if msg is not None:
                self._send_feedback(msg, now)

    def _send_report(self, t: float) -> None:
        total = self._interval_received + self._interval_lost
        loss = self._interval_lost / total if total else 0.0
        self._interval_received = self._interval_lost = 0
        self._send_feedback(self.gcc.report(t, loss), t)

    def _send_feedback(self, msg: FeedbackMsg, t: float) -> None:
        """RTCP on the uplink; the sender sees msg when the packet arrives"""
        rtcp = self.streams['rtcp']
        size = int(self.presets[self.state.current.resolution].rtcp_uplink.size_dist.sample(self.rng, 1)[0])
        rtcp.generated += 1
        outcome = self.link.send('uplink', size, t)
        if not isinstance(outcome, Delivered):
            rtcp.dropped += 1
            logger.debug("Feedback lost on the uplink at %.3f s", t)
            return
        if outcome.t_out <= self.duration:
            rtcp.delivered += 1
        else:
            rtcp.in_flight += 1
        self._push(outcome.t_out, 'feedback', msg)

    def _send_input(self, t: float) -> None:
        """One uplink DTLS input packet, then schedule the next"""
        dtls = self.presets[self.state.current.resolution].dtls
        counters = self.streams['dtls']
        counters.generated += 1
        outcome = self.link.send('uplink', int(dtls.uplink_size_dist.sample(self.rng, 1)[0]), t)
        if not isinstance(outcome, Delivered):
            counters.dropped += 1
        elif outcome.t_out <= self.duration:
            counters.delivered += 1
        else:
            counters.in_flight += 1
        t_next = t + float(self.rng.exponential(dtls.uplink_mean_ipt_ms / 1000.0))
        if t_next <= self.duration:
            self._push(t_next, 'input', None)

    # -- sender ------------------------------------------------------------

    def _apply_feedback(self, msg: FeedbackMsg, t: float) -> None:
        target = self.gcc.on_feedback(msg, t)
        if msg.periodic:
            self.state, _ = adaptation.on_report(self.state, msg.loss_fraction, target, t,
                                                 self.scenario.adaptation)

    def _probe(self, second: int, t: float) -> None:
        """STUN request on the uplink; the response joins the downlink when it arrives"""
        stun = self.streams['stun']
        sizes = self.presets[self.state.current.resolution].stun
        stun.generated += 1
        request = self.link.send('uplink', sizes.uplink_size, t)
        if not isinstance(request, Delivered):
            stun.dropped += 1
            return
        if request.t_out <= self.duration:
            stun.delivered += 1
        else:
            stun.in_flight += 1
        self._pending_stun.append(ScheduledPacket(t=request.t_out, size=sizes.size, stream='stun',
                                                  direction='downlink', frame_id=second))

    def _frame_packets(self, k: int, t: float) -> List[ScheduledPacket]:
        encoder = self.state.current
        params = self._params_for(encoder)
        packets = generate_frame(params, self.rng, t, frame_id=k)
        self._frames[k] = _FrameTrack(start=t, second=k // round(self.frame_rate), expected=len(packets))
        if not packets:
            self._finish_frame(k, self._frames[k], t)

        window_end = t + self.frame_period
        audio = params.audio
        if audio.enabled:
            period = audio.period_ms / 1000.0
            while self._next_audio * period < window_end:
                packets.append(ScheduledPacket(t=self._next_audio * period, size=audio.size,
                                               stream='audio', direction='downlink'))
                self._next_audio += 1

        dtls = params.dtls
        while self._next_dtls < window_end:
            packets.append(ScheduledPacket(t=self._next_dtls, size=int(dtls.size_dist.sample(self.rng, 1)[0]),
                                           stream='dtls', direction='downlink'))
            self._next_dtls += float(self.rng.exponential(dtls.mean_ipt_ms / 1000.0))

        keep = []
        for stun in self._pending_stun:
            (packets if stun.t < window_end else keep).append(stun)
        self._pending_stun = keep
        packets.sort(key=lambda p: p.t)
        return packets

    def _admit(self, packet: ScheduledPacket) -> None:
        counters = self.streams[packet.stream]
        counters.generated += 1
        outcome = self.link.send('downlink', packet.size, packet.t)
        if isinstance(outcome, Delivered):
            if packet.stream == 'stun':
                # frame_id carries the probe's second
                self.rtt[packet.frame_id] = outcome.t_out - packet.frame_id
                if outcome.t_out <= self.duration:
                    counters.delivered += 1
                else:
                    counters.in_flight += 1
            else:
                self._delivered.append((outcome.t_out, packet))
            return
        counters.dropped += 1
        second = int(packet.t)
        if packet.stream in RTP_STREAMS and second < self.n_seconds:
            self.lost[second] += 1
        self._dropped.append((packet.t + self.owd, packet))

    def run(self) -> None:
        per_second = round(self.frame_rate)
        n_frames = max(1, math.ceil(self.duration * self.frame_rate - 1e-9))
        for k in range(n_frames):
            t = k / self.frame_rate
            self.advance_to(t)
            second = k // per_second
            if k % per_second == 0:
                self._probe(second, t)
            for packet in self._frame_packets(k, t):
                self._admit(packet)
            if second < self.n_seconds:
                current = self.state.current
                self.snapshot[second] = (RESOLUTION_HEIGHT[current.resolution], self.gcc.target,
                                         current.encoder_bitrate, self.state.phase)
        self.advance_to(self.duration)
        # arrivals after the end still settle the last frames
        self.advance_to(math.inf, control=False)

    def records(self) -> List[SecondRecord]:
        records = []
        jitter = self.jitter_buffer
        last = self.snapshot[0]
        for i in range(self.n_seconds):
            last = self.snapshot[i] or last
            height, target, bitrate, phase = last
            if self.jb_count[i]:
                jitter = self.jb_sum[i] / self.jb_count[i]
            span = min(1.0, self.duration - i)
            records.append(SecondRecord(
                second=i,
                resolution_height=height,
                fps=self.fps[i],
                rtt=self.rtt[i],
                packets_lost=self.lost[i],
                jitter_buffer_delay=jitter,
                delivered_load=self.load_bytes[i] * 8 / span / 1e6,
                target_rate=target,
                encoder_bitrate=bitrate,
                phase=phase,
            ))
        return records


def run(scenario: Scenario, log_packets: bool = False) -> SimReport:
    """Simulate one session; identical scenarios give identical reports

    With log_packets the report keeps every link admission in ``link_log``.
    """
    encoder = adaptation.initial_config(scenario.start_capacity, scenario.max_resolution,
                                        scenario.codec, scenario.adaptation)
    if isinstance(encoder, SessionRefused):
        logger.warning("Scenario %s refused at %.2f Mbit/s", scenario.name, encoder.capacity / 1e6)
        return SimReport(scenario=scenario, refused=True, reason=encoder.reason)

    logger.info("Running %s: %s for %.0f s", scenario.name, encoder.describe(), scenario.duration)
    session = _Session(scenario, encoder, log_packets)
    session.run()
    report = SimReport(
        scenario=scenario,
        records=session.records(),
        changes=session.state.change_log,
        streams=session.streams,
        gcc_history=session.gcc.history,
        final_phase=session.state.phase,
        link_log=session.link.log,
    )
    logger.info("Finished %s: %d resolution changes, final phase %s",
                scenario.name, len(report.changes), report.final_phase)
    return report


def run_many(scenarios: Iterable[Scenario], workers: Optional[int] = None) -> List[SimReport]:
    """Run independent scenarios in worker processes, results in input order"""
    scenarios = list(scenarios)
    if workers == 1 or len(scenarios) <= 1:
        return [run(s) for s in scenarios]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run, scenarios))


# -- comparison --------------------------------------------------------------

class Target(FrozenModel):
    """A reference value with a relative tolerance, or an absolute band"""
    value: Optional[float] = None
    tolerance: float = Field(DEFAULT_TOLERANCE, ge=0)
    band: Optional[Tuple[float, float]] = None

    @model_validator(mode='after')
    def _one_form(self) -> 'Target':
        if (self.value is None) == (self.band is None):
            raise ValueError("a target needs exactly one of value or band")
        if self.band is not None and self.band[0] > self.band[1]:
            raise ValueError(f"band {self.band} is reversed")
        return self

    @property
    def bounds(self) -> Tuple[float, float]:
        if self.band is not None:
            return self.band
        margin = abs(self.value) * self.tolerance
        return self.value - margin, self.value + margin


@dataclass(frozen=True, slots=True)
class ComparisonRow:
    metric: str
    value: Optional[float]
    target: Optional[float]
    low: float
    high: float
    tolerance: Optional[float]
    passed: bool


@dataclass(frozen=True)
class ComparisonReport:
    rows: Tuple[ComparisonRow, ...]

    @property
    def passed(self) -> bool:
        return all(row.passed for row in self.rows)

    def failures(self) -> List[ComparisonRow]:
        return [row for row in self.rows if not row.passed]


TargetSpec = Union[float, Target, Mapping]


def _as_target(spec: TargetSpec) -> Target:
    if isinstance(spec, Target):
        return spec
    if isinstance(spec, Mapping):
        return parse_model(Target, dict(spec), "target")
    return Target(value=float(spec))


def load_targets(path: Path) -> Dict[str, Target]:
    """Read the [targets] table of a TOML file

    Each entry is either a number (5% tolerance) or a table with ``value`` and
    ``tolerance`` or with ``band = [low, high]``.
    """
    data = load_toml(path)
    table = data.get('targets', data)
    return {metric: _as_target(spec) for metric, spec in table.items()}


def compare(source: Union[SimReport, TrafficStats, Mapping[str, Optional[float]]],
            targets: Mapping[str, TargetSpec]) -> ComparisonReport:
    """Check measured or simulated metrics against reference targets

    Raises:
        InsufficientDataError: the report has no records or the mapping is empty
        UnknownMetricError: a target names a metric the source does not have
    """
    if isinstance(source, SimReport):
        values = source.summary()
    elif isinstance(source, TrafficStats):
        values = {k: v for k, v in source.to_dict().items() if k != 'top_sizes'}
    else:
        values = dict(source)
    if not values:
        raise InsufficientDataError("nothing to compare")

    rows = []
    for metric, spec in targets.items():
        if metric not in values:
            raise UnknownMetricError(f"unknown metric {metric!r}; known: {', '.join(sorted(values))}")
        target = _as_target(spec)
        low, high = target.bounds
        value = values[metric]
        passed = value is not None and low <= value <= high
        rows.append(ComparisonRow(
            metric=metric,
            value=None if value is None else float(value),
            target=target.value,
            low=low,
            high=high,
            tolerance=target.tolerance if target.band is None else None,
            passed=passed,
        ))
    return ComparisonReport(rows=tuple(rows))
