"""Traffic statistics: summary tables, ecdfs, load series, state segments and model fitting"""

import logging
import math
from collections import Counter
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from stadia_inspector.config import GAME_STATES, TOP_SIZES_COUNT
from stadia_inspector.errors import ConfigError, FitError, InsufficientDataError
from stadia_inspector.generator import (
    AudioParams,
    DiscreteDist,
    GeneratorParams,
)
from stadia_inspector.ingest import Trace
from stadia_inspector.settings import AnalyzerConfig, load_toml

logger = logging.getLogger(__name__)

PHASE_BINS = 100
# fraction of the mean bin count below which a phase bin counts as empty
EMPTY_BIN_SHARE = 0.1
HARMONIC_SHARE = 0.9
PERIOD_CHUNK = 256


@dataclass(frozen=True)
class TrafficStats:
    """Per-stream characteristics as reported in the traffic tables"""
    mean_pkt_size: float
    stdev_pkt_size: float
    mean_ipt: float  # ms
    load: float  # Mbit/s
    packet_count: int
    duration: float  # s
    min_pkt: int
    max_pkt: int
    top_sizes: List[Tuple[int, float]] = field(default_factory=list)

    def to_dict(self) -> Dict:
        data = asdict(self)
        data['top_sizes'] = [list(item) for item in self.top_sizes]
        return data


def top_sizes(sizes: np.ndarray, count: int = TOP_SIZES_COUNT) -> List[Tuple[int, float]]:
    """Most common packet sizes with the fraction of packets carrying each"""
    sizes = np.asarray(sizes)
    if len(sizes) == 0:
        return []
    counts = Counter(int(s) for s in sizes)
    ranked = sorted(counts.items(), key=lambda item: (-item[1], item[0]))[:count]
    return [(size, n / len(sizes)) for size, n in ranked]


def summary_stats(trace: Trace) -> TrafficStats:
    """Mean/stdev packet size, mean inter-packet time and load of a trace

    The load is the total payload in bits over the span from the first to the
    last packet, so it depends only on the multiset of sizes and that span.

    Raises:
        InsufficientDataError: fewer than 2 packets, or all packets at one instant
    """
    if len(trace) < 2:
        raise InsufficientDataError(f"{trace.meta.label}: need at least 2 packets, got {len(trace)}")
    duration = trace.duration
    if duration <= 0:
        raise InsufficientDataError(f"{trace.meta.label}: all packets share one timestamp")

    sizes = trace.payload_len.astype(np.float64)
    mean_size = float(sizes.mean())
    mean_ipt = duration / (len(trace) - 1)
    return TrafficStats(
        mean_pkt_size=mean_size,
        stdev_pkt_size=float(sizes.std()),
        mean_ipt=mean_ipt * 1000.0,
        load=float(sizes.sum()) * 8 / duration / 1e6,
        packet_count=len(trace),
        duration=duration,
        min_pkt=int(trace.payload_len.min()),
        max_pkt=int(trace.payload_len.max()),
        top_sizes=top_sizes(trace.payload_len),
    )


@dataclass(frozen=True)
class Ecdf:
    """Empirical CDF over a sample set

    ``values`` holds the distinct sample values in ascending order and
    ``fractions`` the share of samples at or below each of them.
    """
    values: np.ndarray
    fractions: np.ndarray
    samples: np.ndarray = field(repr=False)

    def evaluate(self, x: float) -> float:
        """Fraction of samples <= x"""
        return float(np.searchsorted(self.samples, x, side='right') / len(self.samples))

    def fraction_below(self, threshold: float) -> float:
        """Fraction of samples strictly below threshold"""
        return float(np.searchsorted(self.samples, threshold, side='left') / len(self.samples))

    def fraction_at_or_above(self, threshold: float) -> float:
        return 1.0 - self.fraction_below(threshold)


def ecdf_build(samples: Iterable[float]) -> Ecdf:
    """Build the ecdf of a non-empty sample set"""
    ordered = np.sort(np.asarray(list(samples) if not isinstance(samples, np.ndarray) else samples,
                                 dtype=np.float64))
    if len(ordered) == 0:
        raise InsufficientDataError("cannot build an ecdf from no samples")
    values, counts = np.unique(ordered, return_counts=True)
    fractions = np.cumsum(counts) / len(ordered)
    fractions[-1] = 1.0
    return Ecdf(values=values, fractions=fractions, samples=ordered)


def ecdf_fraction_below(ecdf: Ecdf, threshold: float) -> float:
    return ecdf.fraction_below(threshold)


def percentile(samples: Iterable[float], q: float) -> float:
    """q-th percentile (0..100) with linear interpolation"""
    values = np.asarray(list(samples) if not isinstance(samples, np.ndarray) else samples, dtype=np.float64)
    if len(values) == 0:
        raise InsufficientDataError("cannot take a percentile of no samples")
    if not 0 <= q <= 100:
        raise ValueError(f"percentile must be in [0, 100], got {q}")
    return float(np.percentile(values, q))


@dataclass(frozen=True)
class LoadSeries:
    """Load per contiguous window; the last window may be longer or shorter"""
    window: float
    starts: np.ndarray  # s since the first packet
    lengths: np.ndarray  # s
    values: np.ndarray  # Mbit/s

    def __len__(self) -> int:
        return len(self.values)

    @property
    def end(self) -> float:
        if len(self) == 0:
            return 0.0
        return float(self.starts[-1] + self.lengths[-1])

    def to_rows(self) -> List[Dict[str, float]]:
        return [
            {'start': float(s), 'length': float(n), 'load': float(v)}
            for s, n, v in zip(self.starts, self.lengths, self.values)
        ]


def load_timeseries(trace: Trace, window: float = 1.0) -> LoadSeries:
    """Bits per window over the window length, in Mbit/s

    Windows start at the first packet. The final partial window is normalised
    by its true length; a trailing remainder shorter than half a window is
    folded into the window before it.
    """
    if window <= 0:
        raise ValueError(f"window must be positive, got {window}")
    if len(trace) == 0:
        raise InsufficientDataError(f"{trace.meta.label}: empty trace")

    rel = trace.relative_times
    span = float(rel[-1])
    if span == 0:
        count = 1
        lengths = np.array([window])
    else:
        count = max(1, math.ceil(span / window - 1e-9))
        last = span - (count - 1) * window
        if count > 1 and last < window / 2:
            count -= 1
            last += window
        lengths = np.full(count, window)
        lengths[-1] = last

    index = np.minimum((rel // window).astype(np.int64), count - 1)
    bits = np.bincount(index, weights=trace.payload_len * 8.0, minlength=count)
    return LoadSeries(
        window=window,
        starts=np.arange(count) * window,
        lengths=lengths,
        values=bits / lengths / 1e6,
    )


def load_percentile(series: LoadSeries, q: float) -> float:
    return percentile(series.values, q)


@dataclass(frozen=True)
class StateSegment:
    """Load statistics of one game state"""
    state: str
    start: float
    end: float
    mean_load: float
    stdev_load: float
    windows: int


StateSchedule = Sequence[Tuple[str, float, float]]


def check_schedule(schedule: StateSchedule) -> None:
    """Raise ConfigError for unknown states, empty or overlapping segments"""
    previous_end = -math.inf
    for state, start, end in schedule:
        if state not in GAME_STATES:
            raise ConfigError(f"unknown game state {state!r}; expected one of {', '.join(GAME_STATES)}")
        if not start < end:
            raise ConfigError(f"segment {state} must start before it ends ({start} >= {end})")
        if start < previous_end:
            raise ConfigError(f"segment {state} at {start} s overlaps the previous segment")
        previous_end = end


def load_schedule(path: Path) -> List[Tuple[str, float, float]]:
    """Read a state schedule: ``[[segment]]`` tables with state, start and end"""
    data = load_toml(path)
    try:
        schedule = [(str(s['state']), float(s['start']), float(s['end'])) for s in data.get('segment', [])]
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigError(f"{path}: malformed segment: {e}") from e
    if not schedule:
        raise ConfigError(f"{path}: no [[segment]] entries")
    check_schedule(schedule)
    return schedule


def segment_stats(series: LoadSeries, schedule: StateSchedule,
                  trim: Optional[float] = None) -> List[StateSegment]:
    """Mean and stdev of the load inside each state segment

    Only windows lying entirely within [start + trim, end - trim] count.

    Raises:
        InsufficientDataError: a segment shorter than 2 x trim, outside the
            series, or without a whole window in its interior
    """
    trim = AnalyzerConfig().state_trim_s if trim is None else trim
    check_schedule(schedule)
    eps = 1e-9
    window_ends = series.starts + series.lengths
    segments = []
    for state, start, end in schedule:
        if end - start < 2 * trim:
            raise InsufficientDataError(
                f"segment {state} lasts {end - start:g} s, shorter than twice the {trim:g} s trim")
        if end > series.end + eps:
            raise InsufficientDataError(f"segment {state} ends after the series ({end:g} > {series.end:g} s)")
        inside = (series.starts >= start + trim - eps) & (window_ends <= end - trim + eps)
        values = series.values[inside]
        if len(values) == 0:
            raise InsufficientDataError(f"segment {state} holds no whole {series.window:g} s window")
        segments.append(StateSegment(
            state=state, start=start, end=end,
            mean_load=float(values.mean()),
            stdev_load=float(values.std()),
            windows=len(values),
        ))
    return segments


def traffic_share(traces: Iterable[Trace]) -> Dict[str, Dict[str, float]]:
    """Share of bytes per direction and per protocol across traces"""
    by_direction: Dict[str, float] = {}
    by_protocol: Dict[str, float] = {}
    for trace in traces:
        total = float(trace.payload_len.sum())
        by_direction[trace.meta.direction] = by_direction.get(trace.meta.direction, 0.0) + total
        by_protocol[trace.meta.protocol] = by_protocol.get(trace.meta.protocol, 0.0) + total
    grand = sum(by_direction.values())
    if grand <= 0:
        raise InsufficientDataError("no bytes in the given traces")
    return {
        'direction': {k: v / grand for k, v in sorted(by_direction.items())},
        'protocol': {k: v / grand for k, v in sorted(by_protocol.items())},
    }


# Model fitting

def audio_mask(times: np.ndarray, sizes: np.ndarray, config: AnalyzerConfig) -> np.ndarray:
    """Packets of audio size that have another audio-sized packet one audio period away"""
    mask = np.zeros(len(times), dtype=bool)
    candidates = np.flatnonzero((sizes >= config.audio_size_min) & (sizes <= config.audio_size_max))
    if len(candidates) < 2:
        return mask
    gaps = np.diff(times[candidates]) * 1000.0
    periodic = np.abs(gaps - config.audio_period_ms) <= config.audio_period_tolerance_ms
    mask[candidates[:-1][periodic]] = True
    mask[candidates[1:][periodic]] = True
    return mask


def _burst_starts(times: np.ndarray, gap: float) -> np.ndarray:
    if len(times) == 0:
        return times
    keep = np.concatenate([[True], np.diff(times) >= gap])
    return times[keep]


def _phase_counts(times: np.ndarray, periods: np.ndarray, bins: int = PHASE_BINS) -> np.ndarray:
    """Histogram of folded phases, one row per candidate period"""
    rows = len(periods)
    phase = np.mod(times[None, :], periods[:, None]) / periods[:, None]
    index = np.minimum((phase * bins).astype(np.int64), bins - 1)
    flat = (index + np.arange(rows)[:, None] * bins).ravel()
    return np.bincount(flat, minlength=rows * bins).reshape(rows, bins)


def phase_concentration(times: np.ndarray, periods: np.ndarray) -> np.ndarray:
    """Share of the period in which no packets fall when times are folded by it

    Scores near 0 mean the folded times cover the whole cycle; a strict
    periodic burst pattern leaves most of the cycle empty.
    """
    periods = np.atleast_1d(np.asarray(periods, dtype=np.float64))
    scores = np.empty(len(periods))
    threshold = EMPTY_BIN_SHARE * len(times) / PHASE_BINS
    for i in range(0, len(periods), PERIOD_CHUNK):
        counts = _phase_counts(times, periods[i:i + PERIOD_CHUNK])
        scores[i:i + PERIOD_CHUNK] = 1.0 - (counts > threshold).sum(axis=1) / PHASE_BINS
    return scores


def _grid_search(starts: np.ndarray, span: float, low: float, high: float, step: float) -> Tuple[float, float]:
    times = starts[starts - starts[0] <= span] - starts[0]
    periods = np.arange(low, high + step / 2, step)
    scores = phase_concentration(times, periods)
    best = int(np.argmax(scores))
    return float(periods[best]), float(scores[best])


def detect_frame_period(times: np.ndarray, config: Optional[AnalyzerConfig] = None) -> Tuple[float, float]:
    """Frame period (s) and its concentration score, by folding burst starts

    The search zooms in three passes over growing spans of the trace. A
    winner whose integer sub-multiple scores almost as well is replaced by
    that sub-multiple, since folding by k periods also concentrates.

    Raises:
        FitError: the best score is below config.min_concentration
    """
    config = config or AnalyzerConfig()
    starts = _burst_starts(np.asarray(times, dtype=np.float64), config.group_gap_ms / 1000.0)
    if len(starts) < 3:
        raise FitError("too few packet bursts to detect a frame period")
    low, high = config.min_period_ms / 1000.0, config.max_period_ms / 1000.0

    period, score = _grid_search(starts, 2.0, low, high, 10e-6)
    for k in (2, 3):
        sub = period / k
        if sub < low:
            break
        sub_period, sub_score = _grid_search(starts, 2.0, sub - 20e-6, sub + 20e-6, 2e-6)
        if sub_score >= HARMONIC_SHARE * score:
            period, score = sub_period, sub_score
            break

    period, score = _grid_search(starts, 10.0, period - 20e-6, period + 20e-6, 1e-6)
    period, score = _grid_search(starts, 60.0, period - 2e-6, period + 2e-6, 0.1e-6)
    logger.debug("Frame period %.4f ms (concentration %.3f)", period * 1000, score)
    if score < config.min_concentration:
        raise FitError(
            f"no frame period in [{config.min_period_ms:g}, {config.max_period_ms:g}] ms; "
            f"best concentration {score:.3f} < {config.min_concentration:g}")
    return period, score


def _frame_boundary(times: np.ndarray, period: float) -> float:
    """Phase (0..1) in the middle of the widest empty stretch of the folded cycle"""
    counts = _phase_counts(times, np.array([period]))[0]
    empty = counts <= EMPTY_BIN_SHARE * len(times) / PHASE_BINS
    if empty.all() or not empty.any():
        return 0.0
    # unroll the circle starting at an occupied bin so runs do not wrap
    first = int(np.argmin(empty))
    rolled = np.roll(empty, -first)
    best_len, best_start, run_start = 0, 0, None
    for i, is_empty in enumerate(np.append(rolled, False)):
        if is_empty and run_start is None:
            run_start = i
        elif not is_empty and run_start is not None:
            if i - run_start > best_len:
                best_len, best_start = i - run_start, run_start
            run_start = None
    middle = (best_start + first + best_len / 2) % PHASE_BINS
    return middle / PHASE_BINS


def fit_generator_params(trace: Trace, audio_assumed: bool = True,
                         config: Optional[AnalyzerConfig] = None,
                         base: Optional[GeneratorParams] = None) -> GeneratorParams:
    """Fit the frame-burst model to a downlink RTP trace

    Audio is separated first when audio_assumed. The frame period comes from
    detect_frame_period; packets are then cut into frames at the quietest
    phase and into groups at gaps of config.group_gap_ms or more. The first
    and last frames are discarded as possibly partial. STUN, DTLS and RTCP
    settings are taken from base (or the defaults).

    Raises:
        InsufficientDataError: trace shorter than config.fit_min_duration_s
        FitError: no frame period found, or the fitted model is invalid
    """
    config = config or AnalyzerConfig()
    if trace.duration < config.fit_min_duration_s:
        raise InsufficientDataError(
            f"{trace.meta.label}: {trace.duration:.1f} s trace, fitting needs {config.fit_min_duration_s:g} s")

    times = trace.relative_times
    sizes = trace.payload_len
    audio = AudioParams(enabled=False)
    if audio_assumed:
        is_audio = audio_mask(times, sizes, config)
        if is_audio.sum() >= 2:
            audio_times = times[is_audio]
            audio = AudioParams(
                enabled=True,
                period_ms=float(np.median(np.diff(audio_times)) * 1000.0),
                size=int(Counter(int(s) for s in sizes[is_audio]).most_common(1)[0][0]),
            )
        else:
            logger.warning("%s: no audio stream found", trace.meta.label)
        times, sizes = times[~is_audio], sizes[~is_audio]

    period, _ = detect_frame_period(times, config)
    boundary = _frame_boundary(times, period)
    frame = np.floor(times / period - boundary).astype(np.int64)
    frame -= frame.min()
    n_frames = int(frame.max()) + 1
    if n_frames < 3:
        raise FitError(f"{trace.meta.label}: fewer than 3 frames")

    gap = config.group_gap_ms / 1000.0
    new_group = np.concatenate([[True], (np.diff(frame) != 0) | (np.diff(times) >= gap)])
    group_id = np.cumsum(new_group) - 1
    group_frame = frame[new_group]
    group_start = times[new_group]
    group_size = np.bincount(group_id)
    groups_per_frame = np.bincount(group_frame, minlength=n_frames)

    interior = (group_frame > 0) & (group_frame < n_frames - 1)
    packet_interior = interior[group_id]
    same_frame = np.diff(group_frame) == 0
    spacings = np.diff(group_start)[same_frame & interior[1:]]
    intra = np.diff(times)[~new_group[1:] & packet_interior[1:]]

    update = {
        'name': f"fit_{trace.meta.game.lower()}",
        'game': trace.meta.game,
        'codec': trace.meta.codec if trace.meta.codec != 'NA' else 'VP9',
        'resolution': trace.meta.resolution if trace.meta.resolution != 'NA' else '1080p',
        'frame_rate': 1.0 / period,
        'group_count_dist': DiscreteDist.from_samples(groups_per_frame[1:-1]),
        'group_size_dist': DiscreteDist.from_samples(group_size[interior]),
        'group_spacing_ms': float(np.median(spacings) * 1000.0) if len(spacings) else 0.0,
        'intra_group_spacing_ms': float(np.median(intra) * 1000.0) if len(intra) else 0.0,
        'video_size_dist': DiscreteDist.from_samples(sizes[packet_interior]),
        'audio': audio,
    }
    try:
        if base is not None:
            fitted = GeneratorParams.model_validate({**base.model_dump(), **{
                k: (v.model_dump() if hasattr(v, 'model_dump') else v) for k, v in update.items()}})
        else:
            fitted = GeneratorParams(**update)
    except ValueError as e:
        raise FitError(f"{trace.meta.label}: fitted model is invalid: {e}") from e
    logger.info("Fitted %s: %.3f ms frames, %.2f groups x %.2f packets",
                trace.meta.label, period * 1000, fitted.group_count_dist.mean, fitted.group_size_dist.mean)
    return fitted
