"""Google Congestion Control: delay-based Ar, loss-based As, target = min(Ar, As)

The receiver side compares how long each video frame took to arrive with how
long it took to send. A growing difference means a queue is building; the
smoothed difference drives an overuse detector that backs Ar off to the
measured receive rate. The sender side adjusts As from the loss fraction of
each periodic report. The two halves only exchange ``FeedbackMsg`` values.
"""

import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Deque, List, Optional, Tuple

from stadia_inspector.settings import GccConfig

logger = logging.getLogger(__name__)

UNDERUSE = 'underuse'
NORMAL = 'normal'
OVERUSE = 'overuse'

# shortest span the receive rate is averaged over
MIN_RATE_SPAN_S = 1e-3


@dataclass(frozen=True, slots=True)
class FrameSample:
    """Timing of one video frame

    send_duration is first to last packet leaving the sender, receive_duration
    first to last packet reaching the receiver (both seconds); t is the arrival
    time of the frame's last packet.
    """
    send_duration: float
    receive_duration: float
    t: float


@dataclass
class DelayEstimatorState:
    """Receiver-side estimator: smoothed gradient, overuse signal and Ar"""
    ar: float
    smoothed_gradient_ms: float = 0.0
    signal: str = NORMAL
    last_t: Optional[float] = None
    first_arrival: Optional[float] = None
    window: Deque[Tuple[float, int]] = field(default_factory=deque)
    window_bytes: int = 0


@dataclass
class LossControllerState:
    as_: float
    as_min: float
    as_max: float


@dataclass(frozen=True, slots=True)
class FeedbackMsg:
    """Receiver-to-sender notification

    periodic marks the once-per-second report that carries a fresh loss
    fraction; other messages only announce a changed Ar.
    """
    ar: float
    loss_fraction: float
    timestamp: float
    periodic: bool = False

    def __post_init__(self):
        if not 0.0 <= self.loss_fraction <= 1.0:
            raise ValueError(f"loss fraction {self.loss_fraction} outside [0, 1]")


def record_arrival(state: DelayEstimatorState, t: float, size: int, config: Optional[GccConfig] = None) -> None:
    """Add a received packet (bytes on the wire) to the receive-rate window"""
    config = config or GccConfig()
    if state.first_arrival is None:
        state.first_arrival = t
    state.window.append((t, size))
    state.window_bytes += size
    _trim_window(state, t, config.receive_window_s)


def _trim_window(state: DelayEstimatorState, t: float, span: float) -> None:
    while state.window and state.window[0][0] <= t - span:
        state.window_bytes -= state.window.popleft()[1]


def receive_rate(state: DelayEstimatorState, t: float, config: Optional[GccConfig] = None) -> float:
    """Bit/s received over the trailing window ending at t

    Early in a session the window is shorter than its nominal span; the rate is
    taken over the time actually observed.
    """
    config = config or GccConfig()
    _trim_window(state, t, config.receive_window_s)
    if state.first_arrival is None or state.window_bytes == 0:
        return 0.0
    span = max(min(config.receive_window_s, t - state.first_arrival), MIN_RATE_SPAN_S)
    return state.window_bytes * 8.0 / span


def update_delay_estimate(state: DelayEstimatorState, sample: FrameSample,
                          config: Optional[GccConfig] = None) -> float:
    """Fold one frame sample into the estimator and return the new Ar

    Outside overuse Ar grows by increase_factor on every sample, capped at
    receive_rate_cap times the receive rate. With increase_per_second the
    growth is scaled to the time since the previous sample instead, so a
    stream of per-frame samples grows Ar by increase_factor each second.
    """
    config = config or GccConfig()
    if sample.send_duration < 0 or sample.receive_duration < 0:
        raise ValueError(f"frame durations must be non-negative: {sample}")

    gradient_ms = (sample.receive_duration - sample.send_duration) * 1000.0
    alpha = config.gradient_alpha
    state.smoothed_gradient_ms = (1 - alpha) * state.smoothed_gradient_ms + alpha * gradient_ms

    threshold = config.overuse_threshold_ms
    if state.smoothed_gradient_ms > threshold:
        signal = OVERUSE
    elif state.smoothed_gradient_ms < -threshold:
        signal = UNDERUSE
    else:
        signal = NORMAL
    if signal != state.signal:
        logger.debug("Delay signal %s -> %s at %.3f s (gradient %.3f ms)",
                     state.signal, signal, sample.t, state.smoothed_gradient_ms)
    state.signal = signal

    exponent = 1.0
    if config.increase_per_second and state.last_t is not None:
        exponent = min(max(sample.t - state.last_t, 0.0), 1.0)
    state.last_t = sample.t
    rate = receive_rate(state, sample.t, config)

    if signal == OVERUSE:
        if rate > 0:
            state.ar = config.overuse_backoff * rate
    else:
        ar = state.ar * config.increase_factor ** exponent
        if rate > 0:
            ar = min(ar, config.receive_rate_cap * rate)
        state.ar = ar
    state.ar = max(state.ar, config.as_min)
    return state.ar


def update_loss_rate(state: LossControllerState, p: float, config: Optional[GccConfig] = None) -> float:
    """Adjust As from the loss fraction p of one report and return it

    Raises:
        ValueError: p outside [0, 1]
    """
    config = config or GccConfig()
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"loss fraction {p} outside [0, 1]")
    if p < config.loss_low:
        as_ = state.as_ * config.loss_increase
    elif p > config.loss_high:
        as_ = state.as_ * (1 - config.loss_decrease_gain * p)
    else:
        as_ = state.as_
    state.as_ = min(max(as_, state.as_min), state.as_max)
    return state.as_


def target_rate(ar: float, as_: float) -> float:
    return min(ar, as_)


def should_notify(prev_ar: float, new_ar: float, elapsed: float, config: Optional[GccConfig] = None) -> bool:
    """Whether the receiver forwards Ar now: once a second, or on a >3% change"""
    config = config or GccConfig()
    if elapsed >= config.notify_interval_s:
        return True
    return abs(new_ar - prev_ar) / prev_ar > config.notify_change


class GccController:
    """Both halves of GCC for one media stream

    Receiver methods: ``record_arrival``, ``on_frame`` and ``report``.
    Sender method: ``on_feedback``, which returns the rate the encoder may use.
    ``history`` holds (t, Ar, As, target) rows, one per processed feedback.
    """

    def __init__(self, initial_ar: float, config: Optional[GccConfig] = None):
        self.config = config or GccConfig()
        self.delay = DelayEstimatorState(ar=initial_ar)
        self.loss = LossControllerState(as_=self.config.as_max, as_min=self.config.as_min,
                                        as_max=self.config.as_max)
        self.sender_ar = initial_ar
        self.last_loss = 0.0
        self._notified_ar = initial_ar
        self._notified_t = 0.0
        self.history: List[Tuple[float, float, float, float]] = []

    @property
    def target(self) -> float:
        return target_rate(self.sender_ar, self.loss.as_)

    def record_arrival(self, t: float, size: int) -> None:
        record_arrival(self.delay, t, size, self.config)

    def on_frame(self, sample: FrameSample) -> Optional[FeedbackMsg]:
        """Update Ar; return a notification when should_notify says so"""
        previous = self._notified_ar
        ar = update_delay_estimate(self.delay, sample, self.config)
        if should_notify(previous, ar, sample.t - self._notified_t, self.config):
            return self._notify(sample.t, periodic=False)
        return None

    def report(self, t: float, loss_fraction: float) -> FeedbackMsg:
        """The periodic receiver report carrying the last interval's loss"""
        self.last_loss = loss_fraction
        return self._notify(t, periodic=True)

    def _notify(self, t: float, periodic: bool) -> FeedbackMsg:
        self._notified_ar = self.delay.ar
        self._notified_t = t
        return FeedbackMsg(ar=self.delay.ar, loss_fraction=self.last_loss, timestamp=t, periodic=periodic)

    def on_feedback(self, msg: FeedbackMsg, t: Optional[float] = None) -> float:
        """Sender side: take Ar from the message, update As on periodic reports"""
        self.sender_ar = msg.ar
        if msg.periodic:
            update_loss_rate(self.loss, msg.loss_fraction, self.config)
        target = self.target
        self.history.append((msg.timestamp if t is None else t, self.sender_ar, self.loss.as_, target))
        return target
