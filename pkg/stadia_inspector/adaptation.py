"""Server-side resolution and encoder-bitrate state machine

A session starts at the resolution its measured capacity affords, or is
refused. In the steady phase the encoder bitrate follows the congestion
controller's target. Sustained loss drops the stream to the lowest resolution
and opens a transient phase, in which the engine waits out a loss-free hold
and then probes one resolution step up at a time. A probe that brings loss back
is reverted and the hold doubles. A minute without loss ends the transient.

Transitions are pure: every function takes a state and returns a new one.
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, model_validator

from stadia_inspector.config import BITRATE_BANDS, RESOLUTION_ORDER
from stadia_inspector.settings import AdaptationConfig

logger = logging.getLogger(__name__)

StreamResolution = Literal['720p', '1080p', '4K']
Phase = Literal['starting', 'steady', 'transient']

STARTING = 'starting'
STEADY = 'steady'
TRANSIENT = 'transient'


class EncoderConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    resolution: StreamResolution
    encoder_bitrate: float
    codec: Literal['VP9', 'H264'] = 'VP9'

    @model_validator(mode='after')
    def _check_band(self) -> 'EncoderConfig':
        low, high = BITRATE_BANDS[self.resolution]
        if not low <= self.encoder_bitrate <= high:
            raise ValueError(
                f"{self.resolution} bitrate {self.encoder_bitrate:.0f} outside [{low:.0f}, {high:.0f}]"
            )
        return self

    def describe(self) -> str:
        return f"{self.resolution}@{self.encoder_bitrate / 1e6:.2f}Mbps"


@dataclass(frozen=True, slots=True)
class SessionRefused:
    """Startup outcome when the link cannot carry any configuration"""
    capacity: float
    reason: str = "insufficient capacity"


@dataclass(frozen=True, slots=True)
class ResolutionChange:
    t: float
    old: EncoderConfig
    new: EncoderConfig
    reason: str  # loss | probe | probe_failed | not_viable | upswitch


@dataclass(frozen=True)
class AdaptationState:
    phase: Phase
    current: EncoderConfig
    max_resolution: StreamResolution = '4K'
    resolution_change_count: int = 0
    phase_started: float = 0.0
    loss_free_since: Optional[float] = None
    lossy_reports: int = 0
    hold: float = 0.0
    probe_started: Optional[float] = None
    probe_previous: Optional[EncoderConfig] = None
    upswitch_since: Optional[float] = None
    last_report_t: Optional[float] = None
    change_log: Tuple[ResolutionChange, ...] = field(default=())

    def time_in_phase(self, t: float) -> float:
        return t - self.phase_started

    def loss_free_time(self, t: float) -> float:
        return 0.0 if self.loss_free_since is None else t - self.loss_free_since

    @property
    def probing(self) -> bool:
        return self.probe_started is not None


def _clamp(resolution: str, rate: float) -> float:
    low, high = BITRATE_BANDS[resolution]
    return min(max(rate, low), high)


def _next_resolution(resolution: str, max_resolution: str) -> Optional[str]:
    index = RESOLUTION_ORDER.index(resolution)
    if index + 1 > RESOLUTION_ORDER.index(max_resolution):
        return None
    return RESOLUTION_ORDER[index + 1]


def resolution_for_capacity(capacity: float, max_resolution: str = '4K',
                            config: Optional[AdaptationConfig] = None) -> str:
    """Highest resolution a capacity (or rate estimate) sustains"""
    config = config or AdaptationConfig()
    if capacity <= config.max_720p_capacity:
        resolution = '720p'
    elif capacity <= config.max_1080p_capacity:
        resolution = '1080p'
    else:
        resolution = '4K'
    return min(resolution, max_resolution, key=RESOLUTION_ORDER.index)


def initial_config(capacity: float, max_resolution: str = '4K', codec: str = 'VP9',
                   config: Optional[AdaptationConfig] = None) -> Union[EncoderConfig, SessionRefused]:
    """Pick the starting configuration for a measured capacity (bit/s)"""
    config = config or AdaptationConfig()
    if capacity <= 0:
        raise ValueError(f"capacity must be positive, got {capacity}")
    if capacity <= config.refuse_capacity:
        logger.warning("Refusing session: capacity %.2f Mbit/s", capacity / 1e6)
        return SessionRefused(capacity=capacity)
    resolution = resolution_for_capacity(capacity, max_resolution, config)
    bitrate = _clamp(resolution, config.headroom * capacity)
    return EncoderConfig(resolution=resolution, encoder_bitrate=bitrate, codec=codec)


def start(encoder: EncoderConfig, max_resolution: str = '4K', t: float = 0.0,
          config: Optional[AdaptationConfig] = None) -> AdaptationState:
    config = config or AdaptationConfig()
    return AdaptationState(phase=STARTING, current=encoder, max_resolution=max_resolution,
                           phase_started=t, hold=config.hold_s)


def _with_encoder(state: AdaptationState, encoder: EncoderConfig, t: float, reason: str,
                  **changes) -> AdaptationState:
    """Switch configuration, logging it when the resolution changes"""
    if encoder.resolution != state.current.resolution:
        logger.info("%s -> %s at %.1f s (%s)", state.current.describe(), encoder.describe(), t, reason)
        changes['change_log'] = state.change_log + (ResolutionChange(t, state.current, encoder, reason),)
        changes['resolution_change_count'] = state.resolution_change_count + 1
    return replace(state, current=encoder, **changes)


def _set_bitrate(state: AdaptationState, bitrate: float) -> AdaptationState:
    bitrate = _clamp(state.current.resolution, bitrate)
    if bitrate == state.current.encoder_bitrate:
        return state
    return replace(state, current=state.current.model_copy(update={'encoder_bitrate': bitrate}))


def _lowest(state: AdaptationState) -> EncoderConfig:
    resolution = RESOLUTION_ORDER[0]
    return EncoderConfig(resolution=resolution, encoder_bitrate=BITRATE_BANDS[resolution][0],
                         codec=state.current.codec)


def _enter_transient(state: AdaptationState, t: float, config: AdaptationConfig) -> AdaptationState:
    return _with_encoder(
        state, _lowest(state), t, 'loss',
        phase=TRANSIENT, phase_started=t, hold=config.hold_s, lossy_reports=0,
        loss_free_since=None, probe_started=None, probe_previous=None, upswitch_since=None,
    )


def on_report(state: AdaptationState, loss_fraction: float, target: float, t: float,
              config: Optional[AdaptationConfig] = None) -> Tuple[AdaptationState, EncoderConfig]:
    """Advance the state machine by one receiver report"""
    config = config or AdaptationConfig()
    previous_t = state.last_report_t if state.last_report_t is not None else t
    state = replace(state, last_report_t=t)
    lossy = loss_fraction > config.loss_trigger

    if state.phase == STARTING:
        state = replace(state, phase=STEADY, phase_started=t)

    if state.phase == STEADY:
        if lossy:
            state = replace(state, lossy_reports=state.lossy_reports + 1)
            if state.lossy_reports >= config.loss_reports:
                state = _enter_transient(state, t, config)
                return state, state.current
        else:
            state = replace(state, lossy_reports=0)
        # band minimum wins over the headroom ceiling
        ceiling = target / config.headroom
        if state.current.encoder_bitrate > ceiling:
            state = _set_bitrate(state, ceiling)
        if not lossy:
            state, _ = on_capacity_increase(state, target, t, config)
        return state, state.current

    return _transient_report(state, lossy, target, t, previous_t, config)


def _transient_report(state: AdaptationState, lossy: bool, target: float, t: float,
                      previous_t: float, config: AdaptationConfig) -> Tuple[AdaptationState, EncoderConfig]:
    if lossy:
        state = replace(state, loss_free_since=None)
        if state.probing:
            hold = min(2 * state.hold, config.max_hold_s)
            logger.debug("Probe failed at %.1f s, hold now %.0f s", t, hold)
            state = _with_encoder(state, state.probe_previous, t, 'probe_failed', hold=hold,
                                  lossy_reports=0, probe_started=None, probe_previous=None)
            return state, state.current
        state = replace(state, lossy_reports=state.lossy_reports + 1)
        if state.lossy_reports >= config.loss_reports:
            state = _with_encoder(state, _lowest(state), t, 'loss', lossy_reports=0)
        return state, state.current

    state = replace(state, lossy_reports=0)
    if state.loss_free_since is None:
        state = replace(state, loss_free_since=previous_t)
    loss_free = state.loss_free_time(t)

    if loss_free >= config.steady_after_s:
        viable = resolution_for_capacity(target, state.max_resolution, config)
        if RESOLUTION_ORDER.index(state.current.resolution) > RESOLUTION_ORDER.index(viable):
            encoder = EncoderConfig(resolution=viable, encoder_bitrate=_clamp(viable, config.headroom * target),
                                    codec=state.current.codec)
            state = _with_encoder(state, encoder, t, 'not_viable')
        logger.info("Steady at %s after %.0f s of transient", state.current.describe(), state.time_in_phase(t))
        state = replace(state, phase=STEADY, phase_started=t, probe_started=None, probe_previous=None)
        return state, state.current

    if state.probing:
        if t - state.probe_started < config.probe_window_s:
            return state, state.current
        logger.debug("Probe to %s held at %.1f s", state.current.resolution, t)
        state = replace(state, probe_started=None, probe_previous=None)

    state = _set_bitrate(state, min(config.headroom * target, BITRATE_BANDS[state.current.resolution][1]))

    upper = _next_resolution(state.current.resolution, state.max_resolution)
    if (upper is not None and loss_free >= state.hold
            and target / config.headroom >= BITRATE_BANDS[upper][0]):
        encoder = EncoderConfig(resolution=upper, encoder_bitrate=_clamp(upper, config.headroom * target),
                                codec=state.current.codec)
        state = _with_encoder(state, encoder, t, 'probe', probe_started=t, probe_previous=state.current)
    return state, state.current


def on_capacity_increase(state: AdaptationState, target: float, t: float,
                         config: Optional[AdaptationConfig] = None) -> Tuple[AdaptationState, EncoderConfig]:
    """Steady phase: raise the bitrate with the target and step up when it stays high

    The next resolution must be viable for the target (as for initial_config)
    and the target must exceed its band minimum by upswitch_margin, both for
    upswitch_after_s consecutive seconds.
    """
    config = config or AdaptationConfig()
    if state.phase != STEADY:
        return state, state.current

    resolution = state.current.resolution
    desired = min(config.headroom * target, BITRATE_BANDS[resolution][1])
    if desired > state.current.encoder_bitrate:
        state = _set_bitrate(state, desired)

    upper = _next_resolution(resolution, state.max_resolution)
    eligible = (
        upper is not None
        and target > BITRATE_BANDS[upper][0] * config.upswitch_margin
        and RESOLUTION_ORDER.index(resolution_for_capacity(target, state.max_resolution, config))
        > RESOLUTION_ORDER.index(resolution)
    )
    if not eligible:
        if state.upswitch_since is not None:
            state = replace(state, upswitch_since=None)
        return state, state.current
    if state.upswitch_since is None:
        state = replace(state, upswitch_since=t)
    if t - state.upswitch_since >= config.upswitch_after_s:
        encoder = EncoderConfig(resolution=upper, encoder_bitrate=_clamp(upper, config.headroom * target),
                                codec=state.current.codec)
        state = _with_encoder(state, encoder, t, 'upswitch', upswitch_since=None)
    return state, state.current


def transient_length(change_log: Tuple[ResolutionChange, ...], t_drop: float) -> float:
    """Seconds from t_drop to the last resolution change after it (0 if none)"""
    after = [change.t for change in change_log if change.t >= t_drop]
    return max(after) - t_drop if after else 0.0
