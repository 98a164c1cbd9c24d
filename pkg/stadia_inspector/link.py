"""Token-bucket bottleneck link with a bounded FIFO and a capacity schedule

Both directions are shaped by the same capacity schedule, the way a
Wondershaper-style limiter caps an access link. Buckets are advanced lazily:
each admission computes the packet's departure time directly instead of
ticking a clock.
"""

import bisect
import logging
from collections import deque
from dataclasses import dataclass
from typing import Deque, List, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator

from stadia_inspector.config import LINK_DEFAULTS, STUN_PROBE_SIZE, UNLIMITED_RATE, WIRE_OVERHEAD
from stadia_inspector.errors import ScheduleError

logger = logging.getLogger(__name__)


class LinkConfig(BaseModel):
    """Bottleneck parameters; capacity_schedule holds (time s, rate bit/s) steps"""
    model_config = ConfigDict(frozen=True, extra='forbid')

    capacity_schedule: Tuple[Tuple[float, float], ...] = ((0.0, UNLIMITED_RATE),)
    one_way_delay_ms: float = Field(LINK_DEFAULTS['one_way_delay_ms'], ge=0)
    queue_cap: int = Field(LINK_DEFAULTS['queue_cap'], gt=0)
    burst: int = Field(LINK_DEFAULTS['burst'], gt=0)
    # bytes added to every payload when charging tokens and queue space
    per_packet_overhead: int = Field(LINK_DEFAULTS['per_packet_overhead'], ge=0)

    @field_validator('capacity_schedule')
    @classmethod
    def _check_schedule(cls, schedule: Tuple[Tuple[float, float], ...]) -> Tuple[Tuple[float, float], ...]:
        if not schedule:
            raise ValueError("capacity schedule must have at least one point")
        times = [t for t, _ in schedule]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError(f"schedule times must be strictly increasing: {times}")
        if any(rate <= 0 for _, rate in schedule):
            raise ValueError("schedule rates must be positive")
        return schedule

    @property
    def one_way_delay(self) -> float:
        return self.one_way_delay_ms / 1000.0


def current_rate(config: LinkConfig, t: float) -> float:
    """Rate of the last schedule step at or before t

    Raises:
        ScheduleError: t precedes the first schedule point
    """
    times = [p[0] for p in config.capacity_schedule]
    index = bisect.bisect_right(times, t) - 1
    if index < 0:
        raise ScheduleError(f"t={t} s is before the capacity schedule starts at {times[0]} s")
    return config.capacity_schedule[index][1]


def drop_scenario(limit: float, at: float = 120.0, before: float = UNLIMITED_RATE, **kwargs) -> LinkConfig:
    """Unshaped link whose capacity falls to limit (bit/s) at time at"""
    kwargs.setdefault('per_packet_overhead', WIRE_OVERHEAD)
    return LinkConfig(capacity_schedule=((0.0, before), (at, limit)), **kwargs)


def raise_scenario(limit: float, at: float = 120.0, after: float = UNLIMITED_RATE, **kwargs) -> LinkConfig:
    """Link limited to limit (bit/s) until the limit is lifted at time at"""
    kwargs.setdefault('per_packet_overhead', WIRE_OVERHEAD)
    return LinkConfig(capacity_schedule=((0.0, limit), (at, after)), **kwargs)


@dataclass(frozen=True, slots=True)
class Delivered:
    """The packet left the bucket at depart and reaches the far end at t_out"""
    depart: float
    t_out: float


@dataclass(frozen=True, slots=True)
class DropOutcome:
    """The queue was full when the packet arrived at t"""
    t: float


Outcome = Union[Delivered, DropOutcome]


class TokenBucket:
    """FIFO token bucket over a piecewise-constant rate schedule

    Tokens are bytes; they accrue at rate/8 per second up to burst and each
    departing packet spends its wire size. A packet that cannot leave at once
    waits in the queue; it is dropped if the bytes already queued plus its own
    exceed queue_cap.
    """

    def __init__(self, config: LinkConfig):
        self.config = config
        self._times = [p[0] for p in config.capacity_schedule]
        self._rates = [p[1] for p in config.capacity_schedule]
        self.tokens = float(config.burst)
        self.last_update = self._times[0]
        self.last_arrival = self._times[0]
        self._last_depart = self._times[0]
        self._queue: Deque[Tuple[float, int]] = deque()
        self._queued_bytes = 0

    def _earned(self, start: float, end: float) -> float:
        """Bytes of credit accrued over [start, end]"""
        total = 0.0
        index = max(bisect.bisect_right(self._times, start) - 1, 0)
        t = start
        while t < end:
            seg_end = self._times[index + 1] if index + 1 < len(self._times) else end
            seg_end = min(seg_end, end)
            total += self._rates[index] * (seg_end - t) / 8.0
            t = seg_end
            index += 1
        return total

    def _time_to_earn(self, start: float, amount: float) -> float:
        """Earliest time by which amount bytes of credit accrue after start"""
        index = max(bisect.bisect_right(self._times, start) - 1, 0)
        t = start
        while True:
            rate = self._rates[index]
            if index + 1 < len(self._times):
                available = rate * (self._times[index + 1] - t) / 8.0
                if available < amount:
                    amount -= available
                    t = self._times[index + 1]
                    index += 1
                    continue
            return t + amount * 8.0 / rate

    @property
    def queued_bytes(self) -> int:
        return self._queued_bytes

    def _drain(self, t: float) -> None:
        while self._queue and self._queue[0][0] <= t:
            self._queued_bytes -= self._queue.popleft()[1]

    def admit(self, size: int, t: float) -> Outcome:
        """Offer a packet of size payload bytes at time t

        Raises:
            ValueError: t earlier than the previous arrival
        """
        if t < self.last_arrival:
            raise ValueError(f"arrival at {t} s precedes the previous arrival at {self.last_arrival} s")
        self.last_arrival = t
        self._drain(t)
        wire = size + self.config.per_packet_overhead
        if self._queued_bytes + wire > self.config.queue_cap:
            return DropOutcome(t)

        start = max(t, self._last_depart)
        tokens = min(float(self.config.burst), self.tokens + self._earned(self.last_update, start))
        if tokens >= wire:
            depart = start
            self.tokens = tokens - wire
        else:
            depart = self._time_to_earn(start, wire - tokens)
            self.tokens = 0.0
        self.last_update = depart
        self._last_depart = depart
        self._queue.append((depart, wire))
        self._queued_bytes += wire
        return Delivered(depart=depart, t_out=depart + self.config.one_way_delay)


@dataclass(frozen=True, slots=True)
class LinkLogRow:
    t_arrival: float
    direction: str
    size: int
    outcome: str  # delivered | dropped
    t_out: Optional[float]


class Link:
    """A bidirectional bottleneck: one bucket per direction

    Arrivals must be offered in time order per direction. With log_packets
    every admission is appended to ``log``.
    """

    def __init__(self, config: LinkConfig, log_packets: bool = False):
        self.config = config
        self.buckets = {'downlink': TokenBucket(config), 'uplink': TokenBucket(config)}
        self.log_packets = log_packets
        self.log: List[LinkLogRow] = []
        self.dropped = {'downlink': 0, 'uplink': 0}

    def send(self, direction: str, size: int, t: float) -> Outcome:
        outcome = self.buckets[direction].admit(size, t)
        if isinstance(outcome, DropOutcome):
            self.dropped[direction] += 1
        if self.log_packets:
            delivered = isinstance(outcome, Delivered)
            self.log.append(LinkLogRow(
                t_arrival=t, direction=direction, size=size,
                outcome='delivered' if delivered else 'dropped',
                t_out=outcome.t_out if delivered else None,
            ))
        return outcome

    def rtt_probe(self, t: float) -> Optional[float]:
        """Round-trip time of an 81 B STUN request sent at t and its response

        The request crosses the uplink; the response enters the downlink when
        the request arrives. Returns None when either half is dropped.
        """
        request = self.send('uplink', STUN_PROBE_SIZE, t)
        if isinstance(request, DropOutcome):
            logger.debug("STUN request dropped at %.3f s", t)
            return None
        response = self.send('downlink', STUN_PROBE_SIZE, request.t_out)
        if isinstance(response, DropOutcome):
            logger.debug("STUN response dropped at %.3f s", request.t_out)
            return None
        return response.t_out - t
