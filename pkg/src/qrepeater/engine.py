"""Deterministic discrete-event core: virtual clock, event queue, RNG streams.

The clock is unit-agnostic.  The repeater simulation drives it with integer
slot ticks (one tick = one hop of one-way fibre latency) so that timing is
exact; conversion to seconds happens at the reporting boundary.
"""

from __future__ import annotations

import heapq
import itertools
import zlib
from enum import Enum
from typing import Any, Callable, NamedTuple

import numpy as np

from .errors import DomainError, SchedulingError


class EventKind(str, Enum):
    PULSE_ARRIVAL = "pulse-arrival"
    MESSAGE_DELIVERY = "message-delivery"
    SLOT_BOUNDARY = "slot-boundary"


class Event(NamedTuple):
    time: int | float
    sequence: int
    kind: str
    payload: Any = None


class RunStatus(str, Enum):
    STOPPED = "stopped"  # stop predicate became true
    EXHAUSTED = "exhausted"  # queue ran dry first
    TIME_LIMIT = "time_limit"  # next event lies beyond the horizon


class RunOutcome(NamedTuple):
    final_time: int | float
    status: RunStatus


class Engine:
    """Event queue ordered by ``(time, sequence)``.

    Handlers are registered per event kind and receive the event.  Equal-time
    events run in submission order.
    """

    def __init__(self, start_time=0):
        self.now = start_time
        self._queue: list[Event] = []
        self._sequence = itertools.count()
        self._handlers: dict[str, Callable[[Event], None]] = {}
        self.processed = 0

    def on(self, kind, handler: Callable[[Event], None]) -> None:
        self._handlers[kind] = handler

    def schedule(self, time, kind, payload=None) -> Event:
        if time < self.now:
            raise SchedulingError(f"cannot schedule at {time}, clock is already at {self.now}")
        event = Event(time, next(self._sequence), kind, payload)
        heapq.heappush(self._queue, event)
        return event

    def pending(self) -> int:
        return len(self._queue)

    def peek_time(self):
        return self._queue[0].time if self._queue else None

    def run_until(self, stop: Callable[[], bool] | None = None, until=None) -> RunOutcome:
        """Dispatch events in order until ``stop()`` holds or the queue empties.

        ``until`` is an inclusive horizon: events later than it stay queued.
        """
        queue = self._queue
        handlers = self._handlers
        if stop is not None and stop():
            return RunOutcome(self.now, RunStatus.STOPPED)
        while queue:
            if until is not None and queue[0].time > until:
                return RunOutcome(self.now, RunStatus.TIME_LIMIT)
            event = heapq.heappop(queue)
            self.now = event.time
            handlers[event.kind](event)
            self.processed += 1
            if stop is not None and stop():
                return RunOutcome(self.now, RunStatus.STOPPED)
        return RunOutcome(self.now, RunStatus.EXHAUSTED)


class RngStream:
    """Reproducible draws for one ``(station, purpose)`` stream.

    Uniforms are generated in blocks from numpy's PCG64, seeded through a
    ``SeedSequence`` keyed by the run seed and the stream id, so the sequence
    is the same on every platform.
    """

    BLOCK = 4096

    def __init__(self, seed: int, station: int, purpose: str):
        self.seed = int(seed)
        self.stream_id = (int(station), purpose)
        key = (int(station), zlib.crc32(purpose.encode()))
        self._gen = np.random.Generator(np.random.PCG64(np.random.SeedSequence(self.seed, spawn_key=key)))
        self._buf: list[float] = []
        self._pos = 0

    def _refill(self):
        self._buf = self._gen.random(self.BLOCK).tolist()
        self._pos = 0

    def uniform(self) -> float:
        if self._pos >= len(self._buf):
            self._refill()
        u = self._buf[self._pos]
        self._pos += 1
        return u

    def bernoulli(self, p: float) -> bool:
        if not 0.0 <= p <= 1.0:
            raise DomainError(f"bernoulli probability must lie in [0, 1], got {p}")
        return self.uniform() < p

    def bernoulli_many(self, n: int, p: float) -> list[bool]:
        if not 0.0 <= p <= 1.0:
            raise DomainError(f"bernoulli probability must lie in [0, 1], got {p}")
        out = []
        while len(out) < n:
            if self._pos >= len(self._buf):
                self._refill()
            take = min(n - len(out), len(self._buf) - self._pos)
            chunk = self._buf[self._pos : self._pos + take]
            self._pos += take
            out.extend(u < p for u in chunk)
        return out

    def draw(self, distribution: str, p: float | None = None):
        if distribution == "uniform":
            return self.uniform()
        if distribution == "bernoulli":
            return self.bernoulli(p)
        raise DomainError(f"unknown distribution {distribution!r}")


class RngStreams:
    """Lazily created family of streams sharing one run seed."""

    def __init__(self, seed: int):
        self.seed = int(seed)
        self._streams: dict[tuple[int, str], RngStream] = {}

    def stream(self, station: int, purpose: str) -> RngStream:
        key = (station, purpose)
        s = self._streams.get(key)
        if s is None:
            s = self._streams[key] = RngStream(self.seed, station, purpose)
        return s
