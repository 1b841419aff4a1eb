"""Discrete-event engine: virtual clock, ordered event queue, named RNG streams."""
from __future__ import annotations

import hashlib
import heapq
import math
import zlib
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from .errors import InvalidDistParams, SchedulingInPast

SYSTEM = "system"


class Event:
    __slots__ = ("fire_at", "seq", "target", "kind", "fn", "args", "cancelled")

    def __init__(self, fire_at, seq, target, kind, fn, args):
        self.fire_at = fire_at
        self.seq = seq
        self.target = target
        self.kind = kind
        self.fn = fn
        self.args = args
        self.cancelled = False

    def __lt__(self, other):
        return (self.fire_at, self.seq) < (other.fire_at, other.seq)

    def __repr__(self):
        return f"Event(t={self.fire_at!r}, seq={self.seq}, kind={self.kind!r}, target={self.target!r})"


class EventQueue:
    """Min-heap keyed on (fire_at, seq). Cancellation is lazy."""

    def __init__(self):
        self._heap: list[tuple[float, int, Event]] = []
        self._seq = 0
        self.now = 0.0

    def __len__(self):
        return len(self._heap)

    def schedule(self, at: float, fn: Callable | None = None, *args, target=SYSTEM, kind="event") -> Event:
        if at < self.now or math.isnan(at):
            raise SchedulingInPast(f"cannot schedule at t={at} (now={self.now})")
        ev = Event(at, self._seq, target, kind, fn, args)
        self._seq += 1
        heapq.heappush(self._heap, (at, ev.seq, ev))
        return ev

    @staticmethod
    def cancel(handle: Event) -> None:
        handle.cancelled = True

    def peek_time(self) -> float | None:
        while self._heap and self._heap[0][2].cancelled:
            heapq.heappop(self._heap)
        return self._heap[0][0] if self._heap else None

    def pop(self) -> Event:
        while True:
            _, _, ev = heapq.heappop(self._heap)
            if not ev.cancelled:
                return ev


class Engine:
    """Single-threaded event loop over an :class:`EventQueue`.

    Callbacks are invoked as ``fn(*args)``. When ``trace`` is set, every
    processed event is folded into :attr:`trace_hash`.
    """

    def __init__(self, trace: bool = False):
        self.queue = EventQueue()
        self.processed = 0
        self._hasher = hashlib.sha256() if trace else None
        self.trace_log: list[tuple] | None = None

    @property
    def now(self) -> float:
        return self.queue.now

    def schedule(self, at, fn=None, *args, target=SYSTEM, kind="event") -> Event:
        return self.queue.schedule(at, fn, *args, target=target, kind=kind)

    def schedule_in(self, delay, fn=None, *args, target=SYSTEM, kind="event") -> Event:
        return self.queue.schedule(self.queue.now + delay, fn, *args, target=target, kind=kind)

    def cancel(self, handle: Event | None) -> None:
        if handle is not None:
            handle.cancelled = True

    def run_until(self, t_end: float) -> int:
        q = self.queue
        if t_end < q.now:
            raise SchedulingInPast(f"t_end={t_end} precedes current time {q.now}")
        heap = q._heap
        hasher = self._hasher
        log = self.trace_log
        count = 0
        while heap:
            at, _, ev = heap[0]
            if at > t_end:
                break
            heapq.heappop(heap)
            if ev.cancelled:
                continue
            q.now = at
            count += 1
            if hasher is not None:
                hasher.update(f"{at!r}|{ev.seq}|{ev.kind}|{ev.target}\n".encode())
            if log is not None:
                log.append((at, ev.seq, ev.kind, ev.target))
            if ev.fn is not None:
                ev.fn(*ev.args)
        q.now = t_end
        self.processed += count
        return count

    @property
    def trace_hash(self) -> str | None:
        return self._hasher.hexdigest() if self._hasher is not None else None


def _label_key(label: str) -> int:
    return zlib.crc32(label.encode("utf-8"))


@dataclass
class RngStream:
    """Named random stream. The same (master_seed, label) always replays the same draws."""

    master_seed: int
    stream_label: str
    gen: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        seed_seq = np.random.SeedSequence([self.master_seed & (2**64 - 1), _label_key(self.stream_label)])
        self.gen = np.random.Generator(np.random.PCG64(seed_seq))

    def uniform(self, a: float = 0.0, b: float = 1.0) -> float:
        if not a < b:
            raise InvalidDistParams(f"uniform needs a < b, got ({a}, {b})")
        return float(self.gen.uniform(a, b))

    def normal(self, mean: float, var: float) -> float:
        if not var > 0:
            raise InvalidDistParams(f"normal needs variance > 0, got {var}")
        return float(self.gen.normal(mean, math.sqrt(var)))

    def gamma(self, shape: float, scale: float) -> float:
        if not (shape > 0 and scale > 0):
            raise InvalidDistParams(f"gamma needs shape, scale > 0, got ({shape}, {scale})")
        return float(self.gen.gamma(shape, scale))

    def exponential(self, rate: float) -> float:
        if not rate > 0:
            raise InvalidDistParams(f"exponential needs rate > 0, got {rate}")
        return float(self.gen.exponential(1.0 / rate))

    def integers(self, low: int, high: int) -> int:
        """Uniform integer in [low, high]."""
        return int(self.gen.integers(low, high + 1))

    def draw(self, dist: str, *params: float) -> float:
        fn = {"uniform": self.uniform, "normal": self.normal,
              "gamma": self.gamma, "exponential": self.exponential}.get(dist)
        if fn is None:
            raise InvalidDistParams(f"unknown distribution {dist!r}")
        return fn(*params)


class Streams:
    """Lazily creates one :class:`RngStream` per label from a master seed."""

    def __init__(self, master_seed: int):
        self.master_seed = master_seed
        self._streams: dict[str, RngStream] = {}

    def __getitem__(self, label: str) -> RngStream:
        s = self._streams.get(label)
        if s is None:
            s = self._streams[label] = RngStream(self.master_seed, label)
        return s


def draw(stream: RngStream, dist: str, *params: float) -> float:
    return stream.draw(dist, *params)


def schedule(queue: EventQueue, at: float, payload: Any = None, target=SYSTEM, kind="event") -> Event:
    """Enqueue a bare payload (callable or inert) at ``at``."""
    if callable(payload):
        return queue.schedule(at, payload, target=target, kind=kind)
    return queue.schedule(at, None, payload, target=target, kind=kind)
