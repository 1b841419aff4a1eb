"""CSMA/CA MAC: drop-tail priority queue, binary exponential backoff, shared medium."""
from __future__ import annotations

import enum
import itertools
from collections import deque
from dataclasses import dataclass
from typing import Any, Callable

import numpy as np

from .channel import (
    NakagamiParams,
    PhyParams,
    Reception,
    Variant,
    mean_rx_power_array,
    reception_decision,
)
from .core import Engine, RngStream
from .errors import InvalidConfig

BROADCAST = -1


@dataclass(frozen=True)
class MacParams:
    variant: Variant
    slot_time: float
    sifs: float
    difs: float
    cw_min: int
    cw_max: int
    preamble_plus_header_time: float
    ack_time: float
    ack_timeout: float
    retry_limit: int
    queue_capacity: int = 50

    def __post_init__(self):
        if self.cw_min > self.cw_max:
            raise InvalidConfig("cw_min must not exceed cw_max")
        for name in ("slot_time", "sifs", "difs", "preamble_plus_header_time", "ack_time", "ack_timeout"):
            if not getattr(self, name) > 0:
                raise InvalidConfig(f"{name} must be > 0")
        if self.retry_limit < 1 or self.queue_capacity < 1:
            raise InvalidConfig("retry_limit and queue_capacity must be >= 1")


def _preset_fields(kind: Variant) -> dict:
    if kind is Variant.DOT11:
        # DSSS: 192 us long PLCP preamble+header, 34 B MAC header/FCS and 14 B ACK at 2 Mbit/s
        slot, sifs = 20e-6, 10e-6
        hdr = 192e-6 + 34 * 8 / 2e6
        ack = 192e-6 + 14 * 8 / 2e6
        cw_min = 31
    else:
        # 10 MHz OFDM: 32 us preamble + 8 us SIGNAL, headers at 6 Mbit/s
        slot, sifs = 13e-6, 32e-6
        hdr = 40e-6 + 34 * 8 / 6e6
        ack = 40e-6 + 14 * 8 / 6e6
        cw_min = 15
    return dict(slot_time=slot, sifs=sifs, difs=sifs + 2 * slot, cw_min=cw_min, cw_max=1023,
                preamble_plus_header_time=hdr, ack_time=ack, ack_timeout=sifs + ack + slot,
                retry_limit=7, queue_capacity=50)


def mac_preset(kind, **overrides) -> MacParams:
    kind = Variant.parse(kind)
    fields = _preset_fields(kind)
    for key, value in overrides.items():
        if key not in fields:
            raise InvalidConfig(f"unknown mac parameter {key!r}")
        fields[key] = type(fields[key])(value)
    return MacParams(variant=kind, **fields)


def frame_airtime(mac: MacParams, phy_rate: float, payload_bytes: int) -> float:
    if payload_bytes <= 0:
        raise InvalidConfig("payload_bytes must be > 0")
    return mac.preamble_plus_header_time + payload_bytes * 8 / phy_rate


def contention_window(mac: MacParams, attempt: int) -> int:
    return min(mac.cw_max, (mac.cw_min + 1) * 2 ** attempt - 1)


def backoff_slots(mac: MacParams, attempt: int, rng: RngStream) -> int:
    if attempt < 0:
        raise InvalidConfig("attempt must be >= 0")
    return int(rng.gen.integers(0, contention_window(mac, attempt) + 1))


# ------------------------------------------------------------------ frames


class FrameKind(enum.Enum):
    DATA = "data"
    CONTROL = "control"
    ACK = "ack"


@dataclass
class Frame:
    kind: FrameKind
    src: int
    dst: int
    payload_bytes: int
    born_at: float
    body: Any = None
    uid: int | None = None   # assigned by the medium on first enqueue

    def __post_init__(self):
        if self.kind is not FrameKind.ACK and self.payload_bytes <= 0:
            raise InvalidConfig("payload_bytes must be > 0 for data and control frames")

    @property
    def broadcast(self) -> bool:
        return self.dst == BROADCAST


class Enqueue(enum.Enum):
    ACCEPTED = "accepted"
    DROPPED = "dropped"


class TxQueue:
    """Drop-tail queue with strict priority of routing control over data."""

    def __init__(self, capacity: int = 50):
        self.capacity = capacity
        self.control_lane: deque[Frame] = deque()
        self.data_lane: deque[Frame] = deque()
        self.offered = self.accepted = self.dropped = self.dequeued = 0

    def __len__(self):
        return len(self.control_lane) + len(self.data_lane)

    def enqueue(self, f: Frame) -> Enqueue:
        self.offered += 1
        if len(self) >= self.capacity:
            self.dropped += 1
            return Enqueue.DROPPED
        (self.control_lane if f.kind is FrameKind.CONTROL else self.data_lane).append(f)
        self.accepted += 1
        return Enqueue.ACCEPTED

    def dequeue(self) -> Frame | None:
        if self.control_lane:
            f = self.control_lane.popleft()
        elif self.data_lane:
            f = self.data_lane.popleft()
        else:
            return None
        self.dequeued += 1
        return f

    def remove_if(self, pred: Callable[[Frame], bool]) -> list[Frame]:
        removed = [f for f in self.data_lane if pred(f)]
        if removed:
            self.data_lane = deque(f for f in self.data_lane if not pred(f))
        return removed


# ------------------------------------------------------------------ medium


class Signal:
    __slots__ = ("uid", "sender", "frame", "start", "end", "heard", "dec_idx", "dec_power", "clean0", "d0")

    def __init__(self, uid, sender, frame, start, end):
        self.uid = uid
        self.sender = sender
        self.frame = frame
        self.start = start
        self.end = end


@dataclass
class MacCounters:
    tx: int = 0
    rx: int = 0
    collisions: int = 0
    retries: int = 0
    drops_queue: int = 0
    drops_retry: int = 0


class Medium:
    """Shared wireless channel.

    At transmission start the faded power towards every node is drawn once.
    Nodes above the carrier-sense threshold see the medium busy for the whole
    frame; nodes above the receive threshold try to decode it. Any two
    overlapping decodable signals at a node corrupt each other, and so does the
    node starting its own transmission.

    Per-node carrier state lives in arrays. A decodable reception is clean when
    the node was quiet as it began and the node's disturbance counter moved only
    by that reception's own start by the time it ends.
    """

    def __init__(self, engine: Engine, fleet, phy: PhyParams, naka: NakagamiParams, rng: RngStream,
                 trace: list | None = None, geometry_refresh: float = 0.05):
        self.engine = engine
        self.geometry_refresh = geometry_refresh
        self._geo_key = None
        self._shape = self._scale = None
        self._cs_mw = 10.0 ** (phy.cs_threshold / 10.0)
        self._rx_mw = 10.0 ** (phy.rx_threshold / 10.0)
        self.fleet = fleet
        self.phy = phy
        self.naka = naka
        self.rng = rng
        self.macs: list[MacLayer] = []
        self.trace = trace
        self._sig_ids = itertools.count()
        self.frame_ids = itertools.count()
        self.n_signals = 0
        n = len(fleet)
        self.busy = np.zeros(n, dtype=np.int64)
        self.decoding = np.zeros(n, dtype=np.int64)
        self.disturb = np.zeros(n, dtype=np.int64)
        self.transmitting = np.zeros(n, dtype=bool)
        self.contending = np.zeros(n, dtype=bool)
        self.idle_since = np.zeros(n)

    def attach(self, mac: "MacLayer") -> None:
        self.macs.append(mac)

    def _geometry(self, now: float) -> None:
        """Refresh the pairwise shape/scale matrices when the clock leaves the current slot.

        Positions are frozen for ``geometry_refresh`` seconds (0 means exact);
        at highway speeds that moves a vehicle a metre or two.
        """
        key = now if self.geometry_refresh <= 0 else int(now / self.geometry_refresh)
        if key == self._geo_key:
            return
        self._geo_key = key
        t = now if self.geometry_refresh <= 0 else key * self.geometry_refresh
        fleet = self.fleet
        x = fleet.xs(t)
        dx = np.abs(x[:, None] - x[None, :])
        if fleet.cfg.wraparound:
            dx = np.minimum(dx, fleet.cfg.length - dx)
        dy = fleet.y[:, None] - fleet.y[None, :]
        d = np.sqrt(dx * dx + dy * dy)
        mean_mw = 10.0 ** (mean_rx_power_array(self.phy, self.naka, d) / 10.0)
        self._shape = self.naka.shapes(d)
        self._scale = mean_mw / self._shape

    def sample_powers_mw(self, sender_id: int, now: float) -> np.ndarray:
        """Faded received power (mW) at every node for a frame sent by ``sender_id``."""
        self._geometry(now)
        power = self.rng.gen.gamma(self._shape[sender_id], self._scale[sender_id])
        power[sender_id] = 0.0
        return power

    def start_tx(self, sender: "MacLayer", frame: Frame, duration: float) -> Signal:
        now = self.engine.now
        sid = sender.node_id
        sig = Signal(next(self._sig_ids), sender, frame, now, now + duration)
        self.n_signals += 1
        self.transmitting[sid] = True
        self.disturb[sid] += 1
        power = self.sample_powers_mw(sid, now)
        heard = np.nonzero(power >= self._cs_mw)[0]
        dec = heard[power[heard] >= self._rx_mw]
        sig.heard = heard
        sig.dec_idx = dec
        sig.dec_power = 10.0 * np.log10(power[dec])
        sig.clean0 = (self.decoding[dec] == 0) & ~self.transmitting[dec]
        self.disturb[dec] += 1
        self.decoding[dec] += 1
        sig.d0 = self.disturb[dec].copy()
        busy = self.busy
        busy[heard] += 1
        newly = heard[(busy[heard] == 1) & self.contending[heard]]
        macs = self.macs
        for j in newly.tolist():
            macs[j]._freeze()
        if self.trace is not None:
            self.trace.append(f"{now:.9f} {sid} tx {frame.kind.value} {frame.src}->{frame.dst} uid={frame.uid}")
        self.engine.schedule(sig.end, self.end_tx, sig, target=sid, kind="mac.txend")
        return sig

    def end_tx(self, sig: Signal) -> None:
        frame = sig.frame
        now = self.engine.now
        dec = sig.dec_idx
        clean = sig.clean0 & (self.disturb[dec] == sig.d0)
        self.decoding[dec] -= 1
        heard = sig.heard
        busy = self.busy
        busy[heard] -= 1
        self.transmitting[sig.sender.node_id] = False
        macs = self.macs
        idle = heard[busy[heard] == 0]
        idle = idle[~self.transmitting[idle]]
        self.idle_since[idle] = now
        for j in idle[self.contending[idle]].tolist():
            macs[j]._arm()

        phy = self.phy
        dst_ok = False
        if frame.dst == BROADCAST:
            targets = range(len(dec))
        else:
            pos = np.nonzero(dec == frame.dst)[0]
            targets = pos.tolist()
        for k in targets:
            j = int(dec[k])
            outcome = reception_decision(float(sig.dec_power[k]), phy, not bool(clean[k]))
            mac = macs[j]
            if outcome is Reception.RECEIVED:
                mac.counters.rx += 1
                if frame.dst == j:
                    dst_ok = True
                if self.trace is not None:
                    self.trace.append(f"{now:.9f} {j} rx {frame.kind.value} {frame.src}->{frame.dst} uid={frame.uid}")
                mac.deliver(frame, sig.sender.node_id)
        if len(dec):
            bad = np.nonzero(~clean)[0]
            for k in bad.tolist():
                macs[int(dec[k])].counters.collisions += 1
        sig.sender.tx_done(sig, dst_ok)


class MacLayer:
    """Per-node DCF state machine.

    ``deliver_up(frame, from_id)`` hands received frames to the node,
    ``on_link_failure(frame)`` fires when a unicast frame exhausts its retries,
    ``on_transmit(frame)`` fires at every on-air attempt.
    """

    def __init__(self, node_id: int, engine: Engine, medium: Medium, params: MacParams, rng: RngStream,
                 deliver_up: Callable | None = None, on_link_failure: Callable | None = None,
                 on_transmit: Callable | None = None):
        self.node_id = node_id
        self.engine = engine
        self.medium = medium
        self.params = params
        self.rng = rng
        self.queue = TxQueue(params.queue_capacity)
        self.counters = MacCounters()
        self.deliver_up = deliver_up
        self.on_link_failure = on_link_failure
        self.on_transmit = on_transmit

        self.current: Frame | None = None
        self.attempt = 0
        self.backoff = 0
        self.countdown = None
        self.countdown_ref = 0.0
        self.blocked_until = 0.0
        medium.attach(self)

    @property
    def transmitting(self) -> bool:
        return bool(self.medium.transmitting[self.node_id])

    @property
    def busy(self) -> int:
        return int(self.medium.busy[self.node_id])

    # -- queueing

    def enqueue(self, frame: Frame) -> Enqueue:
        if frame.uid is None:
            frame.uid = next(self.medium.frame_ids)
        result = self.queue.enqueue(frame)
        if result is Enqueue.DROPPED:
            self.counters.drops_queue += 1
        elif self.current is None:
            self._next_frame()
        return result

    def _next_frame(self) -> None:
        self.current = self.queue.dequeue()
        if self.current is not None:
            self.attempt = 0
            self.backoff = backoff_slots(self.params, 0, self.rng)
            self._arm()
        else:
            self.medium.contending[self.node_id] = False

    def airtime(self, frame: Frame) -> float:
        t = frame_airtime(self.params, self.medium.phy.data_rate, frame.payload_bytes)
        if not frame.broadcast:
            t += self.params.sifs + self.params.ack_time
        return t

    # -- contention

    def _arm(self) -> None:
        nid = self.node_id
        med = self.medium
        med.contending[nid] = self.current is not None
        if self.current is None or self.countdown is not None or med.transmitting[nid] or med.busy[nid]:
            return
        now = self.engine.now
        ref = max(now, float(med.idle_since[nid]) + self.params.difs, self.blocked_until)
        self.countdown_ref = ref
        self.countdown = self.engine.schedule(ref + self.backoff * self.params.slot_time, self._fire,
                                              target=nid, kind="mac.backoff")

    def _freeze(self) -> None:
        if self.countdown is None:
            return
        self.countdown.cancelled = True
        self.countdown = None
        elapsed = self.engine.now - self.countdown_ref
        if elapsed > 0:
            self.backoff = max(0, self.backoff - int(elapsed / self.params.slot_time + 1e-9))

    def _fire(self) -> None:
        self.countdown = None
        frame = self.current
        self.counters.tx += 1
        if self.on_transmit is not None:
            self.on_transmit(frame)
        self.medium.start_tx(self, frame, self.airtime(frame))

    def tx_done(self, sig: Signal, dst_ok: bool) -> None:
        frame = sig.frame
        now = self.engine.now
        if not self.medium.busy[self.node_id]:
            self.medium.idle_since[self.node_id] = now
        if frame.broadcast or dst_ok:
            self._next_frame()
            return
        self.attempt += 1
        if self.attempt >= self.params.retry_limit:
            self.counters.drops_retry += 1
            self.current = None
            self.medium.contending[self.node_id] = False
            if self.on_link_failure is not None:
                self.on_link_failure(frame)
            if self.current is None:
                self._next_frame()
            return
        self.counters.retries += 1
        p = self.params
        self.blocked_until = now + max(0.0, p.ack_timeout - p.sifs - p.ack_time)
        self.backoff = backoff_slots(p, self.attempt, self.rng)
        self._arm()

    def deliver(self, frame: Frame, from_id: int) -> None:
        if self.deliver_up is not None:
            self.deliver_up(frame, from_id)

    def purge(self, pred: Callable[[Frame], bool]) -> list[Frame]:
        return self.queue.remove_if(pred)
