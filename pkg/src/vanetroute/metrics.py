"""CBR traffic and the three comparison metrics: throughput, mean end-to-end delay, NRL."""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

from .errors import DuplicateDelivery, InvalidConfig, NoDeliveredPackets, NonPositiveDuration
from .routing.base import CONTROL_KINDS


@dataclass(frozen=True)
class CbrFlowConfig:
    src: int
    dst: int
    packet_bytes: int = 512
    interval: float = 0.03
    start_at: float = 0.0
    stop_at: float = 900.0

    def __post_init__(self):
        if not self.interval > 0:
            raise InvalidConfig("CBR interval must be > 0")
        if self.start_at > self.stop_at:
            raise InvalidConfig("start_at must not be after stop_at")
        if self.src == self.dst:
            raise InvalidConfig("flow source and sink must differ")
        if self.packet_bytes <= 0:
            raise InvalidConfig("packet_bytes must be > 0")


def cbr_schedule(flow: CbrFlowConfig) -> list[float]:
    """Send times ``start, start+interval, ...`` strictly before ``stop_at``.

    Times are computed as ``start + k * interval`` rather than accumulated so
    they carry no drift over long runs.
    """
    n = math.ceil((flow.stop_at - flow.start_at) / flow.interval - 1e-9)
    times = [flow.start_at + k * flow.interval for k in range(max(0, n))]
    return [t for t in times if t < flow.stop_at - 1e-12]


@dataclass
class DataPacket:
    packet_id: int
    flow_id: int
    src: int
    dst: int
    size: int
    sent_at: float
    hops: int = 0


@dataclass
class PacketRecord:
    packet_id: int
    flow_id: int
    sent_at: float
    received_at: float | None = None


@dataclass
class MetricsAccumulator:
    data_packets_sent: int = 0
    data_packets_delivered: int = 0
    data_bytes_delivered: int = 0
    control_transmissions: int = 0
    control_originated: int = 0
    delay_sum: float = 0.0
    min_delay: float = math.inf
    control_by_kind: Counter = field(default_factory=Counter)
    drops: Counter = field(default_factory=Counter)
    records: dict[int, PacketRecord] = field(default_factory=dict)
    per_flow_sent: Counter = field(default_factory=Counter)
    per_flow_delivered: Counter = field(default_factory=Counter)

    def record_send(self, packet: DataPacket) -> None:
        self.data_packets_sent += 1
        self.per_flow_sent[packet.flow_id] += 1
        self.records[packet.packet_id] = PacketRecord(packet.packet_id, packet.flow_id, packet.sent_at)

    def record_delivery(self, packet: DataPacket, now: float) -> None:
        rec = self.records.get(packet.packet_id)
        if rec is None:
            raise DuplicateDelivery(f"packet {packet.packet_id} delivered but never sent")
        if rec.received_at is not None:
            raise DuplicateDelivery(f"packet {packet.packet_id} delivered twice")
        rec.received_at = now
        delay = now - rec.sent_at
        self.data_packets_delivered += 1
        self.per_flow_delivered[packet.flow_id] += 1
        self.data_bytes_delivered += packet.size
        self.delay_sum += delay
        self.min_delay = min(self.min_delay, delay)

    def record_control_tx(self, kind: str, originated: bool = False) -> None:
        if kind not in CONTROL_KINDS:
            raise ValueError(f"unknown control kind {kind!r}")
        self.control_transmissions += 1
        self.control_by_kind[kind] += 1
        if originated:
            self.control_originated += 1

    def record_drop(self, reason: str) -> None:
        self.drops[reason] += 1

    def delays(self) -> list[float]:
        return [r.received_at - r.sent_at for r in self.records.values() if r.received_at is not None]


def throughput(acc: MetricsAccumulator, duration: float) -> float:
    """Delivered data bytes per second."""
    if not duration > 0:
        raise NonPositiveDuration(f"duration must be > 0, got {duration}")
    return acc.data_bytes_delivered / duration


def e2ed(acc: MetricsAccumulator) -> float:
    if acc.data_packets_delivered == 0:
        raise NoDeliveredPackets("no packet was delivered")
    return acc.delay_sum / acc.data_packets_delivered


def nrl(acc: MetricsAccumulator) -> float:
    """Control transmissions (forwards included) per delivered data packet."""
    if acc.data_packets_delivered == 0:
        raise NoDeliveredPackets("no packet was delivered")
    return acc.control_transmissions / acc.data_packets_delivered
