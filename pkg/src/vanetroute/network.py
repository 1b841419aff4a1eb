"""Scenario assembly: vehicles, radios, routing agents and CBR flows on one event loop."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Any

from .channel import NakagamiParams, Variant, phy_preset
from .config import ScenarioConfig
from .core import Engine, Streams
from .mac import BROADCAST, Frame, FrameKind, MacLayer, Medium, frame_airtime, mac_preset
from .metrics import CbrFlowConfig, DataPacket, MetricsAccumulator, e2ed, nrl, throughput
from .mobility import Fleet, build_highway
from .routing import ProtocolName, apply_overrides, make_agent, preset_params
from .routing.base import IP_UDP_HEADER, ControlMessage

MAX_DATA_HOPS = 32

CSV_COLUMNS = ("protocol", "mac_variant", "n_nodes", "speed_mps", "seed", "throughput_Bps", "e2ed_s", "nrl",
               "sent", "delivered", "control_tx", "drops_queue", "drops_noroute", "collisions")


def nakagami_from_overrides(ovr: dict[str, Any]) -> NakagamiParams:
    base = NakagamiParams()
    (m_bp, m_near), (_, m_far) = base.m_by_distance
    (g_bp, g_near), (_, g_far) = base.gamma_by_distance
    m_bp = float(ovr.get("m_breakpoint", m_bp))
    g_bp = float(ovr.get("gamma_breakpoint", g_bp))
    return NakagamiParams(
        m_by_distance=((m_bp, float(ovr.get("m_near", m_near))), (math.inf, float(ovr.get("m_far", m_far)))),
        gamma_by_distance=((g_bp, float(ovr.get("gamma_near", g_near))), (math.inf, float(ovr.get("gamma_far", g_far)))),
        ref_distance=float(ovr.get("ref_distance", base.ref_distance)),
        ref_loss=float(ovr["ref_loss"]) if "ref_loss" in ovr else None,
    )


def routing_params(cfg: ScenarioConfig):
    name = ProtocolName.parse(cfg.protocol)
    return apply_overrides(preset_params(name), cfg.override_map(f"routing.{name.family.lower()}"))


class Node:
    """Glue between one MAC instance and one routing agent."""

    def __init__(self, sim: "Simulation", node_id: int):
        self.sim = sim
        self.node_id = node_id
        self.engine = sim.engine
        self.mac = MacLayer(node_id, sim.engine, sim.medium, sim.mac_params, sim.streams["mac.backoff"],
                            deliver_up=self.receive, on_link_failure=self._link_failure,
                            on_transmit=self._on_transmit)
        self.agent = make_agent(sim.cfg.protocol, self, sim.routing_params)
        self._jitter_rng = sim.streams["routing.jitter"]

    # -- host interface for routing agents

    @property
    def now(self) -> float:
        return self.engine.now

    def schedule(self, delay: float, fn, *args):
        return self.engine.schedule(self.engine.now + delay, fn, *args, target=self.node_id, kind="routing")

    def cancel(self, handle) -> None:
        self.engine.cancel(handle)

    def jitter(self, upper: float) -> float:
        return upper * float(self._jitter_rng.gen.random())

    def send_control(self, msg: ControlMessage, dst: int = BROADCAST, delay: float = 0.0) -> None:
        if msg.origin == self.node_id and msg.kind != "Rrep":
            self.sim.metrics.control_originated += 1
        frame = Frame(FrameKind.CONTROL, self.node_id, dst, msg.size_bytes(), self.engine.now, msg)
        if delay > 0:
            self.engine.schedule(self.engine.now + delay, self.mac.enqueue, frame, target=self.node_id, kind="routing.tx")
        else:
            self.mac.enqueue(frame)

    def send_data(self, packet: DataPacket, next_hop: int) -> None:
        frame = Frame(FrameKind.DATA, self.node_id, next_hop, packet.size + IP_UDP_HEADER, self.engine.now, packet)
        if self.mac.enqueue(frame).value == "dropped":
            self.sim.metrics.record_drop("queue")

    def drop_data(self, packet: DataPacket, reason: str) -> None:
        self.sim.metrics.record_drop(reason)

    # -- MAC callbacks

    def _on_transmit(self, frame: Frame) -> None:
        if frame.kind is FrameKind.CONTROL:
            self.sim.metrics.record_control_tx(frame.body.kind)

    def _link_failure(self, frame: Frame) -> None:
        packet = frame.body if frame.kind is FrameKind.DATA else None
        self.agent.link_failure(frame.dst, packet)

    def receive(self, frame: Frame, from_id: int) -> None:
        if frame.kind is FrameKind.CONTROL:
            self.agent.recv_control(frame.body, from_id)
            return
        packet: DataPacket = frame.body
        packet.hops += 1
        if packet.dst == self.node_id:
            self.sim.metrics.record_delivery(packet, self.engine.now)
        elif packet.hops >= MAX_DATA_HOPS:
            self.sim.metrics.record_drop("ttl")
        else:
            self.agent.forward(packet)

    # -- traffic

    def originate(self, packet: DataPacket) -> None:
        self.sim.metrics.record_send(packet)
        self.agent.route_output(packet)


@dataclass
class RunResult:
    row: dict[str, Any]
    wall_clock: float
    event_count: int
    extras: dict[str, Any] = field(default_factory=dict)


class Simulation:
    def __init__(self, cfg: ScenarioConfig, trace: bool = False, flows: list[CbrFlowConfig] | None = None,
                 speed: float | None = None):
        self.cfg = cfg
        self.streams = Streams(cfg.seed)
        self.engine = Engine(trace=trace)
        self.trace_lines: list[str] | None = [] if trace else None
        variant = Variant.parse(cfg.mac_variant)
        self.phy = phy_preset(variant, **cfg.override_map("phy"))
        self.naka = nakagami_from_overrides(cfg.override_map("channel"))
        self.mac_params = mac_preset(variant, **cfg.override_map("mac"))
        self.routing_params = routing_params(cfg)
        self.kinematics = build_highway(cfg.highway, cfg.n_nodes, cfg.speed_mps if speed is None else speed,
                                        self.streams["mobility"])
        self.fleet = Fleet(cfg.highway, self.kinematics)
        self.medium = Medium(self.engine, self.fleet, self.phy, self.naka, self.streams["channel"],
                             trace=self.trace_lines)
        self.metrics = MetricsAccumulator()
        self.nodes = [Node(self, i) for i in range(cfg.n_nodes)]
        self.flows = self._make_flows() if flows is None else list(flows)
        self._packet_ids = 0

    def _make_flows(self) -> list[CbrFlowConfig]:
        cfg = self.cfg
        rng = self.streams["traffic"]
        n = cfg.n_nodes
        all_pairs = n * (n - 1)
        chosen: list[tuple[int, int]] = []
        seen = set()
        while len(chosen) < min(cfg.n_flows, all_pairs):
            src = int(rng.gen.integers(0, n))
            dst = int(rng.gen.integers(0, n - 1))
            dst += dst >= src
            if (src, dst) not in seen:
                seen.add((src, dst))
                chosen.append((src, dst))
        flows = []
        for src, dst in chosen:
            start = cfg.flow_start + cfg.flow_start_spread * float(rng.gen.random())
            flows.append(CbrFlowConfig(src, dst, cfg.packet_bytes, cfg.packet_interval,
                                       min(start, cfg.sim_time), cfg.sim_time))
        return flows

    def one_hop_airtime(self) -> float:
        return frame_airtime(self.mac_params, self.phy.data_rate, self.cfg.packet_bytes)

    def _cbr_tick(self, flow_id: int, k: int) -> None:
        flow = self.flows[flow_id]
        now = self.engine.now
        packet = DataPacket(self._packet_ids, flow_id, flow.src, flow.dst, flow.packet_bytes, now)
        self._packet_ids += 1
        self.nodes[flow.src].originate(packet)
        nxt = flow.start_at + (k + 1) * flow.interval
        if nxt < flow.stop_at - 1e-12:
            self.engine.schedule(nxt, self._cbr_tick, flow_id, k + 1, target=flow.src, kind="cbr")

    def start(self) -> None:
        for node in self.nodes:
            node.agent.start()
        for i, flow in enumerate(self.flows):
            if flow.start_at < flow.stop_at:
                self.engine.schedule(flow.start_at, self._cbr_tick, i, 0, target=flow.src, kind="cbr")

    def run(self, until: float | None = None) -> int:
        return self.engine.run_until(self.cfg.sim_time if until is None else until)

    def result(self, wall_clock: float = 0.0) -> RunResult:
        acc = self.metrics
        cfg = self.cfg
        delivered = acc.data_packets_delivered
        macs = [n.mac for n in self.nodes]
        row = {
            "protocol": cfg.protocol,
            "mac_variant": cfg.mac_variant,
            "n_nodes": cfg.n_nodes,
            "speed_mps": cfg.speed_mps,
            "seed": cfg.seed,
            "throughput_Bps": throughput(acc, cfg.sim_time),
            "e2ed_s": e2ed(acc) if delivered else None,
            "nrl": nrl(acc) if delivered else None,
            "sent": acc.data_packets_sent,
            "delivered": delivered,
            "control_tx": acc.control_transmissions,
            "drops_queue": sum(m.counters.drops_queue for m in macs),
            "drops_noroute": acc.drops["noroute"],
            "collisions": sum(m.counters.collisions for m in macs),
        }
        extras = {
            "control_by_kind": dict(acc.control_by_kind),
            "control_originated": acc.control_originated,
            "drops": dict(acc.drops),
            "drops_retry": sum(m.counters.drops_retry for m in macs),
            "mac_tx": sum(m.counters.tx for m in macs),
            "min_delay": acc.min_delay,
            "one_hop_airtime": self.one_hop_airtime(),
            "trace_hash": self.engine.trace_hash,
        }
        return RunResult(row, wall_clock, self.engine.processed, extras)


def run_scenario(cfg: ScenarioConfig, trace: bool = False) -> RunResult:
    t0 = time.perf_counter()
    sim = Simulation(cfg, trace=trace)
    sim.start()
    sim.run()
    result = sim.result(time.perf_counter() - t0)
    if trace:
        result.extras["trace_lines"] = sim.trace_lines
    return result
