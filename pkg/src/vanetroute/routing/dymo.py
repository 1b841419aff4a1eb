"""Dynamic MANET On-demand routing (reactive, hop-by-hop)."""
from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, field

from .base import DymoParams, RouteEntry, RoutingAgent, Rerr, Rrep, Rreq
from .olsr import seq_newer

SEQ_MOD = 1 << 16
FORWARD_JITTER = 0.01
RATE_WINDOW = 1.0


class Discovery(enum.Enum):
    USE_ENTRY = "use_entry"
    RREQ_ISSUED = "rreq_issued"
    RREQ_SUPPRESSED = "rreq_suppressed"
    PENDING = "pending"
    GAVE_UP = "gave_up"


class RreqOutcome(enum.Enum):
    FORWARD_RREQ = "forward_rreq"
    ANSWER_RREP = "answer_rrep"
    DROP = "drop"


@dataclass
class _Pending:
    tries: int = 0
    timer: object = None
    buffer: deque = field(default_factory=deque)


class DymoAgent(RoutingAgent):
    name = "DYMO"

    def __init__(self, host, params: DymoParams):
        super().__init__(host, params)
        self.own_seq = 1
        self.routes: dict[int, RouteEntry] = {}
        self.pending: dict[int, _Pending] = {}
        self.seen: dict[tuple[int, int], float] = {}
        self.rreq_times: deque[float] = deque()
        self.originated: list[float] = []
        self.discovery_log: list[tuple[float, int, Discovery]] = []

    # --------------------------------------------------------- helpers

    def _bump_seq(self) -> int:
        self.own_seq = self.own_seq % (SEQ_MOD - 1) + 1
        return self.own_seq

    def _rate_ok(self, now: float) -> bool:
        q = self.rreq_times
        while q and q[0] <= now - RATE_WINDOW:
            q.popleft()
        return len(q) < self.params.rreq_rate_limit

    def _next_rate_slot(self, now: float) -> float:
        return self.rreq_times[0] + RATE_WINDOW if self.rreq_times else now

    def _install(self, dest: int, next_hop: int, metric: int, seq: int, now: float) -> bool:
        e = self.routes.get(dest)
        if e is not None and e.usable(now) and e.seq_num is not None:
            if seq_newer(e.seq_num, seq, SEQ_MOD):
                return False
            if e.seq_num == seq and metric >= e.metric:
                return False
        self.routes[dest] = RouteEntry(dest, next_hop, metric, seq, now, now + self.params.route_timeout)
        return True

    def route_lookup(self, dest: int, now: float) -> int | None:
        if dest == self.node_id:
            return self.node_id
        e = self.routes.get(dest)
        if e is None or not e.usable(now):
            return None
        return e.next_hop

    def lookup(self, dest, now=None):
        return self.route_lookup(dest, self.host.now if now is None else now)

    def _refresh(self, dest: int, now: float) -> None:
        e = self.routes.get(dest)
        if e is not None and e.usable(now):
            e.expires_at = now + self.params.route_timeout

    # ------------------------------------------------------ discovery

    def dymo_request_route(self, dest: int, now: float) -> Discovery:
        nh = self.route_lookup(dest, now)
        if nh is not None:
            return Discovery.USE_ENTRY
        p = self.pending.get(dest)
        if p is not None:
            return Discovery.PENDING
        p = self.pending[dest] = _Pending()
        return self._attempt(dest, p, now)

    def _attempt(self, dest: int, p: _Pending, now: float) -> Discovery:
        if not self._rate_ok(now):
            wait = self._next_rate_slot(now) - now + 1e-9
            p.timer = self.host.schedule(wait, self._retry, dest)
            self.discovery_log.append((now, dest, Discovery.RREQ_SUPPRESSED))
            return Discovery.RREQ_SUPPRESSED
        p.tries += 1
        self.rreq_times.append(now)
        self.originated.append(now)
        seq = self._bump_seq()
        self.seen[(self.node_id, seq)] = now + 2 * self.params.rreq_wait_time
        self.host.send_control(Rreq(origin=self.node_id, emitted_at=now, target=dest, orig_seq=seq,
                                    hop_limit=self.params.hop_limit, metric=0))
        p.timer = self.host.schedule(self.params.rreq_wait_time, self._retry, dest)
        self.discovery_log.append((now, dest, Discovery.RREQ_ISSUED))
        return Discovery.RREQ_ISSUED

    def _retry(self, dest: int) -> None:
        now = self.host.now
        p = self.pending.get(dest)
        if p is None:
            return
        p.timer = None
        if self.route_lookup(dest, now) is not None:
            self._complete(dest)
            return
        if p.tries >= self.params.rreq_tries:
            del self.pending[dest]
            self.discovery_log.append((now, dest, Discovery.GAVE_UP))
            for packet in p.buffer:
                self.host.drop_data(packet, "noroute")
            return
        self._attempt(dest, p, now)

    def _complete(self, dest: int) -> None:
        p = self.pending.pop(dest, None)
        if p is None:
            return
        if p.timer is not None:
            self.host.cancel(p.timer)
        for packet in p.buffer:
            self._send_via_table(packet)

    def _send_via_table(self, packet) -> None:
        now = self.host.now
        nh = self.route_lookup(packet.dst, now)
        if nh is None:
            self._buffer(packet)
            return
        self._refresh(packet.dst, now)
        self.host.send_data(packet, nh)

    def _buffer(self, packet) -> None:
        now = self.host.now
        self.dymo_request_route(packet.dst, now)
        p = self.pending.get(packet.dst)
        if p is None:
            self._send_via_table(packet)
        elif len(p.buffer) >= self.params.buffer_size:
            self.host.drop_data(packet, "noroute")
        else:
            p.buffer.append(packet)

    def route_output(self, packet) -> None:
        self._send_via_table(packet)

    def forward(self, packet) -> None:
        now = self.host.now
        nh = self.route_lookup(packet.dst, now)
        if nh is None:
            self.host.drop_data(packet, "noroute")
            e = self.routes.get(packet.dst)
            self._emit_rerr([(packet.dst, e.seq_num if e else None)], now)
            return
        self._refresh(packet.dst, now)
        self._refresh(packet.src, now)
        self.host.send_data(packet, nh)

    # ------------------------------------------------------- processing

    def dymo_process_rreq(self, msg: Rreq, from_id: int, now: float) -> RreqOutcome:
        if msg.origin == self.node_id:
            return RreqOutcome.DROP
        key = (msg.origin, msg.orig_seq)
        if self.seen.get(key, -1.0) >= now:
            return RreqOutcome.DROP
        self.seen[key] = now + 2 * self.params.rreq_wait_time
        if len(self.seen) > 4096:
            self.seen = {k: t for k, t in self.seen.items() if t >= now}
        self._install(msg.origin, from_id, msg.metric + 1, msg.orig_seq, now)
        if msg.target == self.node_id:
            seq = self._bump_seq()
            self.host.send_control(Rrep(origin=msg.origin, emitted_at=now, target=self.node_id, target_seq=seq,
                                        hop_limit=self.params.hop_limit, metric=0), dst=from_id)
            return RreqOutcome.ANSWER_RREP
        if msg.hop_limit - 1 <= 0:
            return RreqOutcome.DROP
        fwd = Rreq(origin=msg.origin, emitted_at=msg.emitted_at, target=msg.target, orig_seq=msg.orig_seq,
                   hop_limit=msg.hop_limit - 1, metric=msg.metric + 1)
        self.host.send_control(fwd, delay=self.host.jitter(FORWARD_JITTER))
        return RreqOutcome.FORWARD_RREQ

    def dymo_process_rrep(self, msg: Rrep, from_id: int, now: float) -> None:
        self._install(msg.target, from_id, msg.metric + 1, msg.target_seq, now)
        if msg.origin == self.node_id:
            self._complete(msg.target)
            return
        nh = self.route_lookup(msg.origin, now)
        if nh is None or msg.hop_limit <= 1:
            return
        self._refresh(msg.origin, now)
        fwd = Rrep(origin=msg.origin, emitted_at=msg.emitted_at, target=msg.target, target_seq=msg.target_seq,
                   hop_limit=msg.hop_limit - 1, metric=msg.metric + 1)
        self.host.send_control(fwd, dst=nh)

    def dymo_process_rerr_and_linkbreak(self, event, now: float, from_id: int | None = None) -> list[int]:
        """Handle a :class:`Rerr` (with its sender) or a broken neighbour id; return invalidated dests."""
        invalidated: list[tuple[int, int | None]] = []
        if isinstance(event, Rerr):
            for dest, seq in event.unreachable:
                e = self.routes.get(dest)
                if e is None or not e.usable(now) or e.next_hop != from_id:
                    continue
                if seq is not None and e.seq_num is not None and seq_newer(e.seq_num, seq, SEQ_MOD):
                    continue
                e.valid = False
                invalidated.append((dest, e.seq_num))
        else:
            neighbor = event
            for dest, e in sorted(self.routes.items()):
                if e.usable(now) and e.next_hop == neighbor:
                    e.valid = False
                    invalidated.append((dest, e.seq_num))
        if invalidated:
            self._emit_rerr(invalidated, now)
        return [d for d, _ in invalidated]

    def _emit_rerr(self, unreachable, now: float) -> None:
        self.host.send_control(Rerr(origin=self.node_id, emitted_at=now, unreachable=tuple(unreachable)),
                               delay=self.host.jitter(FORWARD_JITTER))

    def recv_control(self, msg, from_id: int) -> None:
        now = self.host.now
        if isinstance(msg, Rreq):
            self.dymo_process_rreq(msg, from_id, now)
        elif isinstance(msg, Rrep):
            self.dymo_process_rrep(msg, from_id, now)
        elif isinstance(msg, Rerr):
            self.dymo_process_rerr_and_linkbreak(msg, now, from_id)

    def link_failure(self, neighbor: int, packet=None) -> None:
        now = self.host.now
        self.dymo_process_rerr_and_linkbreak(neighbor, now)
        if packet is None:
            return
        if packet.src == self.node_id:
            self._buffer(packet)
        else:
            self.host.drop_data(packet, "link")

    def table(self):
        return dict(self.routes)
