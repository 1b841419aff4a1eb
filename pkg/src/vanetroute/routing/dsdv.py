"""Destination-Sequenced Distance Vector."""
from __future__ import annotations

import math
from dataclasses import dataclass

from .base import INF_METRIC, DsdvParams, DsdvUpdate, RouteEntry, RoutingAgent


@dataclass
class _Extra:
    changed: bool = False
    advertise_after: float = 0.0
    settle_avg: float = 0.0
    seq_heard_at: float = 0.0
    broken_at: float | None = None


class DsdvAgent(RoutingAgent):
    name = "DSDV"

    def __init__(self, host, params: DsdvParams):
        super().__init__(host, params)
        self.own_seq = 0
        self.routes: dict[int, RouteEntry] = {}
        self.extra: dict[int, _Extra] = {}
        self.last_heard: dict[int, float] = {}
        self.last_advert = -math.inf
        self.trigger_event = None
        self.self_dirty = False    # own sequence bumped after hearing of a broken route to us
        self.seq_history: list[int] = []

    # ---------------------------------------------------------- timers

    def start(self) -> None:
        self.host.schedule(self.host.jitter(min(1.0, self.params.periodic_update_interval)), self._periodic)

    def _periodic(self) -> None:
        now = self.host.now
        self._expire_neighbors(now)
        update = self.dsdv_periodic_dump(now)
        self.host.send_control(update)
        period = self.params.periodic_update_interval
        self.host.schedule(period * (0.9 + 0.2 * self.host.jitter(1.0)), self._periodic)

    def _expire_neighbors(self, now: float) -> None:
        limit = self.params.neighbor_timeout_periods * self.params.periodic_update_interval
        for nbr, heard in list(self.last_heard.items()):
            if now - heard > limit:
                del self.last_heard[nbr]
                self._break_link(nbr, now)

    # ------------------------------------------------------- operations

    def dsdv_periodic_dump(self, now: float) -> DsdvUpdate:
        """Full dump: self at a fresh even sequence number plus every known entry."""
        self.own_seq += 2
        self.seq_history.append(self.own_seq)
        self.self_dirty = False
        entries = [(self.node_id, self.own_seq, 0)]
        keep_broken = 3 * self.params.periodic_update_interval
        for dest in sorted(self.routes):
            e = self.routes[dest]
            x = self.extra[dest]
            if e.valid:
                entries.append((dest, e.seq_num, e.metric))
            elif x.broken_at is not None and now - x.broken_at <= keep_broken:
                entries.append((dest, e.seq_num, INF_METRIC))
            x.changed = False
        self.last_advert = now
        return DsdvUpdate(origin=self.node_id, emitted_at=now, entries=tuple(entries))

    def dsdv_process_update(self, update: DsdvUpdate, from_id: int, now: float) -> tuple[list[int], bool]:
        """Merge a neighbour's advertisement; return changed destinations and whether to trigger."""
        self.last_heard[from_id] = now
        changed: list[int] = []
        trigger = False
        w = self.params.settling_weight
        for dest, seq, metric in update.entries:
            if dest == self.node_id:
                if seq % 2 == 1 and seq > self.own_seq:
                    # answer the breakage news with a fresher even number right away
                    self.own_seq = seq + 1
                    self.seq_history.append(self.own_seq)
                    self.self_dirty = True
                    trigger = True
                continue
            new_metric = INF_METRIC if metric == INF_METRIC else metric + 1
            e = self.routes.get(dest)
            if e is None:
                if new_metric == INF_METRIC:
                    continue
                self.routes[dest] = RouteEntry(dest, from_id, new_metric, seq, now)
                self.extra[dest] = _Extra(changed=True, advertise_after=now, seq_heard_at=now)
                changed.append(dest)
                trigger = True
                continue
            x = self.extra[dest]
            newer = seq > e.seq_num
            better = seq == e.seq_num and new_metric < e.metric
            if not (newer or better):
                continue
            if newer:
                x.seq_heard_at = now
            elif better:
                x.settle_avg = w * x.settle_avg + (1 - w) * (now - x.seq_heard_at)
            significant = new_metric != e.metric or from_id != e.next_hop or not e.valid
            e.next_hop, e.metric, e.seq_num, e.installed_at = from_id, new_metric, seq, now
            changed.append(dest)
            if new_metric == INF_METRIC:
                e.valid = False
                x.broken_at = now
                x.changed = True
                x.advertise_after = now
                trigger = True
            else:
                e.valid = True
                x.broken_at = None
                if significant:
                    x.changed = True
                    x.advertise_after = now + 2.0 * x.settle_avg if newer and x.settle_avg > 0 else now
                    trigger = True
        return changed, trigger

    def route_lookup(self, dest: int, now: float) -> int | None:
        if dest == self.node_id:
            return self.node_id
        e = self.routes.get(dest)
        if e is None or not e.usable(now) or e.seq_num % 2 == 1:
            return None
        return e.next_hop

    def lookup(self, dest, now=None):
        return self.route_lookup(dest, self.host.now if now is None else now)

    # ------------------------------------------------------------ events

    def recv_control(self, msg, from_id: int) -> None:
        if not isinstance(msg, DsdvUpdate):
            return
        _, trigger = self.dsdv_process_update(msg, from_id, self.host.now)
        if trigger:
            self._request_trigger()

    def _request_trigger(self) -> None:
        if self.trigger_event is not None:
            return
        now = self.host.now
        pending = [x.advertise_after for x in self.extra.values() if x.changed]
        if self.self_dirty:
            pending.append(now)
        if not pending:
            return
        at = max(now, self.last_advert + self.params.min_trigger_interval, min(pending))
        self.trigger_event = self.host.schedule(at - now, self._send_trigger)

    def _send_trigger(self) -> None:
        self.trigger_event = None
        now = self.host.now
        entries = [(self.node_id, self.own_seq, 0)] if self.self_dirty else []
        self.self_dirty = False
        for dest in sorted(self.routes):
            e, x = self.routes[dest], self.extra[dest]
            if x.changed and x.advertise_after <= now:
                entries.append((dest, e.seq_num, e.metric if e.valid else INF_METRIC))
                x.changed = False
        if entries:
            self.last_advert = now
            self.host.send_control(DsdvUpdate(origin=self.node_id, emitted_at=now, entries=tuple(entries)))
        self._request_trigger()

    def _break_link(self, neighbor: int, now: float) -> list[int]:
        broken = []
        for dest, e in self.routes.items():
            if e.valid and e.next_hop == neighbor:
                e.valid = False
                e.metric = INF_METRIC
                e.seq_num += 1
                x = self.extra[dest]
                x.broken_at = now
                x.changed = True
                x.advertise_after = now
                broken.append(dest)
        if broken:
            self._request_trigger()
        return broken

    def link_failure(self, neighbor: int, packet=None) -> None:
        self.last_heard.pop(neighbor, None)
        self._break_link(neighbor, self.host.now)
        if packet is not None:
            self.host.drop_data(packet, "link")

    def table(self):
        t = {self.node_id: RouteEntry(self.node_id, self.node_id, 0, self.own_seq, 0.0)}
        t.update(self.routes)
        return t
