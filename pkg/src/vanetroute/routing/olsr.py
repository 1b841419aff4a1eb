"""Optimized Link State Routing: HELLO neighbour sensing, MPR flooding of TC messages."""
from __future__ import annotations

import itertools
from collections.abc import Iterable, Mapping

from ..errors import InconsistentTopologySets
from .base import Hello, OlsrParams, RouteEntry, RoutingAgent, Tc

ANSN_MOD = 1 << 16
FORWARD_JITTER = 0.01


def seq_newer(a: int, b: int, mod: int = ANSN_MOD) -> bool:
    """True when ``a`` is more recent than ``b`` under half-range wraparound."""
    diff = (a - b) % mod
    return 0 < diff < mod // 2


def olsr_select_mprs(one_hop: Iterable[int], two_hop: Mapping[int, Iterable[int]]) -> set[int]:
    """Greedy MPR selection covering every strict two-hop neighbour.

    Neighbours that are the sole path to some two-hop node are taken first;
    the rest are added by largest remaining coverage, lowest id on ties.
    """
    one = set(one_hop)
    reach = {n: set(two_hop.get(n, ())) for n in one}
    stray = set(two_hop) - one
    if stray:
        raise InconsistentTopologySets(f"two-hop entries via non-neighbours {sorted(stray)}")
    strict = set().union(*reach.values()) - one if reach else set()
    for n in reach:
        reach[n] &= strict

    mprs: set[int] = set()
    for y in sorted(strict):
        via = [n for n in reach if y in reach[n]]
        if len(via) == 1:
            mprs.add(via[0])
    uncovered = strict - set().union(*(reach[n] for n in mprs)) if mprs else set(strict)
    while uncovered:
        best = max(sorted(reach), key=lambda n: len(reach[n] & uncovered))
        mprs.add(best)
        uncovered -= reach[best]
    return mprs


def minimum_mpr_size(one_hop: Iterable[int], two_hop: Mapping[int, Iterable[int]]) -> int:
    """Exhaustive minimum cover size (small neighbourhoods only)."""
    one = sorted(set(one_hop))
    reach = {n: set(two_hop.get(n, ())) for n in one}
    strict = set().union(*reach.values()) - set(one) if reach else set()
    for k in range(len(one) + 1):
        for combo in itertools.combinations(one, k):
            covered = set().union(*(reach[n] for n in combo)) if combo else set()
            if strict <= covered:
                return k
    raise InconsistentTopologySets("two-hop set cannot be covered")


class OlsrAgent(RoutingAgent):
    name = "OLSR"

    def __init__(self, host, params: OlsrParams):
        super().__init__(host, params)
        self.link_heard: dict[int, float] = {}      # neighbour -> asym-valid-until
        self.link_sym: dict[int, float] = {}        # neighbour -> sym-valid-until
        self.two_hop: dict[int, dict[int, float]] = {}   # neighbour -> {two-hop: until}
        self.mpr_set: set[int] = set()
        self.mpr_selectors: dict[int, float] = {}
        self.topology: dict[int, tuple[int, dict[int, float]]] = {}   # origin -> (ansn, {dest: until})
        self.seen: dict[tuple[int, int], float] = {}
        self.ansn = 0
        self._advertised: frozenset = frozenset()
        self.msg_seq = 0
        self._routes: dict[int, RouteEntry] | None = None
        self._routes_until = -1.0

    # ---------------------------------------------------------- timers

    def start(self) -> None:
        self.host.schedule(self.host.jitter(self.params.hello_interval), self._hello_timer)
        self.host.schedule(self.host.jitter(self.params.tc_interval), self._tc_timer)

    def _period(self, interval: float) -> float:
        # emission jitter of up to a quarter interval, subtracted
        return interval - self.host.jitter(interval / 4)

    def _hello_timer(self) -> None:
        self.host.send_control(self.make_hello(self.host.now))
        self.host.schedule(self._period(self.params.hello_interval), self._hello_timer)

    def _tc_timer(self) -> None:
        tc = self.make_tc(self.host.now)
        if tc is not None:
            self.seen[(self.node_id, tc.msg_seq)] = self.host.now + self.params.topology_hold_time
            self.host.send_control(tc)
        self.host.schedule(self._period(self.params.tc_interval), self._tc_timer)

    # -------------------------------------------------------- neighbours

    def sym_neighbors(self, now: float) -> set[int]:
        return {n for n, t in self.link_sym.items() if t >= now}

    def heard_neighbors(self, now: float) -> set[int]:
        return {n for n, t in self.link_heard.items() if t >= now}

    def two_hop_sets(self, now: float) -> dict[int, set[int]]:
        sym = self.sym_neighbors(now)
        return {n: {y for y, t in ys.items() if t >= now and y != self.node_id}
                for n, ys in self.two_hop.items() if n in sym}

    def selectors(self, now: float) -> frozenset:
        return frozenset(n for n, t in self.mpr_selectors.items() if t >= now)

    def _recompute_mprs(self, now: float) -> None:
        self.mpr_set = olsr_select_mprs(self.sym_neighbors(now), self.two_hop_sets(now))

    def make_hello(self, now: float) -> Hello:
        self._purge(now)
        self._recompute_mprs(now)
        sym = self.sym_neighbors(now)
        heard = self.heard_neighbors(now) - sym
        return Hello(origin=self.node_id, emitted_at=now, sym_neighbors=frozenset(sym),
                     heard_neighbors=frozenset(heard), mprs=frozenset(self.mpr_set))

    def make_tc(self, now: float) -> Tc | None:
        sel = self.selectors(now)
        if sel != self._advertised:
            self.ansn = (self.ansn + 1) % ANSN_MOD
            self._advertised = sel
        if not sel:
            return None
        self.msg_seq = (self.msg_seq + 1) % ANSN_MOD
        return Tc(origin=self.node_id, emitted_at=now, msg_seq=self.msg_seq, ansn=self.ansn, advertised=sel)

    def _purge(self, now: float) -> None:
        for table in (self.link_heard, self.link_sym, self.mpr_selectors):
            for k in [k for k, t in table.items() if t < now]:
                del table[k]
        for n in list(self.two_hop):
            ys = self.two_hop[n]
            for y in [y for y, t in ys.items() if t < now]:
                del ys[y]
            if not ys or n not in self.link_sym:
                del self.two_hop[n]
        for origin in list(self.topology):
            ansn, dests = self.topology[origin]
            for d in [d for d, t in dests.items() if t < now]:
                del dests[d]
            if not dests:
                del self.topology[origin]
        for k in [k for k, t in self.seen.items() if t < now]:
            del self.seen[k]

    # ------------------------------------------------------- operations

    def olsr_process_hello(self, msg: Hello, from_id: int, now: float) -> bool:
        """Update link, two-hop and MPR-selector state; return True if the neighbourhood changed."""
        hold = self.params.neighbor_hold_time
        was_sym = self.link_sym.get(from_id, -1.0) >= now
        old_two = {y for y, t in self.two_hop.get(from_id, {}).items() if t >= now} if was_sym else set()
        self.link_heard[from_id] = now + hold
        if self.node_id in msg.sym_neighbors or self.node_id in msg.heard_neighbors:
            self.link_sym[from_id] = now + hold
        else:
            self.link_sym.pop(from_id, None)
        is_sym = from_id in self.link_sym
        if is_sym:
            new_two = {y for y in msg.sym_neighbors if y != self.node_id}
            self.two_hop[from_id] = dict.fromkeys(new_two, now + hold)
            if self.node_id in msg.mprs:
                self.mpr_selectors[from_id] = now + hold
            else:
                self.mpr_selectors.pop(from_id, None)
        else:
            new_two = set()
            self.two_hop.pop(from_id, None)
            self.mpr_selectors.pop(from_id, None)
        changed = was_sym != is_sym or old_two != new_two
        if changed:
            # the MPR set is only read when the next HELLO is built
            self._routes = None
        return changed

    def olsr_process_tc(self, msg: Tc, now: float) -> bool:
        """Install topology tuples from a TC; False when it was stale."""
        if msg.origin == self.node_id:
            return False
        stored = self.topology.get(msg.origin)
        if stored is not None and seq_newer(stored[0], msg.ansn):
            return False
        until = now + self.params.topology_hold_time
        adv = set(msg.advertised)
        if stored is None or seq_newer(msg.ansn, stored[0]):
            old = set() if stored is None else {d for d, t in stored[1].items() if t >= now}
            dests = {}
            changed = old != adv
        else:
            dests = stored[1]
            changed = any(dests.get(d, -1.0) < now for d in adv)
        for d in adv:
            dests[d] = until
        self.topology[msg.origin] = (msg.ansn, dests)
        if changed:
            self._routes = None
        return True

    def olsr_compute_routes(self, now: float) -> dict[int, RouteEntry]:
        """Hop-count shortest paths; equal-length ties go to the lowest next-hop id."""
        table: dict[int, RouteEntry] = {}
        adj: dict[int, set[int]] = {}
        for n, ys in self.two_hop_sets(now).items():
            adj.setdefault(n, set()).update(ys)
        for origin, (_, dests) in self.topology.items():
            live = {d for d, t in dests.items() if t >= now}
            if live:
                adj.setdefault(origin, set()).update(live)
        frontier = {n: n for n in self.sym_neighbors(now)}
        hop = 1
        while frontier:
            for dest, nh in frontier.items():
                table[dest] = RouteEntry(dest, nh, hop, None, now)
            nxt: dict[int, int] = {}
            for x in sorted(frontier):
                nh = frontier[x]
                for y in adj.get(x, ()):
                    if y == self.node_id or y in table:
                        continue
                    if y not in nxt or nh < nxt[y]:
                        nxt[y] = nh
            frontier = nxt
            hop += 1
        return table

    def _earliest_expiry(self, now: float) -> float:
        times = [t for t in self.link_sym.values() if t >= now]
        times += [t for ys in self.two_hop.values() for t in ys.values() if t >= now]
        times += [t for _, dests in self.topology.values() for t in dests.values() if t >= now]
        return min(times, default=float("inf"))

    def route_lookup(self, dest: int, now: float) -> int | None:
        if dest == self.node_id:
            return self.node_id
        if self._routes is None or now > self._routes_until:
            self._routes = self.olsr_compute_routes(now)
            self._routes_until = self._earliest_expiry(now)
        e = self._routes.get(dest)
        return e.next_hop if e is not None else None

    def lookup(self, dest, now=None):
        return self.route_lookup(dest, self.host.now if now is None else now)

    # ------------------------------------------------------------ events

    def recv_control(self, msg, from_id: int) -> None:
        now = self.host.now
        if isinstance(msg, Hello):
            self.olsr_process_hello(msg, from_id, now)
        elif isinstance(msg, Tc):
            if from_id not in self.sym_neighbors(now):
                return
            key = (msg.origin, msg.msg_seq)
            if key in self.seen and self.seen[key] >= now:
                return
            self.seen[key] = now + self.params.topology_hold_time
            self.olsr_process_tc(msg, now)
            if msg.ttl > 1 and self.mpr_selectors.get(from_id, -1.0) >= now:
                fwd = Tc(origin=msg.origin, emitted_at=msg.emitted_at, msg_seq=msg.msg_seq,
                         ansn=msg.ansn, advertised=msg.advertised, ttl=msg.ttl - 1)
                self.host.send_control(fwd, delay=self.host.jitter(FORWARD_JITTER))

    def table(self):
        return self.olsr_compute_routes(self.host.now)
