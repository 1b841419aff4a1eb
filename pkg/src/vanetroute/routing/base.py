"""Route entries, control messages, protocol parameter presets and the agent base class."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, fields, replace
from typing import Any, ClassVar, Protocol

from ..errors import InvalidConfig

INF_METRIC = math.inf
IP_UDP_HEADER = 28


@dataclass
class RouteEntry:
    dest: int
    next_hop: int
    metric: float
    seq_num: int | None
    installed_at: float
    expires_at: float = math.inf
    valid: bool = True

    def usable(self, now: float) -> bool:
        return self.valid and self.metric < INF_METRIC and now <= self.expires_at


# ------------------------------------------------------------ parameters


@dataclass(frozen=True)
class DsdvParams:
    periodic_update_interval: float = 15.0
    min_trigger_interval: float = 1.0
    settling_weight: float = 0.875
    full_dump_interval: float = 15.0
    neighbor_timeout_periods: int = 3

    def __post_init__(self):
        if self.min_trigger_interval > self.periodic_update_interval:
            raise InvalidConfig("min_trigger_interval must not exceed periodic_update_interval")
        if not 0 <= self.settling_weight < 1:
            raise InvalidConfig("settling_weight must be in [0, 1)")


@dataclass(frozen=True)
class OlsrParams:
    hello_interval: float = 2.0
    tc_interval: float = 5.0
    neighbor_hold_time: float | None = None
    topology_hold_time: float | None = None

    def __post_init__(self):
        if self.neighbor_hold_time is None:
            object.__setattr__(self, "neighbor_hold_time", 3 * self.hello_interval)
        if self.topology_hold_time is None:
            object.__setattr__(self, "topology_hold_time", 3 * self.tc_interval)
        if self.neighbor_hold_time < self.hello_interval or self.topology_hold_time < self.tc_interval:
            raise InvalidConfig("OLSR hold times must be at least their emission intervals")


@dataclass(frozen=True)
class DymoParams:
    route_timeout: float = 5.0
    rreq_wait_time: float = 2.0
    rreq_tries: int = 3
    rreq_rate_limit: float = 10.0
    hop_limit: int = 10
    buffer_size: int = 10

    def __post_init__(self):
        if min(self.route_timeout, self.rreq_wait_time, self.rreq_rate_limit) <= 0:
            raise InvalidConfig("DYMO timers and rate limit must be > 0")
        if self.rreq_tries < 1 or self.hop_limit < 1:
            raise InvalidConfig("rreq_tries and hop_limit must be >= 1")


class ProtocolName(str, enum.Enum):
    DSDV = "DSDV"
    MOD_DSDV = "MOD_DSDV"
    OLSR = "OLSR"
    MOD_OLSR = "MOD_OLSR"
    DYMO = "DYMO"
    MOD_DYMO = "MOD_DYMO"

    @classmethod
    def parse(cls, value) -> "ProtocolName":
        if isinstance(value, cls):
            return value
        key = str(value).strip().upper().replace(" ", "_").replace("-", "_")
        try:
            return cls(key)
        except ValueError:
            raise InvalidConfig(f"unknown protocol {value!r}") from None

    @property
    def family(self) -> str:
        return self.value.replace("MOD_", "")


PROTOCOLS = tuple(p.value for p in ProtocolName)


def preset_params(name) -> DsdvParams | OlsrParams | DymoParams:
    """Base and MOD parameter sets. MOD variants halve or double only the fields they tune."""
    p = ProtocolName.parse(name)
    if p is ProtocolName.DSDV:
        return DsdvParams(periodic_update_interval=15.0, min_trigger_interval=1.0, full_dump_interval=15.0)
    if p is ProtocolName.MOD_DSDV:
        return DsdvParams(periodic_update_interval=30.0, min_trigger_interval=2.0, full_dump_interval=30.0)
    if p is ProtocolName.OLSR:
        return OlsrParams(hello_interval=2.0, tc_interval=5.0)
    if p is ProtocolName.MOD_OLSR:
        return OlsrParams(hello_interval=1.0, tc_interval=2.5)
    if p is ProtocolName.DYMO:
        return DymoParams(route_timeout=5.0, rreq_wait_time=2.0, rreq_rate_limit=10.0)
    return DymoParams(route_timeout=2.5, rreq_wait_time=1.0, rreq_rate_limit=5.0)


def apply_overrides(params, overrides: dict[str, Any]):
    """Return ``params`` with fields replaced; hold times re-derive unless given."""
    if not overrides:
        return params
    names = {f.name: f for f in fields(params)}
    clean = {}
    for key, value in overrides.items():
        if key not in names:
            raise InvalidConfig(f"unknown parameter {key!r} for {type(params).__name__}")
        current = getattr(params, key)
        clean[key] = int(value) if isinstance(current, int) and not isinstance(current, bool) else float(value)
    if isinstance(params, OlsrParams):
        if "hello_interval" in clean and "neighbor_hold_time" not in clean:
            clean["neighbor_hold_time"] = None
        if "tc_interval" in clean and "topology_hold_time" not in clean:
            clean["topology_hold_time"] = None
    return replace(params, **clean)


# -------------------------------------------------------------- messages


@dataclass(frozen=True)
class ControlMessage:
    origin: int
    emitted_at: float
    kind: ClassVar[str] = "control"
    family: ClassVar[str] = ""

    def size_bytes(self) -> int:
        return IP_UDP_HEADER + 16


@dataclass(frozen=True)
class DsdvUpdate(ControlMessage):
    entries: tuple[tuple[int, int, float], ...] = ()   # (dest, seq, metric)
    kind: ClassVar[str] = "DsdvUpdate"
    family: ClassVar[str] = "DSDV"

    def size_bytes(self) -> int:
        return IP_UDP_HEADER + 4 + 12 * len(self.entries)


@dataclass(frozen=True)
class Hello(ControlMessage):
    sym_neighbors: frozenset = frozenset()
    heard_neighbors: frozenset = frozenset()
    mprs: frozenset = frozenset()
    kind: ClassVar[str] = "Hello"
    family: ClassVar[str] = "OLSR"

    def size_bytes(self) -> int:
        return IP_UDP_HEADER + 16 + 4 * (len(self.sym_neighbors) + len(self.heard_neighbors))


@dataclass(frozen=True)
class Tc(ControlMessage):
    msg_seq: int = 0
    ansn: int = 0
    advertised: frozenset = frozenset()
    ttl: int = 255
    kind: ClassVar[str] = "Tc"
    family: ClassVar[str] = "OLSR"

    def size_bytes(self) -> int:
        return IP_UDP_HEADER + 16 + 4 * len(self.advertised)


@dataclass(frozen=True)
class Rreq(ControlMessage):
    target: int = 0
    orig_seq: int = 0
    hop_limit: int = 10
    metric: int = 0
    kind: ClassVar[str] = "Rreq"
    family: ClassVar[str] = "DYMO"

    def size_bytes(self) -> int:
        return IP_UDP_HEADER + 28


@dataclass(frozen=True)
class Rrep(ControlMessage):
    target: int = 0
    target_seq: int = 0
    hop_limit: int = 10
    metric: int = 0
    kind: ClassVar[str] = "Rrep"
    family: ClassVar[str] = "DYMO"

    def size_bytes(self) -> int:
        return IP_UDP_HEADER + 28


@dataclass(frozen=True)
class Rerr(ControlMessage):
    unreachable: tuple[tuple[int, int | None], ...] = ()   # (dest, seq)
    kind: ClassVar[str] = "Rerr"
    family: ClassVar[str] = "DYMO"

    def size_bytes(self) -> int:
        return IP_UDP_HEADER + 8 + 8 * len(self.unreachable)


CONTROL_KINDS = ("DsdvUpdate", "Hello", "Tc", "Rreq", "Rrep", "Rerr")


# ---------------------------------------------------------------- agents


class Host(Protocol):
    """What a routing agent needs from the node it runs on."""

    node_id: int

    @property
    def now(self) -> float: ...
    def schedule(self, delay: float, fn, *args): ...
    def cancel(self, handle) -> None: ...
    def send_control(self, msg: ControlMessage, dst: int = -1, delay: float = 0.0) -> None: ...
    def send_data(self, packet, next_hop: int) -> None: ...
    def drop_data(self, packet, reason: str) -> None: ...
    def jitter(self, upper: float) -> float: ...


class RoutingAgent:
    name = "base"

    def __init__(self, host: Host, params):
        self.host = host
        self.node_id = host.node_id
        self.params = params

    def start(self) -> None:
        pass

    def lookup(self, dest: int, now: float | None = None) -> int | None:
        raise NotImplementedError

    def route_output(self, packet) -> None:
        """Route a packet originated at this node."""
        nh = self.lookup(packet.dst)
        if nh is None:
            self.host.drop_data(packet, "noroute")
        else:
            self.host.send_data(packet, nh)

    def forward(self, packet) -> None:
        self.route_output(packet)

    def recv_control(self, msg: ControlMessage, from_id: int) -> None:
        raise NotImplementedError

    def link_failure(self, neighbor: int, packet=None) -> None:
        if packet is not None:
            self.host.drop_data(packet, "link")

    def table(self) -> dict[int, RouteEntry]:
        return {}

    def dump_table(self) -> str:
        now = self.host.now
        lines = []
        for dest, e in sorted(self.table().items()):
            state = "" if e.usable(now) else " invalid"
            lines.append(f"{dest} {e.next_hop} {e.metric} {e.seq_num} {e.expires_at}{state}")
        return "\n".join(lines)
