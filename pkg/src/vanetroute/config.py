"""Scenario configuration: defaults, ``key = value`` documents with ``[section]`` headers."""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, fields, replace
from typing import Any

from .channel import Variant, _PHY_PRESETS
from .errors import InvalidConfig, OutOfRangeValue, ParseError, UnknownKey
from .mac import _preset_fields
from .mobility import HighwayConfig
from .routing.base import DsdvParams, DymoParams, OlsrParams, ProtocolName

CHANNEL_KEYS = ("m_near", "m_far", "m_breakpoint", "gamma_near", "gamma_far", "gamma_breakpoint",
                "ref_distance", "ref_loss")

OVERRIDE_NAMESPACES: dict[str, tuple[str, ...]] = {
    "phy": tuple(_PHY_PRESETS[Variant.DOT11]),
    "mac": tuple(_preset_fields(Variant.DOT11)),
    "channel": CHANNEL_KEYS,
    "routing.dsdv": tuple(f.name for f in fields(DsdvParams)),
    "routing.olsr": tuple(f.name for f in fields(OlsrParams)),
    "routing.dymo": tuple(f.name for f in fields(DymoParams)),
}


@dataclass(frozen=True)
class ScenarioConfig:
    n_nodes: int = 50
    speed_mps: float = 15.0
    mac_variant: str = "802.11"
    protocol: str = "DSDV"
    sim_time: float = 900.0
    packet_bytes: int = 512
    packet_interval: float = 0.03
    n_flows: int = 10
    flow_start: float = 1.0
    flow_start_spread: float = 4.0
    seed: int = 1
    propagation: str = "nakagami"
    queue: str = "DropTail/PriQueue"
    traffic: str = "UDP/CBR"
    highway: HighwayConfig = field(default_factory=HighwayConfig)
    overrides: tuple[tuple[str, Any], ...] = ()

    def override_map(self, namespace: str) -> dict[str, Any]:
        prefix = namespace + "."
        return {k[len(prefix):]: v for k, v in self.overrides if k.startswith(prefix) and "." not in k[len(prefix):]}

    def with_overrides(self, **extra) -> "ScenarioConfig":
        merged = dict(self.overrides)
        merged.update(extra)
        return replace(self, overrides=tuple(sorted(merged.items())))


SCENARIO_KEYS = ("n_nodes", "speed_mps", "mac_variant", "protocol", "sim_time", "packet_bytes",
                 "packet_interval", "n_flows", "flow_start", "flow_start_spread", "seed",
                 "propagation", "queue", "traffic")
HIGHWAY_KEYS = ("length", "lanes", "lane_width", "wraparound")

_INT_KEYS = {"n_nodes", "packet_bytes", "n_flows", "seed", "lanes"}
_FLOAT_KEYS = {"speed_mps", "sim_time", "packet_interval", "flow_start", "flow_start_spread",
               "length", "lane_width"}


def _parse_value(raw: str, line: int, key: str):
    raw = raw.strip()
    if not raw:
        raise ParseError("missing value", line, key)
    if raw[0] in "\"'":
        if len(raw) < 2 or raw[-1] != raw[0]:
            raise ParseError(f"unterminated string {raw!r}", line, key)
        return raw[1:-1]
    low = raw.lower()
    if low in ("true", "false"):
        return low == "true"
    if low in ("inf", "+inf"):
        return math.inf
    try:
        return int(raw)
    except ValueError:
        pass
    try:
        return float(raw)
    except ValueError:
        return raw


def _coerce(key: str, value, line: int | None):
    try:
        if key in _INT_KEYS:
            if isinstance(value, bool) or (isinstance(value, float) and not value.is_integer()):
                raise ValueError
            return int(value)
        if key in _FLOAT_KEYS:
            if isinstance(value, bool):
                raise ValueError
            return float(value)
        if key == "wraparound":
            if not isinstance(value, bool):
                raise ValueError
            return value
    except (TypeError, ValueError):
        raise ParseError(f"invalid value {value!r}", line, key) from None
    return value


def _check_ranges(values: dict[str, Any], lines: dict[str, int]) -> None:
    def bad(key, why):
        raise OutOfRangeValue(f"{values[key]!r} {why}", lines.get(key), key)

    if values["n_nodes"] < 2:
        bad("n_nodes", "must be >= 2")
    if values["speed_mps"] < 0 or not math.isfinite(values["speed_mps"]):
        bad("speed_mps", "must be a non-negative finite speed")
    for key in ("sim_time", "packet_interval"):
        if not values[key] > 0:
            bad(key, "must be > 0")
    if values["packet_bytes"] <= 0:
        bad("packet_bytes", "must be > 0")
    if values["n_flows"] < 0:
        bad("n_flows", "must be >= 0")
    if values["flow_start"] < 0 or values["flow_start_spread"] < 0:
        bad("flow_start" if values["flow_start"] < 0 else "flow_start_spread", "must be >= 0")
    if values["propagation"] != "nakagami":
        bad("propagation", "only 'nakagami' is modelled")
    if values["queue"] != "DropTail/PriQueue":
        bad("queue", "only 'DropTail/PriQueue' is modelled")
    if values["traffic"] != "UDP/CBR":
        bad("traffic", "only 'UDP/CBR' is modelled")
    try:
        values["mac_variant"] = Variant.parse(values["mac_variant"]).value
    except InvalidConfig:
        bad("mac_variant", "is not 802.11 or 802.11p")
    try:
        values["protocol"] = ProtocolName.parse(values["protocol"]).value
    except InvalidConfig:
        bad("protocol", "is not a known protocol preset")


def build_config(values: dict[str, Any], overrides: dict[str, Any] | None = None,
                 lines: dict[str, int] | None = None) -> ScenarioConfig:
    """Assemble and validate a config from flat dotted keys (``highway.length``, ``routing.olsr.x`` ...)."""
    lines = lines or {}
    base = ScenarioConfig()
    scen = {k: getattr(base, k) for k in SCENARIO_KEYS}
    hw = {k: getattr(base.highway, k) for k in HIGHWAY_KEYS}
    ovr: dict[str, Any] = dict(base.overrides)
    for key, value in values.items():
        line = lines.get(key)
        if key in SCENARIO_KEYS:
            scen[key] = _coerce(key, value, line)
        elif key.startswith("highway.") and key[8:] in HIGHWAY_KEYS:
            hw[key[8:]] = _coerce(key[8:], value, line)
        else:
            ns, _, leaf = key.rpartition(".")
            if ns not in OVERRIDE_NAMESPACES or leaf not in OVERRIDE_NAMESPACES[ns]:
                raise UnknownKey("unknown key", line, key)
            if isinstance(value, str) or isinstance(value, bool):
                raise ParseError(f"expected a number, got {value!r}", line, key)
            ovr[key] = value
    for key, value in (overrides or {}).items():
        ns, _, leaf = key.rpartition(".")
        if ns not in OVERRIDE_NAMESPACES or leaf not in OVERRIDE_NAMESPACES[ns]:
            raise UnknownKey("unknown override key", None, key)
        ovr[key] = value
    _check_ranges(scen, lines)
    try:
        highway = HighwayConfig(**hw)
    except InvalidConfig as exc:
        raise OutOfRangeValue(str(exc), None, "highway") from None
    return ScenarioConfig(**scen, highway=highway, overrides=tuple(sorted(ovr.items())))


_SECTION = re.compile(r"^\[\s*([A-Za-z0-9_.]+)\s*\]$")
_PAIR = re.compile(r"^([A-Za-z0-9_.]+)\s*=\s*(.*)$")


def _strip_comment(text: str) -> str:
    out, quote = [], None
    for ch in text:
        if quote:
            if ch == quote:
                quote = None
        elif ch in "\"'":
            quote = ch
        elif ch == "#":
            break
        out.append(ch)
    return "".join(out).strip()


def parse_config(text: str, overrides: dict[str, Any] | None = None) -> ScenarioConfig:
    """Parse a config document; missing keys keep their defaults, ``overrides`` apply last."""
    values: dict[str, Any] = {}
    lines: dict[str, int] = {}
    section = ""
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw)
        if not line:
            continue
        m = _SECTION.match(line)
        if m:
            section = "" if m.group(1) == "scenario" else m.group(1)
            continue
        m = _PAIR.match(line)
        if not m:
            raise ParseError(f"cannot parse {raw.strip()!r}", lineno)
        key = f"{section}.{m.group(1)}" if section else m.group(1)
        if key in values:
            raise ParseError("duplicate key", lineno, key)
        values[key] = _parse_value(m.group(2), lineno, key)
        lines[key] = lineno
    return build_config(values, overrides, lines)


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, str):
        return f'"{value}"'
    if isinstance(value, float) and math.isinf(value):
        return "inf"
    return repr(value)


def dump_config(cfg: ScenarioConfig) -> str:
    out = ["[scenario]"]
    out += [f"{k} = {_fmt(getattr(cfg, k))}" for k in SCENARIO_KEYS]
    out += ["", "[highway]"]
    out += [f"{k} = {_fmt(getattr(cfg.highway, k))}" for k in HIGHWAY_KEYS]
    by_ns: dict[str, list[tuple[str, Any]]] = {}
    for key, value in cfg.overrides:
        ns, _, leaf = key.rpartition(".")
        by_ns.setdefault(ns, []).append((leaf, value))
    for ns in sorted(by_ns):
        out += ["", f"[{ns}]"]
        out += [f"{leaf} = {_fmt(v)}" for leaf, v in by_ns[ns]]
    return "\n".join(out) + "\n"
