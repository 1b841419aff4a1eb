from .base import (
    CONTROL_KINDS,
    INF_METRIC,
    PROTOCOLS,
    ControlMessage,
    DsdvParams,
    DsdvUpdate,
    DymoParams,
    Hello,
    OlsrParams,
    ProtocolName,
    RouteEntry,
    Rerr,
    Rrep,
    Rreq,
    RoutingAgent,
    Tc,
    apply_overrides,
    preset_params,
)
from .dsdv import DsdvAgent
from .dymo import Discovery, DymoAgent, RreqOutcome
from .olsr import OlsrAgent, minimum_mpr_size, olsr_select_mprs, seq_newer

AGENTS = {"DSDV": DsdvAgent, "OLSR": OlsrAgent, "DYMO": DymoAgent}


def make_agent(protocol, host, params=None):
    name = ProtocolName.parse(protocol)
    params = preset_params(name) if params is None else params
    return AGENTS[name.family](host, params)


__all__ = [
    "AGENTS", "CONTROL_KINDS", "INF_METRIC", "PROTOCOLS", "ControlMessage", "Discovery", "DsdvAgent",
    "DsdvParams", "DsdvUpdate", "DymoAgent", "DymoParams", "Hello", "OlsrAgent", "OlsrParams",
    "ProtocolName", "Rerr", "RouteEntry", "Rrep", "Rreq", "RreqOutcome", "RoutingAgent", "Tc",
    "apply_overrides", "make_agent", "minimum_mpr_size", "olsr_select_mprs", "preset_params", "seq_newer",
]
