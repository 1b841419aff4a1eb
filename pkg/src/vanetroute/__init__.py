"""Discrete-event simulator for proactive and reactive routing in a highway VANET."""
from .config import ScenarioConfig, dump_config, parse_config
from .network import RunResult, Simulation, run_scenario
from .sweep import Sweep, analytics_table, emit_report, run_matrix

__all__ = ["ScenarioConfig", "parse_config", "dump_config", "Simulation", "RunResult", "run_scenario",
           "Sweep", "run_matrix", "emit_report", "analytics_table"]
__version__ = "0.1.0"
