"""Command-line entry point: ``vanetroute simulate|sweep|analytics|phy|config``."""
from __future__ import annotations

import argparse
import sys
import time
from dataclasses import replace
from pathlib import Path

from .channel import NakagamiParams, Variant, dump_phy, nominal_range, phy_preset
from .config import ScenarioConfig, dump_config, parse_config
from .errors import InvalidConfig, SimError
from .network import RunResult, Simulation
from .routing import PROTOCOLS
from .sweep import (analytics_csv, analytics_table, atomic_write, emit_report, rows_to_csv, run_families,
                    write_metrics_csv)


def _load(path: str | None) -> ScenarioConfig:
    if path is None:
        return ScenarioConfig()
    return parse_config(Path(path).read_text())


def _run_one(cfg: ScenarioConfig, trace: bool, dump_tables: bool, out: Path) -> RunResult:
    t0 = time.perf_counter()
    sim = Simulation(cfg, trace=trace)
    sim.start()
    sim.run()
    result = sim.result(time.perf_counter() - t0)
    tag = f"{cfg.protocol}_{cfg.mac_variant}_{cfg.n_nodes}_{cfg.speed_mps:g}_{cfg.seed}"
    if trace:
        atomic_write(out / f"trace_{tag}.txt", "\n".join(sim.trace_lines) + "\n")
    if dump_tables:
        blocks = [f"# node {n.node_id}\n{n.agent.dump_table()}" for n in sim.nodes]
        atomic_write(out / f"tables_{tag}.txt", "\n".join(blocks) + "\n")
    return result


def cmd_simulate(args) -> int:
    cfg = _load(args.config)
    changes = {}
    if args.protocol is not None:
        changes["protocol"] = args.protocol
    if args.nodes is not None:
        changes["n_nodes"] = args.nodes
    if args.speed is not None:
        changes["speed_mps"] = args.speed
    if args.mac is not None:
        changes["mac_variant"] = args.mac
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.sim_time is not None:
        changes["sim_time"] = args.sim_time
    if changes:
        # round-trip through the parser so CLI values get the same validation as file values
        cfg = parse_config(dump_config(replace(cfg, **changes)))
    if args.reps < 1:
        raise InvalidConfig("--reps must be >= 1")
    out = Path(args.out)
    rows = []
    for rep in range(args.reps):
        res = _run_one(replace(cfg, seed=cfg.seed + rep), args.trace, args.dump_tables, out)
        rows.append(res.row)
        print(f"seed {cfg.seed + rep}: {res.event_count} events in {res.wall_clock:.1f}s", file=sys.stderr)
    write_metrics_csv(rows, out)
    sys.stdout.write(rows_to_csv(rows))
    return 0


def cmd_sweep(args) -> int:
    cfg = _load(args.config)
    families = ["density", "mobility"] if args.family == "all" else [args.family]
    protocols = args.protocols.split(",") if args.protocols else PROTOCOLS
    macs = args.macs.split(",") if args.macs else ("802.11", "802.11p")
    for m in macs:
        Variant.parse(m)
    rows = run_families(cfg, families, args.reps, protocols, macs, workers=args.workers)
    files = emit_report(rows, args.out, charts=not args.no_charts, families=families)
    for f in files:
        print(f)
    return 0


def cmd_analytics(args) -> int:
    rows = analytics_table(args.mean, args.var, args.rmax, args.steps, args.mc, args.seed)
    text = analytics_csv(rows)
    if args.out:
        atomic_write(Path(args.out), text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_phy(args) -> int:
    naka = NakagamiParams()
    blocks = []
    for variant in Variant:
        phy = phy_preset(variant)
        blocks.append(dump_phy(phy) + f"\nnominal_rx_range = {nominal_range(phy, naka):.1f}"
                      f"\nnominal_cs_range = {nominal_range(phy, naka, phy.cs_threshold):.1f}")
    print("\n\n".join(blocks))
    return 0


def cmd_config(args) -> int:
    sys.stdout.write(dump_config(ScenarioConfig()))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="vanetroute", description="Highway VANET routing simulator")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run one scenario for one or more seeds")
    s.add_argument("--config")
    s.add_argument("--protocol", choices=PROTOCOLS)
    s.add_argument("--nodes", type=int)
    s.add_argument("--speed", type=float)
    s.add_argument("--mac", choices=[v.value for v in Variant])
    s.add_argument("--seed", type=int)
    s.add_argument("--reps", type=int, default=1)
    s.add_argument("--sim-time", type=float)
    s.add_argument("--out", required=True)
    s.add_argument("--trace", action="store_true", help="write one line per MAC tx/rx")
    s.add_argument("--dump-tables", action="store_true", help="write every node's routing table at the end")
    s.set_defaults(func=cmd_simulate)

    w = sub.add_parser("sweep", help="run a density or mobility sweep and write metrics.csv plus charts")
    w.add_argument("--config")
    w.add_argument("--family", choices=("density", "mobility", "all"), required=True)
    w.add_argument("--out", required=True)
    w.add_argument("--reps", type=int, default=1)
    w.add_argument("--protocols", help="comma-separated subset")
    w.add_argument("--macs", help="comma-separated subset")
    w.add_argument("--workers", type=int, default=1)
    w.add_argument("--no-charts", action="store_true")
    w.set_defaults(func=cmd_sweep)

    a = sub.add_parser("analytics", help="tabulate the Gaussian distance pdf, cdf and efficiency")
    a.add_argument("--mean", type=float, required=True)
    a.add_argument("--var", type=float, required=True)
    a.add_argument("--rmax", type=float, required=True)
    a.add_argument("--steps", type=int, required=True)
    a.add_argument("--mc", type=int, default=0, help="Monte Carlo trajectories for an empirical column")
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--out")
    a.set_defaults(func=cmd_analytics)

    ph = sub.add_parser("phy", help="PHY presets")
    ph.add_argument("action", choices=("dump",))
    ph.set_defaults(func=cmd_phy)

    c = sub.add_parser("config", help="scenario configuration")
    c.add_argument("action", choices=("dump-defaults",))
    c.set_defaults(func=cmd_config)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SimError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
