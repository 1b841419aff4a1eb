"""Batch execution over the density / mobility matrix, CSV output, charts and the distance-model table."""
from __future__ import annotations

import csv
import io
import itertools
import math
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Sequence

from .config import ScenarioConfig
from .core import RngStream
from .errors import InvalidConfig
from .mobility import GaussianDistanceModel, distance_cdf, distance_pdf, monte_carlo_cdf
from .network import CSV_COLUMNS, RunResult, run_scenario
from .routing import PROTOCOLS

TABLE_ONE_NODES = (25, 50, 75, 100)
TABLE_ONE_SPEEDS = (2.0, 7.0, 15.0, 30.0)
DENSITY_SPEED = 15.0
MOBILITY_NODES = 50
MACS = ("802.11", "802.11p")
METRICS = ("throughput_Bps", "e2ed_s", "nrl")


@dataclass(frozen=True)
class Sweep:
    node_counts: tuple[int, ...]
    speeds: tuple[float, ...]
    protocols: tuple[str, ...] = PROTOCOLS
    macs: tuple[str, ...] = MACS


def family_sweep(family: str, protocols: Sequence[str] = PROTOCOLS, macs: Sequence[str] = MACS,
                 mobility_nodes: int = MOBILITY_NODES, density_speed: float = DENSITY_SPEED) -> Sweep:
    if family == "density":
        return Sweep(TABLE_ONE_NODES, (density_speed,), tuple(protocols), tuple(macs))
    if family == "mobility":
        return Sweep((mobility_nodes,), TABLE_ONE_SPEEDS, tuple(protocols), tuple(macs))
    raise InvalidConfig(f"unknown sweep family {family!r}")


def matrix_configs(base: ScenarioConfig, sweep: Sweep, reps: int) -> list[ScenarioConfig]:
    if reps < 1:
        raise InvalidConfig("reps must be >= 1")
    return [replace(base, mac_variant=mac, protocol=proto, n_nodes=n, speed_mps=float(v), seed=base.seed + rep)
            for mac, proto, n, v, rep in itertools.product(sweep.macs, sweep.protocols, sweep.node_counts,
                                                          sweep.speeds, range(reps))]


def _row_key(row: dict) -> tuple:
    proto_rank = PROTOCOLS.index(row["protocol"]) if row["protocol"] in PROTOCOLS else len(PROTOCOLS)
    return (row["mac_variant"], proto_rank, row["protocol"], row["n_nodes"], row["speed_mps"], row["seed"])


def _run(cfg: ScenarioConfig) -> RunResult:
    return run_scenario(cfg)


def run_configs(configs: Iterable[ScenarioConfig], workers: int = 1,
                cache: dict | None = None) -> list[RunResult]:
    """Run every config once (identical configs share a run), preserving input order."""
    configs = list(configs)
    cache = {} if cache is None else cache
    todo = [c for c in dict.fromkeys(configs) if c not in cache]
    if workers > 1 and len(todo) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for cfg, res in zip(todo, pool.map(_run, todo)):
                cache[cfg] = res
    else:
        for cfg in todo:
            cache[cfg] = _run(cfg)
    return [cache[c] for c in configs]


def run_matrix(base: ScenarioConfig, sweep: Sweep, reps: int, workers: int = 1,
               cache: dict | None = None) -> list[dict]:
    """Rows for the Cartesian product of the sweep axes and ``reps`` seeds, sorted deterministically."""
    results = run_configs(matrix_configs(base, sweep, reps), workers, cache)
    return sorted((dict(r.row) for r in results), key=_row_key)


def run_families(base: ScenarioConfig, families: Sequence[str], reps: int, protocols: Sequence[str] = PROTOCOLS,
                 macs: Sequence[str] = MACS, workers: int = 1, cache: dict | None = None) -> list[dict]:
    cache = {} if cache is None else cache
    rows: list[dict] = []
    for fam in families:
        rows += run_matrix(base, family_sweep(fam, protocols, macs), reps, workers, cache)
    return sorted(rows, key=_row_key)


# ------------------------------------------------------------------ output


def format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        if math.isnan(value):
            return ""
        return f"{value:.6f}"
    return str(value)


def rows_to_csv(rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for row in rows:
        w.writerow([format_cell(row.get(c)) for c in CSV_COLUMNS])
    return buf.getvalue()


def atomic_write(path: Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_metrics_csv(rows: Sequence[dict], out_dir: Path) -> Path:
    path = Path(out_dir) / "metrics.csv"
    atomic_write(path, rows_to_csv(rows))
    return path


def _mean(values: list) -> float:
    vals = [v for v in values if v is not None and not (isinstance(v, float) and math.isnan(v))]
    return sum(vals) / len(vals) if vals else math.nan


def family_means(rows: Sequence[dict], metric: str, family: str, mac: str,
                 density_speed: float = DENSITY_SPEED, mobility_nodes: int = MOBILITY_NODES):
    """{protocol: {sweep point: seed-averaged metric}} for one panel."""
    if family == "density":
        sel = [r for r in rows if r["mac_variant"] == mac and float(r["speed_mps"]) == density_speed]
        axis = "n_nodes"
    else:
        sel = [r for r in rows if r["mac_variant"] == mac and int(r["n_nodes"]) == mobility_nodes]
        axis = "speed_mps"
    out: dict[str, dict] = {}
    for proto in sorted({r["protocol"] for r in sel}, key=lambda p: PROTOCOLS.index(p) if p in PROTOCOLS else 99):
        points = sorted({r[axis] for r in sel if r["protocol"] == proto})
        out[proto] = {pt: _mean([r[metric] for r in sel if r["protocol"] == proto and r[axis] == pt])
                      for pt in points}
    return axis, out


def plot_panel(axis: str, means: dict, metric: str, title: str, path: Path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    points = sorted({pt for series in means.values() for pt in series})
    protos = list(means)
    width = 0.8 / max(1, len(protos))
    fig, ax = plt.subplots(figsize=(7, 4))
    for i, proto in enumerate(protos):
        xs = [k + (i - (len(protos) - 1) / 2) * width for k in range(len(points))]
        ys = [means[proto].get(pt, math.nan) for pt in points]
        ax.bar(xs, ys, width, label=proto)
    ax.set_xticks(range(len(points)))
    ax.set_xticklabels([f"{p:g}" for p in points])
    ax.set_xlabel("nodes" if axis == "n_nodes" else "speed (m/s)")
    ax.set_ylabel({"throughput_Bps": "throughput (bytes/s)", "e2ed_s": "mean E2ED (s)", "nrl": "NRL"}[metric])
    ax.set_title(title)
    ax.legend(fontsize=7, ncol=3)
    fig.tight_layout()
    fig.savefig(path, dpi=90)
    plt.close(fig)


def present_families(rows: Sequence[dict], density_speed: float = DENSITY_SPEED,
                     mobility_nodes: int = MOBILITY_NODES) -> tuple[str, ...]:
    """Families with more than one sweep point in ``rows`` (both when neither qualifies)."""
    fams = []
    if len({r["n_nodes"] for r in rows if float(r["speed_mps"]) == density_speed}) > 1:
        fams.append("density")
    if len({r["speed_mps"] for r in rows if int(r["n_nodes"]) == mobility_nodes}) > 1:
        fams.append("mobility")
    return tuple(fams) or ("density", "mobility")


def emit_report(rows: Sequence[dict], out_dir, charts: bool = True, families: Sequence[str] | None = None,
                density_speed: float = DENSITY_SPEED, mobility_nodes: int = MOBILITY_NODES) -> list[Path]:
    """Write ``metrics.csv`` plus one grouped-bar chart per metric, sweep family and MAC variant."""
    if not rows:
        raise InvalidConfig("no rows to report")
    if families is None:
        families = present_families(rows, density_speed, mobility_nodes)
    out = Path(out_dir)
    written = [write_metrics_csv(rows, out)]
    if not charts:
        return written
    for mac in MACS:
        for family in families:
            for metric in METRICS:
                axis, means = family_means(rows, metric, family, mac, density_speed, mobility_nodes)
                if not means:
                    continue
                path = out / f"{metric}_{family}_{mac}.png"
                plot_panel(axis, means, metric, f"{metric} - {family} - {mac}", path)
                written.append(path)
    return written


# -------------------------------------------------------- distance model


def analytics_table(mean: float, variance: float, r_max: float, steps: int, mc_trajectories: int = 0,
                    seed: int = 0) -> list[dict]:
    """Grid of (r, pdf, cdf, efficiency[, mc_cdf]) on [0, r_max]."""
    if steps < 2:
        raise InvalidConfig("steps must be >= 2")
    if not r_max > 0:
        raise InvalidConfig("r_max must be > 0")
    model = GaussianDistanceModel(mean, variance)
    radii = [r_max * k / (steps - 1) for k in range(steps)]
    rows = []
    for r in radii:
        cdf = distance_cdf(model, r)
        rows.append({"r": r, "pdf": distance_pdf(model, r), "cdf": cdf, "efficiency": cdf * 100.0})
    if mc_trajectories > 0:
        mc = monte_carlo_cdf(model, radii, mc_trajectories, RngStream(seed, "analytics.mc"))
        for row, p in zip(rows, mc):
            row["mc_cdf"] = float(p)
    return rows


def analytics_csv(rows: Sequence[dict]) -> str:
    cols = list(rows[0])
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for row in rows:
        w.writerow([f"{row[c]:.9g}" for c in cols])
    return buf.getvalue()
