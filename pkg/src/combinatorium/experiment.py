"""Replication experiment runs, metrics sampling and ensemble summaries."""

from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from . import biokit, snapshot
from .config import RunConfig
from .engine import SimConfig, Simulation
from .opcodes import OPCODES

BASE_COLUMNS = ["time", "event_count", "ribosome_count", "factory_count",
                "free_enzyme_count", "total_mass", "injected_mass"]
FREE_COLUMNS = [f"free_{op.name}" for op in OPCODES] + [f"free_obj{k}" for k in range(4)]
COLUMNS = BASE_COLUMNS + FREE_COLUMNS


def metrics_row(sim: Simulation, t: float) -> dict:
    w = sim.world
    c = biokit.census(w)
    rep = sim.replenisher
    rep.update()
    row = {
        "time": f"{t:.6f}",
        "event_count": sim.event_count,
        "ribosome_count": c.ribosomes,
        "factory_count": c.factories,
        "free_enzyme_count": c.free_enzymes,
        "total_mass": w.total_mass(),
        "injected_mass": rep.spawned_mass,
    }
    for op in OPCODES:
        row[f"free_{op.name}"] = rep.counts[("op", op.name)]
    for k in range(4):
        row[f"free_obj{k}"] = rep.counts[("obj", k)]
    return row


def rows_to_csv(rows: list[dict], columns=COLUMNS) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def build_simulation(cfg: RunConfig, seed: int) -> Simulation:
    spec = cfg.experiment_spec()
    world = biokit.setup_experiment(spec, seed)
    targets = biokit.replenish_targets(spec) if cfg.replenish.enabled else {}
    sim_cfg = SimConfig(D=cfg.world.D, seed=seed, max_time=cfg.horizon.time,
                        max_events=cfg.horizon.events, replenish=targets,
                        max_cost=cfg.max_cost)
    return Simulation(world, sim_cfg)


@dataclass
class RunResult:
    seed: int
    rows: list
    csv_path: str | None = None
    snapshot_path: str | None = None


def run_single(cfg: RunConfig, seed: int, out_dir: str | Path | None = None,
               progress=None) -> RunResult:
    sim = build_simulation(cfg, seed)
    rows: list[dict] = []

    def sample(s: Simulation, t: float):
        rows.append(metrics_row(s, t))
        if progress:
            progress(seed, rows[-1])

    horizon = cfg.horizon.time
    sim.run(until=horizon, max_events=cfg.horizon.events,
            sample_dt=cfg.sample_dt, on_sample=sample)
    # close with the state at the end of the run unless it was just sampled
    if not rows or float(rows[-1]["time"]) != round(sim.now, 6):
        rows.append(metrics_row(sim, sim.now))
    result = RunResult(seed, rows)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        csv_path = out / f"run_seed{seed}.csv"
        csv_path.write_text(rows_to_csv(rows))
        snap_path = out / f"snapshot_seed{seed}.txt"
        snapshot.save(sim.world, snap_path)
        result.csv_path, result.snapshot_path = str(csv_path), str(snap_path)
    return result


def _mean_sd(values: list[float]) -> tuple[float, float]:
    n = len(values)
    mean = sum(values) / n
    if n < 2:
        return mean, 0.0
    var = sum((v - mean) ** 2 for v in values) / (n - 1)
    return mean, math.sqrt(var)


SUMMARY_COLUMNS = ["time", "runs", "ribosome_mean", "ribosome_sd", "factory_mean",
                   "factory_sd", "ribosome_increase_mean", "ribosome_increase_sd",
                   "factory_increase_mean", "factory_increase_sd"]


def summarize(results: list[RunResult]) -> list[dict]:
    """Per-interval mean and sample standard deviation across runs."""
    series = [r.rows for r in results]
    length = min(len(s) for s in series)
    out = []
    for i in range(length):
        rib = [float(s[i]["ribosome_count"]) for s in series]
        fac = [float(s[i]["factory_count"]) for s in series]
        drib = [float(s[i]["ribosome_count"]) - float(s[0]["ribosome_count"]) for s in series]
        dfac = [float(s[i]["factory_count"]) - float(s[0]["factory_count"]) for s in series]
        row = {"time": series[0][i]["time"], "runs": len(series)}
        for name, vals in (("ribosome", rib), ("factory", fac),
                           ("ribosome_increase", drib), ("factory_increase", dfac)):
            m, sd = _mean_sd(vals)
            row[f"{name}_mean"] = f"{m:.6f}"
            row[f"{name}_sd"] = f"{sd:.6f}"
        out.append(row)
    return out


def _worker(args):
    cfg, seed, out_dir = args
    return run_single(cfg, seed, out_dir)


def run_ensemble(cfg: RunConfig, seeds: list[int], out_dir: str | Path,
                 jobs: int | None = None) -> tuple[list[RunResult], str]:
    """Run one world per seed (in parallel processes) and write a summary CSV."""
    jobs = jobs if jobs is not None else cfg.jobs
    if not jobs:
        jobs = os.cpu_count() or 1
    jobs = max(1, min(jobs, len(seeds)))
    tasks = [(cfg, s, out_dir) for s in seeds]
    if jobs == 1:
        results = [_worker(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_worker, tasks))
    summary = summarize(results)
    path = Path(out_dir) / "summary.csv"
    path.write_text(rows_to_csv(summary, SUMMARY_COLUMNS))
    return results, str(path)
