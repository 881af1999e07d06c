"""Benchmark orchestration: trial seeding, batches, summaries, histograms."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable, Sequence

import numpy as np

from .coloring import ColoringProblem, solve_coloring
from .engine import ChannelModel, StopCondition
from .hw import solve_hw_coloring, solve_hw_sat
from .sat import CnfProblem, ProbSatParams, sequential_probsat, solve_sat_network

SAT_CONFIGS = ("sequential", "ideal", "lossy")


def trial_seed(master: int, *key: int) -> int:
    """Stable per-trial seed derived from the master seed and trial key."""
    return int(np.random.SeedSequence([int(master), *map(int, key)]).generate_state(1)[0])


def log2_histogram(values: Iterable[float]) -> dict:
    """Counts in base-2 bins ``[1,2), [2,4), ...`` up to the largest value.

    Values below 1 fall into the first bin; non-finite values are skipped.
    """
    vals = np.array([v for v in values if v is not None and math.isfinite(v)], dtype=float)
    if len(vals) == 0:
        return {"edges": [], "counts": []}
    top = max(1, int(math.floor(math.log2(max(vals.max(), 1.0)))) + 1)
    edges = [float(2**k) for k in range(top + 1)]
    idx = np.floor(np.log2(np.maximum(vals, 1.0))).astype(int)
    counts = np.bincount(idx, minlength=top)[:top]
    return {"edges": edges, "counts": [int(c) for c in counts]}


def finite_median(values: Sequence[float]) -> float | None:
    """Median with unsolved trials counted as infinite; None if that is infinite."""
    if not len(values):
        return None
    m = float(np.median(np.asarray(values, dtype=float)))
    return m if math.isfinite(m) else None


def run_tasks(fn: Callable, tasks: list, workers: int = 1) -> list:
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks, chunksize=max(1, len(tasks) // (4 * workers))))


def _num(x: float) -> float | None:
    return x if x is not None and math.isfinite(x) else None


# --------------------------------------------------------------------------
# SAT


def sat_trial(task: dict) -> dict:
    p: CnfProblem = task["problem"]
    cfg = task["config"]
    seed = task["seed"]
    row = {"instance": task["instance"], "config": cfg, "trial": task["trial"], "seed": seed}
    if cfg == "sequential":
        rep = sequential_probsat(p, ProbSatParams(task["x"], task["y"], task["max_flips"], seed))
        row.update(flips=rep.flips, cycles=_num(rep.cycles), converged=rep.solved)
        return row
    stop = StopCondition(task["max_cycles"], task["check_interval"])
    if cfg == "hw":
        rep = solve_hw_sat(p, stop, seed, band=task["band"])
    else:
        if cfg == "ideal":
            ch = ChannelModel.ideal()
        else:
            ch = ChannelModel.lossy(task["loss_prob"], task["delay_frac"], task.get("delay_ref", "mean"))
        rep = solve_sat_network(p, ch, stop, seed, band=task["band"])
    row.update(flips=rep.flips, cycles=_num(rep.cycles_to_solution), converged=rep.converged)
    return row


def summarize(rows: list[dict], hist: bool = False) -> dict:
    out = {}
    for cfg in sorted({r["config"] for r in rows}):
        sel = [r for r in rows if r["config"] == cfg]
        flips = [r["flips"] if r["converged"] else math.inf for r in sel]
        cycles = [r["cycles"] if r["converged"] else math.inf for r in sel]
        solved = sum(r["converged"] for r in sel)
        s = {
            "trials": len(sel),
            "solved": solved,
            "solve_rate": solved / len(sel),
            "median_flips": finite_median(flips),
            "median_cycles": finite_median(cycles),
        }
        if hist:
            s["flips_histogram"] = log2_histogram(f for f in flips)
            s["cycles_histogram"] = log2_histogram(c for c in cycles)
        out[cfg] = s
    return out


def benchmark_sat(instances: Sequence[tuple[str, CnfProblem]], trials: int = 1,
                  configs: Sequence[str] = SAT_CONFIGS, seed: int = 0, *,
                  x: float = 1.0, y: float = 2.06, max_flips: int = 10**6,
                  max_cycles: float = 1e6, check_interval: float = 20.0,
                  loss_prob: float = 0.1, delay_frac: float = 0.1,
                  band=(0.9, 1.1), workers: int = 1, hist: bool = False) -> dict:
    """Flips and cycles to solution per (instance, config, trial).

    Every config sees the same trial seeds, so sequential, ideal and lossy
    rows for a trial are directly comparable.
    """
    if not instances:
        raise ValueError("need at least one instance")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    for cfg in configs:
        if cfg not in SAT_CONFIGS + ("hw",):
            raise ValueError(f"unknown config {cfg!r}")
    tasks = []
    for ii, (name, p) in enumerate(instances):
        for cfg in configs:
            for t in range(trials):
                tasks.append(dict(problem=p, instance=name, config=cfg, trial=t,
                                  seed=trial_seed(seed, ii, t), x=x, y=y,
                                  max_flips=max_flips, max_cycles=max_cycles,
                                  check_interval=check_interval, loss_prob=loss_prob,
                                  delay_frac=delay_frac, band=band))
    rows = run_tasks(sat_trial, tasks, workers)
    order = {c: i for i, c in enumerate(configs)}
    names = {name: i for i, (name, _) in enumerate(instances)}
    rows.sort(key=lambda r: (names[r["instance"]], order[r["config"]], r["trial"]))
    summary = summarize(rows, hist)
    ratios = {}
    seq = summary.get("sequential", {}).get("median_flips")
    ideal = summary.get("ideal", {})
    lossy = summary.get("lossy", {})
    if seq and ideal.get("median_cycles"):
        ratios["ideal_cycles_over_sequential_flips"] = ideal["median_cycles"] / seq
    if ideal.get("median_flips") and lossy.get("median_flips"):
        ratios["lossy_flips_over_ideal_flips"] = lossy["median_flips"] / ideal["median_flips"]
    return {"rows": rows, "summary": summary, "ratios": ratios}


# --------------------------------------------------------------------------
# coloring


def coloring_trial(task: dict) -> dict:
    p: ColoringProblem = task["problem"]
    stop = StopCondition(task["max_cycles"], task["check_interval"])
    if task["config"] == "hw":
        rep = solve_hw_coloring(p, stop, task["seed"], band=task["band"], channel=task["channel"])
    else:
        rep = solve_coloring(p, task["channel"], stop, task["seed"], band=task["band"])
    proper = p.is_proper(rep.final_values) if rep.converged else False
    return {
        "graph": task["graph"], "k": p.k, "config": task["config"], "trial": task["trial"],
        "seed": task["seed"], "cycles": _num(rep.cycles_to_solution),
        "converged": rep.converged, "proper": proper,
        "colors_used": rep.extra["colors_used"],
    }


def benchmark_coloring(graphs: Sequence[tuple[str, ColoringProblem]], trials: int = 1,
                       seed: int = 0, *, hw: bool = False, max_cycles: float = 1e5,
                       check_interval: float = 20.0, channel: ChannelModel | None = None,
                       band=(0.9, 1.1), workers: int = 1) -> list[dict]:
    tasks = [dict(problem=p, graph=name, trial=t, seed=trial_seed(seed, gi, t),
                  config="hw" if hw else "network", max_cycles=max_cycles,
                  check_interval=check_interval, channel=channel, band=band)
             for gi, (name, p) in enumerate(graphs) for t in range(trials)]
    return run_tasks(coloring_trial, tasks, workers)
