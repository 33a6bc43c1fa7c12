"""The three studies: coverage vs N, learning convergence, mission loss by method.

Every study writes a per-run CSV whose leading columns are ``RUN_COLUMNS``
plus a summary CSV, and optionally SVG plots drawn from those CSVs. Random
streams are derived from the master seed by name, so any cell of a study can
be re-run on its own and results do not depend on execution order.
"""

from __future__ import annotations

import csv
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterable, Sequence

import numpy as np

from ..clustering import best_of_restarts, generate_users
from ..errors import SwarmCoverError
from ..gridworld import GridSpace, ObstacleMap, _bfs
from ..mdp_env import CoverageEnv
from ..planner import MissionConfig, default_start_cell, plan_mission
from ..qlearning import train
from ..seeding import derive, rng
from ..trajectory import write_trajectory_csv
from . import svg
from .config import (
    build_grid_from,
    build_learning,
    build_obstacles,
    build_schedules,
    config_hash,
    swarm_radius,
)

RUN_COLUMNS = (
    "config_hash",
    "study",
    "scenario",
    "seed",
    "method",
    "N",
    "M",
    "coverage_rate",
    "steps",
    "loss_m",
    "episodes_to_converge",
)


@dataclass
class StudyResult:
    name: str
    files: list[Path] = field(default_factory=list)
    failures: list[str] = field(default_factory=list)
    violations: list[str] = field(default_factory=list)
    summary: list[dict] = field(default_factory=list)
    wall_time_s: float = 0.0

    @property
    def ok(self) -> bool:
        return not self.failures and not self.violations


def _fmt(v: Any) -> Any:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return "" if math.isnan(v) else repr(float(v))
    if isinstance(v, np.integer):
        return int(v)
    return v


def write_csv(path: Path, columns: Sequence[str], rows: Iterable[dict]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(row.get(c)) for c in columns])
    return path


def read_csv(path: Path) -> list[dict[str, str]]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _map(fn: Callable, tasks: list, jobs: int) -> list:
    """Apply ``fn`` to ``tasks``; results come back in task order regardless of ``jobs``."""
    if jobs <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, tasks))


def _plots_enabled(cfg: dict) -> bool:
    return cfg["output"]["format"] == "csv+svg"


# ---------------------------------------------------------------- coverage


def _coverage_task(task: tuple) -> list[dict]:
    cfg, label, seed = task
    master = cfg["experiment"]["master_seed"]
    extent = cfg["grid"]["extent_m"][:2]
    users_cfg = cfg["users"]
    if users_cfg["mode"] == "fixed-count":
        users = generate_users(derive(master, "users", "coverage", label, seed), extent, count=label)
    else:
        users = generate_users(
            derive(master, "users", "coverage", "ppp", seed), extent, intensity=users_cfg["intensity"]
        )
    r_s = swarm_radius(cfg)
    cl = cfg["clustering"]
    clu_seed = derive(master, "clustering", "coverage", str(label), seed)
    rows = []
    for n in sorted(set(cl["candidate_ns"])):
        if n > users.count:
            continue
        # same seed layout as select_hovering_plan(users, ..., seed=clu_seed)
        plan = best_of_restarts(users, n, r_s, cl["restarts"], derive(clu_seed, n), cl["max_iters"])
        rows.append(
            {
                "scenario": label,
                "seed": seed,
                "method": "kmeans",
                "N": n,
                "M": users.count,
                "coverage_rate": plan.coverage_rate,
                "covered_users": sum(p.covered_count for p in plan.points),
            }
        )
    return rows


def run_coverage_sweep(cfg: dict, out: Path) -> StudyResult:
    """Best-of-restarts coverage rate for every (M, N, seed)."""
    t0 = time.perf_counter()
    res = StudyResult("coverage")
    h = config_hash(cfg)
    seeds = range(cfg["experiment"]["seeds"])
    labels = cfg["users"]["counts"] if cfg["users"]["mode"] == "fixed-count" else ["ppp"]
    tasks = [(cfg, label, s) for label in labels for s in seeds]
    rows = [r for chunk in _map(_coverage_task, tasks, cfg["experiment"]["jobs"]) for r in chunk]
    for r in rows:
        r.update(config_hash=h, study="coverage")
    res.files.append(write_csv(out / "coverage.csv", RUN_COLUMNS + ("covered_users",), rows))

    threshold = cfg["clustering"]["coverage_threshold"]
    summary = []
    for label in labels:
        for n in sorted({r["N"] for r in rows if r["scenario"] == label}):
            vals = np.array([r["coverage_rate"] for r in rows if r["scenario"] == label and r["N"] == n])
            summary.append(
                {
                    "config_hash": h,
                    "scenario": label,
                    "N": n,
                    "runs": len(vals),
                    "mean_coverage_rate": float(vals.mean()),
                    "std_coverage_rate": float(vals.std(ddof=1)) if len(vals) > 1 else 0.0,
                    "meets_threshold": bool(vals.mean() >= threshold),
                }
            )
    cols = ("config_hash", "scenario", "N", "runs", "mean_coverage_rate", "std_coverage_rate", "meets_threshold")
    res.files.append(write_csv(out / "coverage_summary.csv", cols, summary))

    selection = []
    for label in labels:
        for s in seeds:
            mine = sorted((r for r in rows if r["scenario"] == label and r["seed"] == s), key=lambda r: r["N"])
            hit = next((r for r in mine if r["coverage_rate"] >= threshold), None)
            best = hit or max(mine, key=lambda r: r["coverage_rate"])
            selection.append(
                {
                    "config_hash": h,
                    "scenario": label,
                    "seed": s,
                    "selected_N": best["N"],
                    "coverage_rate": best["coverage_rate"],
                    "below_threshold": hit is None,
                }
            )
    cols = ("config_hash", "scenario", "seed", "selected_N", "coverage_rate", "below_threshold")
    res.files.append(write_csv(out / "hovering_selection.csv", cols, selection))
    res.summary = summary

    acc = cfg["acceptance"]
    if acc["min_coverage_at_n"] is not None:
        n = acc["coverage_n"]
        vals = [r["coverage_rate"] for r in rows if r["N"] == n]
        mean = float(np.mean(vals)) if vals else float("nan")
        if not mean >= acc["min_coverage_at_n"]:
            res.violations.append(
                f"coverage: mean coverage at N={n} is {mean:.4f} < {acc['min_coverage_at_n']}"
            )
    if _plots_enabled(cfg):
        res.files.append(svg.plot_coverage(out / "coverage_summary.csv", out / "coverage.svg"))
    res.wall_time_s = time.perf_counter() - t0
    return res


# ------------------------------------------------------------- convergence


def pick_leg(
    grid: GridSpace,
    obstacles: ObstacleMap,
    min_steps: int,
    max_steps: int,
    seed,
    tries: int = 10000,
):
    """Random free in-band (start, target, optimal_steps) with BFS distance in range."""
    env = CoverageEnv(grid, obstacles, "mask")
    free = np.flatnonzero(
        (env.next_state >= 0).any(axis=1) & ~env.blocked & _band_mask(grid)
    )
    gen = rng(seed)
    for _ in range(tries):
        a = int(gen.choice(free))
        dist, _ = _bfs(env.masked_next_state, a)
        ok = np.flatnonzero((dist >= min_steps) & (dist <= max_steps))
        if ok.size:
            b = int(gen.choice(ok))
            return grid.cell_of(a), grid.cell_of(b), int(dist[b])
    return None


def _band_mask(grid: GridSpace) -> np.ndarray:
    nz = grid.counts[2]
    band = np.zeros(nz, dtype=bool)
    band[list(grid.band_layers())] = True
    return np.tile(band, grid.counts[0] * grid.counts[1])


def _convergence_task(task: tuple) -> dict:
    cfg, sc = task
    master = cfg["experiment"]["master_seed"]
    conv = cfg["convergence"]
    grid = build_grid_from(cfg)
    obstacles = build_obstacles(cfg, grid, derive(master, "obstacles", "convergence", sc))
    leg = pick_leg(grid, obstacles, conv["min_leg_steps"], conv["max_leg_steps"], derive(master, "scenario", sc))
    if leg is None:
        return {"scenario": sc, "error": f"convergence scenario {sc}: no leg of the requested length"}
    start, target, optimal = leg
    env = CoverageEnv(grid, obstacles, cfg["learning"]["obstacle_handling"])
    schedules = build_schedules(cfg)
    episodes = conv["episodes"]
    runs, curves = [], {}
    for s in range(cfg["experiment"]["seeds"]):
        learn_seed = derive(master, "learning", "convergence", sc, s)
        for method in conv["methods"]:
            lc = build_learning(cfg, learn_seed)
            lc.schedule = schedules[method]
            result = train(env, start, target, lc, total_episodes=episodes, reachable=True)
            curve = result.curve
            conv_ep = curve.converged_episode(optimal)
            tail = curve.steps[-max(1, len(curve) // 4):]
            traj = result.trajectory
            runs.append(
                {
                    "scenario": sc,
                    "seed": s,
                    "method": method,
                    "steps": traj.steps if traj else None,
                    "loss_m": traj.loss_m if traj else None,
                    "episodes_to_converge": conv_ep,
                    "settled": conv_ep < len(curve),
                    "optimal_steps": optimal,
                    "first_episode_steps": int(curve.steps[0]),
                    "final_quartile_mean_steps": float(tail.mean()),
                    "schedule": curve.schedule,
                    "start_cell": " ".join(map(str, start)),
                    "target_cell": " ".join(map(str, target)),
                }
            )
            curves.setdefault(method, []).append(curve)
    return {"scenario": sc, "runs": runs, "curves": curves, "optimal": optimal}


def run_convergence_study(cfg: dict, out: Path) -> StudyResult:
    """Per-episode learning curves of each schedule on matched scenarios and seeds."""
    t0 = time.perf_counter()
    res = StudyResult("convergence")
    h = config_hash(cfg)
    conv = cfg["convergence"]
    tasks = [(cfg, sc) for sc in range(conv["scenarios"])]
    outcomes = _map(_convergence_task, tasks, cfg["experiment"]["jobs"])
    runs, curves, optima = [], {m: [] for m in conv["methods"]}, []
    for o in outcomes:
        if "error" in o:
            res.failures.append(o["error"])
            continue
        runs.extend(o["runs"])
        optima.append(o["optimal"])
        for m, cs in o["curves"].items():
            curves[m].extend(cs)
    for r in runs:
        r.update(config_hash=h, study="convergence")
    extra = (
        "settled",
        "optimal_steps",
        "first_episode_steps",
        "final_quartile_mean_steps",
        "schedule",
        "start_cell",
        "target_cell",
    )
    res.files.append(write_csv(out / "convergence.csv", RUN_COLUMNS + extra, runs))

    curve_rows = []
    for m, cs in curves.items():
        if not cs:
            continue
        steps = np.stack([c.steps for c in cs]).astype(float)
        reward = np.stack([c.total_reward for c in cs])
        eps = np.stack([c.epsilon for c in cs])
        reached = np.stack([c.reached for c in cs]).astype(float)
        mean_steps, mean_reward = steps.mean(axis=0), reward.mean(axis=0)
        mean_eps, reach_rate = eps.mean(axis=0), reached.mean(axis=0)
        for ep in range(steps.shape[1]):
            curve_rows.append(
                {
                    "config_hash": h,
                    "method": m,
                    "episode": ep,
                    "mean_steps": mean_steps[ep],
                    "mean_reward": mean_reward[ep],
                    "mean_epsilon": mean_eps[ep],
                    "reach_rate": reach_rate[ep],
                    "mean_optimal_steps": float(np.mean(optima)),
                }
            )
    cols = ("config_hash", "method", "episode", "mean_steps", "mean_reward", "mean_epsilon", "reach_rate", "mean_optimal_steps")
    res.files.append(write_csv(out / "convergence_curves.csv", cols, curve_rows))

    summary = []
    for m in conv["methods"]:
        mine = [r for r in runs if r["method"] == m]
        if not mine:
            continue
        summary.append(
            {
                "config_hash": h,
                "method": m,
                "runs": len(mine),
                "mean_episodes_to_converge": float(np.mean([r["episodes_to_converge"] for r in mine])),
                "unsettled_runs": sum(not r["settled"] for r in mine),
                "mean_final_quartile_steps": float(np.mean([r["final_quartile_mean_steps"] for r in mine])),
                "mean_optimal_steps": float(np.mean([r["optimal_steps"] for r in mine])),
            }
        )
    cols = ("config_hash", "method", "runs", "mean_episodes_to_converge", "unsettled_runs", "mean_final_quartile_steps", "mean_optimal_steps")
    res.files.append(write_csv(out / "convergence_summary.csv", cols, summary))
    res.summary = summary

    if cfg["acceptance"]["convergence_ordering"]:
        res.violations.extend(convergence_ordering_violations(summary))
    if _plots_enabled(cfg):
        res.files.append(svg.plot_convergence(out / "convergence_curves.csv", out / "convergence.svg"))
    res.wall_time_s = time.perf_counter() - t0
    return res


def convergence_ordering_violations(summary: list[dict]) -> list[str]:
    by = {r["method"]: float(r["mean_episodes_to_converge"]) for r in summary}
    if "qlutp-star" in by and "fixed-eps-ql" in by and not by["qlutp-star"] < by["fixed-eps-ql"]:
        return [
            f"convergence: qlutp-star mean episodes {by['qlutp-star']:.1f} "
            f"not below fixed-eps-ql {by['fixed-eps-ql']:.1f}"
        ]
    return []


# -------------------------------------------------------------------- loss


def _loss_task(task: tuple) -> dict:
    cfg, seed = task
    master = cfg["experiment"]["master_seed"]
    loss = cfg["loss"]
    grid = build_grid_from(cfg)
    obstacles = build_obstacles(cfg, grid, derive(master, "obstacles", "loss", seed))
    extent = cfg["grid"]["extent_m"][:2]
    users = generate_users(derive(master, "users", "loss", seed), extent, count=loss["users"])
    r_s = swarm_radius(cfg)
    cl = cfg["clustering"]
    pl = cfg["planner"]
    learning = build_learning(cfg)
    rows, failures, trajectories = [], [], []
    for n in loss["ns"]:
        if n > users.count:
            failures.append(f"loss: N={n} exceeds the {users.count} users of seed {seed}")
            continue
        plan = best_of_restarts(
            users, n, r_s, cl["restarts"], derive(master, "clustering", "loss", n, seed), cl["max_iters"]
        )
        mission_cfg = MissionConfig(
            learning=learning,
            schedules=build_schedules(cfg),
            ordering=pl["ordering"],
            obstacle_handling=cfg["learning"]["obstacle_handling"],
            altitude_m=cfg["radio"]["altitude_m"],
            coverage_threshold=cl["coverage_threshold"],
            random_walk_cap=loss["random_walk_cap"],
            episodes_per_leg=loss["episodes_per_leg"],
            seed=derive(master, "learning", "loss", n, seed),
        )
        for method in pl["methods"]:
            try:
                mp = plan_mission(grid, obstacles, plan, pl["start_cell"], method, mission_cfg)
            except SwarmCoverError as exc:
                failures.append(f"loss: N={n} seed={seed} method={method}: {exc}")
                continue
            rows.append(
                {
                    "scenario": n,
                    "seed": seed,
                    "method": method,
                    "N": n,
                    "M": users.count,
                    "coverage_rate": plan.coverage_rate,
                    "steps": mp.steps,
                    "loss_m": mp.loss_m,
                    "episodes_to_converge": sum(mp.episodes_used) if mp.episodes_used else None,
                    "feasible": mp.feasible,
                    "failed_legs": len(mp.failed_legs),
                    "extended": any(c.extended for c in mp.per_leg_curves or []),
                    "coverage_ok": mp.coverage_ok,
                    "substituted_targets": len(mp.substituted_targets),
                    "leg_steps": " ".join("" if s is None else str(s) for s in mp.leg_steps),
                }
            )
            if seed == 0 and mp.trajectory is not None:
                trajectories.append((n, method, grid, mp.trajectory))
    return {"rows": rows, "failures": failures, "trajectories": trajectories}


def run_loss_comparison(cfg: dict, out: Path) -> StudyResult:
    """Mission loss of every planning method for each hovering-point count N."""
    t0 = time.perf_counter()
    res = StudyResult("loss")
    h = config_hash(cfg)
    tasks = [(cfg, s) for s in range(cfg["experiment"]["seeds"])]
    outcomes = _map(_loss_task, tasks, cfg["experiment"]["jobs"])
    rows = []
    for o in outcomes:
        rows.extend(o["rows"])
        res.failures.extend(o["failures"])
        for n, method, grid, traj in o["trajectories"]:
            (out / "trajectories").mkdir(parents=True, exist_ok=True)
            write_trajectory_csv(out / "trajectories" / f"N{n}_{method}.csv", grid, traj)
    for r in rows:
        r.update(config_hash=h, study="loss")
    extra = ("feasible", "failed_legs", "extended", "coverage_ok", "substituted_targets", "leg_steps")
    res.files.append(write_csv(out / "loss.csv", RUN_COLUMNS + extra, rows))

    summary = summarize_loss(rows, cfg["planner"]["methods"])
    for r in summary:
        r["config_hash"] = h
    cols = ("config_hash", "N", "method", "converged_rows", "mean_loss_m", "std_loss_m", "infeasible_runs")
    res.files.append(write_csv(out / "loss_summary.csv", cols, summary))
    res.summary = summary
    if cfg["acceptance"]["loss_ordering"]:
        res.violations.extend(loss_ordering_violations(summary))
    if _plots_enabled(cfg):
        res.files.append(svg.plot_loss(out / "loss_summary.csv", out / "loss.svg"))
    res.wall_time_s = time.perf_counter() - t0
    return res


def summarize_loss(rows: list[dict], methods: Sequence[str]) -> list[dict]:
    """Seed-averaged loss per (N, method) over converged rows.

    A (N, seed) row counts as converged when every method produced a complete
    trajectory, so all methods are averaged over the same missions.
    """
    summary = []
    for n in sorted({r["N"] for r in rows}):
        by_seed: dict[int, dict[str, dict]] = {}
        for r in rows:
            if r["N"] == n:
                by_seed.setdefault(r["seed"], {})[r["method"]] = r
        good = [
            s for s, ms in sorted(by_seed.items())
            if all(m in ms and ms[m]["feasible"] for m in methods)
        ]
        for m in methods:
            vals = np.array([by_seed[s][m]["loss_m"] for s in good], dtype=float)
            summary.append(
                {
                    "N": n,
                    "method": m,
                    "converged_rows": len(good),
                    "mean_loss_m": float(vals.mean()) if len(vals) else float("nan"),
                    "std_loss_m": float(vals.std(ddof=1)) if len(vals) > 1 else 0.0,
                    "infeasible_runs": sum(
                        1 for ms in by_seed.values() if m in ms and not ms[m]["feasible"]
                    ),
                }
            )
    return summary


LOSS_ORDER = ("bfs-oracle", "qlutp-star", "fixed-eps-ql", "random-walk")


def loss_ordering_violations(summary: list[dict]) -> list[str]:
    """Check loss is non-decreasing in N per method and ordered across methods per N."""
    problems = []
    table = {(int(r["N"]), r["method"]): float(r["mean_loss_m"]) for r in summary}
    ns = sorted({n for n, _ in table})
    methods = sorted({m for _, m in table})
    for m in methods:
        series = [table[(n, m)] for n in ns if (n, m) in table]
        for (a, b), (na, nb) in zip(zip(series, series[1:]), zip(ns, ns[1:])):
            if not b >= a:
                problems.append(f"loss: {m} mean loss drops from N={na} ({a:.1f}) to N={nb} ({b:.1f})")
    present = [m for m in LOSS_ORDER if m in methods]
    for n in ns:
        for lo, hi in zip(present, present[1:]):
            a, b = table.get((n, lo)), table.get((n, hi))
            if a is None or b is None:
                continue
            if not a <= b:
                problems.append(f"loss: N={n} {lo} ({a:.1f}) exceeds {hi} ({b:.1f})")
    return problems


# --------------------------------------------------------------------- all

STUDIES = {
    "coverage": run_coverage_sweep,
    "convergence": run_convergence_study,
    "loss": run_loss_comparison,
}


def run_studies(cfg: dict, out: Path, names: Sequence[str]) -> list[StudyResult]:
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(json.dumps(cfg, indent=2, sort_keys=True) + "\n")
    results = [STUDIES[name](cfg, out) for name in names]
    # wall-clock times vary run to run, so they stay out of the CSVs
    timings = {r.name: round(r.wall_time_s, 3) for r in results}
    (out / "timings.json").write_text(json.dumps(timings, indent=2) + "\n")
    return results
