"""Mission assembly: order the hovering points, plan every leg, stitch the legs.

A mission is flown leg by leg. Each leg gets its own Q-table (state is
position only, so a table is tied to its target). Legs that fail to produce a
path are reported in ``MissionPlan.failed_legs`` instead of raising, so
studies can count them.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from . import _kernels
from .clustering import HoveringPlan
from .errors import ConfigurationError, ConsistencyError, InfeasibleLegError, InfeasibleMissionError
from .gridworld import CellIndex, GridSpace, ObstacleMap, _bfs, check_cell, transition_table
from .mdp_env import CoverageEnv, snap_to_cell
from .qlearning import (
    ConstantEpsilon,
    ExponentialDecay,
    LearningConfig,
    LearningCurve,
    LinearDecay,
    Schedule,
    train,
)
from .seeding import Seed, derive, rng as derive_rng
from .trajectory import Trajectory, concatenate

__all__ = [
    "METHODS",
    "LEARNING_METHODS",
    "DEFAULT_SCHEDULES",
    "ORDERINGS",
    "Trajectory",
    "MissionConfig",
    "MissionPlan",
    "order_targets",
    "shortest_path_oracle",
    "random_walk_baseline",
    "default_start_cell",
    "plan_mission",
]

METHODS = ("qlutp", "qlutp-star", "fixed-eps-ql", "bfs-oracle", "random-walk")
LEARNING_METHODS = ("qlutp", "qlutp-star", "fixed-eps-ql")
ORDERINGS = ("nearest-neighbor", "exact", "given-order")
EXACT_ORDER_LIMIT = 8

DEFAULT_SCHEDULES: dict[str, Schedule] = {
    "qlutp": ExponentialDecay(start=0.9, floor=0.05, rate=0.1),
    "qlutp-star": LinearDecay(start=0.9, floor=0.05, fraction=0.7),
    "fixed-eps-ql": ConstantEpsilon(0.1),
}


class _Graph:
    """Masked transition table of a grid plus cached breadth-first trees."""

    def __init__(self, grid: GridSpace, obstacles: ObstacleMap):
        self.grid = grid
        self.nxt, _ = transition_table(grid, obstacles, mask_obstacles=True)
        self._trees: dict[int, tuple[np.ndarray, np.ndarray]] = {}

    def tree(self, src: int) -> tuple[np.ndarray, np.ndarray]:
        if src not in self._trees:
            self._trees[src] = _bfs(self.nxt, src)
        return self._trees[src]

    def distance(self, a: Sequence[int], b: Sequence[int]) -> int:
        dist, _ = self.tree(self.grid.state_index(a))
        return int(dist[self.grid.state_index(b)])

    def path(self, a: Sequence[int], b: Sequence[int]) -> list[CellIndex] | None:
        src, dst = self.grid.state_index(a), self.grid.state_index(b)
        dist, parent = self.tree(src)
        if dist[dst] < 0:
            return None
        states = [dst]
        while states[-1] != src:
            states.append(int(parent[states[-1]]))
        return [self.grid.cell_of(s) for s in reversed(states)]


def order_targets(
    start_cell: Sequence[int],
    target_cells: Sequence[Sequence[int]],
    strategy: str,
    grid: GridSpace,
    obstacles: ObstacleMap,
    _graph: _Graph | None = None,
) -> list[int]:
    """Visiting order of ``target_cells`` as a permutation of their indices.

    Distances are breadth-first step counts over collision-free moves.
    ``nearest-neighbor`` chains greedily (ties to the lower index), ``exact``
    enumerates every permutation (at most 8 targets; ties to the
    lexicographically first) and ``given-order`` keeps the input order.
    """
    if strategy not in ORDERINGS:
        raise ConfigurationError(f"ordering must be one of {ORDERINGS}, got {strategy!r}")
    if not target_cells:
        raise ConfigurationError("at least one target is required")
    g = _graph or _Graph(grid, obstacles)
    start = check_cell(grid, start_cell)
    targets = [check_cell(grid, t) for t in target_cells]
    nodes = [start, *targets]
    # d[i][j]: steps from node i to node j (node 0 is the start)
    d = np.array([[g.distance(a, b) for b in nodes] for a in nodes], dtype=np.int64)
    for k, t in enumerate(targets, start=1):
        if d[0, k] < 0:
            raise InfeasibleMissionError(f"hovering point {k - 1} at cell {tuple(t)} is unreachable")

    n = len(targets)
    if strategy == "given-order":
        return list(range(n))
    if strategy == "nearest-neighbor":
        order, here, left = [], 0, set(range(1, n + 1))
        while left:
            nxt = min(left, key=lambda j: (d[here, j], j))
            order.append(nxt - 1)
            left.remove(nxt)
            here = nxt
        return order
    if n > EXACT_ORDER_LIMIT:
        raise ConfigurationError(f"exact ordering supports at most {EXACT_ORDER_LIMIT} targets, got {n}")
    best, best_len = None, None
    for perm in itertools.permutations(range(1, n + 1)):
        length = d[0, perm[0]] + sum(d[a, b] for a, b in zip(perm, perm[1:]))
        if best_len is None or length < best_len:
            best, best_len = perm, length
    assert best is not None
    return [p - 1 for p in best]


def tour_length(
    start_cell: Sequence[int],
    target_cells: Sequence[Sequence[int]],
    order: Sequence[int],
    grid: GridSpace,
    obstacles: ObstacleMap,
) -> int:
    """Breadth-first step count of visiting ``target_cells`` in ``order``."""
    g = _Graph(grid, obstacles)
    total, here = 0, check_cell(grid, start_cell)
    for k in order:
        d = g.distance(here, target_cells[k])
        if d < 0:
            raise InfeasibleMissionError(f"hovering point {k} is unreachable")
        total += d
        here = check_cell(grid, target_cells[k])
    return total


def shortest_path_oracle(
    grid: GridSpace, obstacles: ObstacleMap, start: Sequence[int], goal: Sequence[int]
) -> Trajectory | None:
    """Minimum-step trajectory over collision-free moves, or None when unreachable."""
    path = _Graph(grid, obstacles).path(start, goal)
    if path is None:
        return None
    return Trajectory(tuple(path), grid.cell_size_m)


def random_walk_baseline(
    grid: GridSpace,
    obstacles: ObstacleMap,
    start: Sequence[int],
    goal: Sequence[int],
    step_cap: int,
    seed: Seed = None,
    _nxt: np.ndarray | None = None,
) -> Trajectory:
    """Uniformly random collision-free moves until ``goal`` or ``step_cap`` steps.

    A walk that runs out of steps comes back with ``feasible=False``.
    """
    if step_cap < 0:
        raise ConfigurationError(f"step_cap must be >= 0, got {step_cap}")
    nxt = _nxt if _nxt is not None else transition_table(grid, obstacles, mask_obstacles=True)[0]
    src, dst = grid.state_index(start), grid.state_index(goal)
    uniforms = derive_rng(seed, "random-walk").random(int(step_cap))
    states = _kernels.random_walk(nxt, src, dst, uniforms)
    cells = tuple(grid.cell_of(int(s)) for s in states)
    return Trajectory(cells, grid.cell_size_m, feasible=bool(states[-1] == dst))


def default_start_cell(
    grid: GridSpace, obstacles: ObstacleMap, altitude_m: float | None = None
) -> CellIndex:
    """Launch cell: the free in-band cell nearest the origin corner at flight altitude."""
    return snap_to_cell(grid, obstacles, (0.0, 0.0), altitude_m)[0]


@dataclass(frozen=True)
class MissionConfig:
    """Knobs for ``plan_mission``.

    ``schedules`` overrides the exploration schedule per learning method;
    ``learning`` supplies everything else (its own schedule is ignored).
    ``episodes_per_leg`` trains every leg for exactly that many episodes
    instead of extending until the greedy rollout settles.
    """

    learning: LearningConfig = field(default_factory=LearningConfig)
    schedules: dict[str, Schedule] = field(default_factory=lambda: dict(DEFAULT_SCHEDULES))
    ordering: str = "nearest-neighbor"
    obstacle_handling: str = "penalize"
    altitude_m: float | None = None
    coverage_threshold: float = 0.9
    random_walk_cap: int = 1_000_000
    episodes_per_leg: int | None = None
    seed: Seed = 0

    def __post_init__(self) -> None:
        if self.ordering not in ORDERINGS:
            raise ConfigurationError(f"ordering must be one of {ORDERINGS}, got {self.ordering!r}")
        if self.random_walk_cap < 1:
            raise ConfigurationError("random_walk_cap must be >= 1")
        if self.episodes_per_leg is not None and self.episodes_per_leg < 1:
            raise ConfigurationError("episodes_per_leg must be >= 1")
        if not 0 < self.coverage_threshold <= 1:
            raise ConfigurationError("coverage_threshold must be in (0, 1]")

    def schedule_for(self, method: str) -> Schedule:
        try:
            return self.schedules[method]
        except KeyError:
            return DEFAULT_SCHEDULES[method]


@dataclass
class MissionPlan:
    ordered_targets: tuple[CellIndex, ...]
    order: tuple[int, ...]
    method: str
    start_cell: CellIndex
    trajectory: Trajectory | None
    leg_steps: tuple[int | None, ...]
    per_leg_curves: list[LearningCurve] | None = None
    failed_legs: tuple[int, ...] = ()
    coverage_rate: float = float("nan")
    coverage_ok: bool = True
    substituted_targets: tuple[int, ...] = ()
    episodes_used: tuple[int, ...] = ()

    @property
    def feasible(self) -> bool:
        return not self.failed_legs and self.trajectory is not None

    @property
    def steps(self) -> int | None:
        return self.trajectory.steps if self.feasible else None

    @property
    def loss_m(self) -> float:
        return self.trajectory.loss_m if self.feasible else float("nan")


def plan_mission(
    grid: GridSpace,
    obstacles: ObstacleMap,
    plan: HoveringPlan,
    start_cell: Sequence[int] | None = None,
    method: str = "qlutp-star",
    config: MissionConfig | None = None,
) -> MissionPlan:
    """Plan a full open tour through every hovering point of ``plan``.

    Hovering positions snap to the nearest free in-band cell. Legs are
    learned (or solved) independently; leg ``k`` of every method uses the same
    seed so methods are compared on common random numbers.
    """
    if method not in METHODS:
        raise ConfigurationError(f"method must be one of {METHODS}, got {method!r}")
    if plan.n_points == 0:
        raise ConfigurationError("hovering plan has no points")
    config = config or MissionConfig()
    graph = _Graph(grid, obstacles)

    snapped = [snap_to_cell(grid, obstacles, p.position_m, config.altitude_m) for p in plan.points]
    cells = [c for c, _ in snapped]
    substituted = tuple(i for i, (_, sub) in enumerate(snapped) if sub)
    start = (
        default_start_cell(grid, obstacles, config.altitude_m)
        if start_cell is None
        else check_cell(grid, start_cell)
    )
    order = order_targets(start, cells, config.ordering, grid, obstacles, _graph=graph)
    ordered = tuple(cells[k] for k in order)

    env = None
    if method in LEARNING_METHODS:
        env = CoverageEnv(grid, obstacles, config.obstacle_handling)
    learning = replace(config.learning, schedule=config.schedule_for(method)) if env else None

    legs: list[Trajectory] = []
    leg_steps: list[int | None] = []
    curves: list[LearningCurve] = []
    episodes: list[int] = []
    failed: list[int] = []
    here = start
    for k, target in enumerate(ordered):
        leg_seed = derive(config.seed, "leg", k)
        if method == "bfs-oracle":
            path = graph.path(here, target)
            if path is None:
                raise InfeasibleMissionError(f"leg {k} to {tuple(target)} is unreachable")
            leg = Trajectory(tuple(path), grid.cell_size_m)
        elif method == "random-walk":
            leg = random_walk_baseline(
                grid, obstacles, here, target, config.random_walk_cap, leg_seed, _nxt=graph.nxt
            )
        else:
            assert env is not None and learning is not None
            try:
                result = train(
                    env,
                    here,
                    target,
                    replace(learning, seed=leg_seed),
                    total_episodes=config.episodes_per_leg,
                    reachable=True,
                )
            except InfeasibleLegError as exc:
                raise InfeasibleMissionError(f"leg {k}: {exc}") from exc
            curves.append(result.curve)
            episodes.append(len(result.curve))
            leg = result.trajectory or Trajectory((here,), grid.cell_size_m, feasible=False)
        if not leg.feasible:
            failed.append(k)
            leg_steps.append(None)
        else:
            leg_steps.append(leg.steps)
            legs.append(leg)
        here = target

    trajectory = None
    if not failed:
        trajectory = concatenate(legs, grid.cell_size_m)
        trajectory.validate(grid, obstacles)
        ends = tuple(trajectory.cells[i] for i in trajectory.leg_ends)
        if ends != ordered:
            raise ConsistencyError("trajectory does not pass through the hovering points in order")

    return MissionPlan(
        ordered_targets=ordered,
        order=tuple(order),
        method=method,
        start_cell=start,
        trajectory=trajectory,
        leg_steps=tuple(leg_steps),
        per_leg_curves=curves if env else None,
        failed_legs=tuple(failed),
        coverage_rate=plan.coverage_rate,
        coverage_ok=plan.coverage_rate >= config.coverage_threshold,
        substituted_targets=substituted,
        episodes_used=tuple(episodes),
    )
