"""Tabular Q-learning planner for a single leg.

The table holds one row per flat grid state and one column per action. It
starts at zero; entries for moves that are never legal stay at zero and are
never chosen because every selection is restricted to the legal set.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence, Union

import numpy as np

from . import _kernels
from .errors import ConfigurationError, DeadEndError, InfeasibleLegError, PolicyNotConvergedError
from .gridworld import ACTIONS, N_ACTIONS, GridSpace, _bfs
from .mdp_env import CoverageEnv, step_reward
from .seeding import Seed, rng as derive_rng
from .trajectory import Trajectory


@dataclass(frozen=True)
class ConstantEpsilon:
    epsilon: float = 0.1
    name: str = "constant"

    def __post_init__(self) -> None:
        _check_eps(self.epsilon, "epsilon")


@dataclass(frozen=True)
class LinearDecay:
    """Falls linearly from ``start`` to ``floor`` over ``fraction`` of the run."""

    start: float = 0.9
    floor: float = 0.05
    fraction: float = 0.7
    name: str = "linear"

    def __post_init__(self) -> None:
        _check_eps(self.start, "start")
        _check_eps(self.floor, "floor")
        if self.floor > self.start:
            raise ConfigurationError("linear decay floor exceeds its start value")
        if not self.fraction > 0:
            raise ConfigurationError("linear decay fraction must be positive")


@dataclass(frozen=True)
class ExponentialDecay:
    start: float = 0.9
    floor: float = 0.05
    rate: float = 0.1
    name: str = "exponential"

    def __post_init__(self) -> None:
        _check_eps(self.start, "start")
        _check_eps(self.floor, "floor")
        if self.rate < 0:
            raise ConfigurationError("exponential decay rate must be non-negative")


Schedule = Union[ConstantEpsilon, LinearDecay, ExponentialDecay]


def _check_eps(value: float, what: str) -> None:
    if not 0.0 < value < 1.0:
        raise ConfigurationError(f"{what} must lie in (0, 1), got {value}")


def epsilon_at(schedule: Schedule, episode: int, episodes: int | None = None) -> float:
    """Exploration probability for ``episode`` (0-based) of a run of ``episodes``."""
    if episode < 0:
        raise ConfigurationError(f"episode index must be >= 0, got {episode}")
    if isinstance(schedule, ConstantEpsilon):
        return schedule.epsilon
    if isinstance(schedule, LinearDecay):
        if episodes is None or episodes < 1:
            raise ConfigurationError("linear decay needs the run length")
        span = schedule.fraction * episodes
        return max(schedule.floor, schedule.start - (schedule.start - schedule.floor) * episode / span)
    if isinstance(schedule, ExponentialDecay):
        return max(schedule.floor, schedule.start * math.exp(-schedule.rate * episode))
    raise ConfigurationError(f"unknown schedule {schedule!r}")


@dataclass
class QTable:
    grid: GridSpace
    values: np.ndarray = field(repr=False)

    @classmethod
    def zeros(cls, grid: GridSpace) -> "QTable":
        return cls(grid, np.zeros((grid.n_cells, N_ACTIONS)))

    def row(self, cell: Sequence[int] | int) -> np.ndarray:
        s = cell if isinstance(cell, (int, np.integer)) else self.grid.state_index(cell)
        return self.values[s]

    def to_json(self) -> dict:
        """Non-zero rows keyed by flat cell index."""
        rows = {
            str(s): self.values[s].tolist()
            for s in np.flatnonzero(np.any(self.values != 0.0, axis=1))
        }
        return {"shape": list(self.grid.counts), "actions": list(ACTIONS), "rows": rows}

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json()))


def select_action(
    q: QTable,
    cell: Sequence[int] | int,
    legal_actions: Sequence[int],
    epsilon: float,
    rng: np.random.Generator,
) -> int:
    """Epsilon-greedy over ``legal_actions``; greedy ties go to the earlier action."""
    if not legal_actions:
        raise DeadEndError(f"no legal action from {cell}")
    legal = sorted(int(a) for a in legal_actions)
    if rng.random() < epsilon:
        return legal[min(int(rng.random() * len(legal)), len(legal) - 1)]
    row = q.row(cell)
    return max(legal, key=lambda a: (row[a], -a))


def update(
    q: QTable,
    cell: Sequence[int] | int,
    action: int,
    reward: float,
    next_cell: Sequence[int] | int,
    next_legal_actions: Sequence[int],
    alpha: float,
    gamma: float,
    terminal: bool = False,
) -> float:
    """One Q-learning backup; returns the temporal-difference error."""
    row = q.row(cell)
    if terminal or not next_legal_actions:
        boot = 0.0
    else:
        nrow = q.row(next_cell)
        boot = max(nrow[int(a)] for a in next_legal_actions)
    delta = reward + gamma * boot - row[action]
    row[action] += alpha * delta
    return float(delta)


# "reach": stop extending once the greedy rollout reaches the target.
# "stable": additionally require the rollout to be unchanged by ``confirm_blocks``
# further blocks.
STOP_RULES = ("reach", "stable")


@dataclass
class LearningConfig:
    learning_rate: float = 0.6
    discount: float = 0.6
    episodes: int = 40
    schedule: Schedule = field(default_factory=LinearDecay)
    max_steps_per_episode: int | None = None
    seed: Seed = 0
    auto_extend: bool = True
    max_episodes: int = 50000
    stop_rule: str = "stable"
    confirm_blocks: int = 1

    def __post_init__(self) -> None:
        if not 0.0 < self.learning_rate <= 1.0:
            raise ConfigurationError(f"learning_rate must be in (0, 1], got {self.learning_rate}")
        if not 0.0 <= self.discount <= 1.0:
            raise ConfigurationError(f"discount must be in [0, 1], got {self.discount}")
        if self.episodes < 1:
            raise ConfigurationError(f"episodes must be >= 1, got {self.episodes}")
        if self.max_steps_per_episode is not None and self.max_steps_per_episode < 1:
            raise ConfigurationError("max_steps_per_episode must be >= 1")
        if self.stop_rule not in STOP_RULES:
            raise ConfigurationError(f"stop_rule must be one of {STOP_RULES}, got {self.stop_rule!r}")

    def step_cap(self, grid: GridSpace) -> int:
        if self.max_steps_per_episode is not None:
            return self.max_steps_per_episode
        return 4 * sum(grid.counts)


@dataclass
class LearningCurve:
    steps: np.ndarray
    total_reward: np.ndarray
    epsilon: np.ndarray
    reached: np.ndarray
    schedule: str = ""
    extended: bool = False

    def __len__(self) -> int:
        return len(self.steps)

    def records(self) -> list[tuple[int, int, float, float, bool]]:
        return [
            (i, int(s), float(r), float(e), bool(h))
            for i, (s, r, e, h) in enumerate(
                zip(self.steps, self.total_reward, self.epsilon, self.reached)
            )
        ]

    def converged_episode(self, optimal_steps: int, tolerance: float = 0.1, window: int = 5) -> int:
        """First episode from which ``window`` consecutive episodes reach the target
        within ``(1 + tolerance) * optimal_steps``. Returns ``len(self)`` if never."""
        ok = self.reached & (self.steps <= (1.0 + tolerance) * optimal_steps)
        run = 0
        for i, good in enumerate(ok):
            run = run + 1 if good else 0
            if run == window:
                return i - window + 1
        return len(self)


@dataclass
class TrainResult:
    q: QTable
    curve: LearningCurve
    trajectory: Trajectory | None


def _run_block(env, q, start, target, eps, config, gen, compiled=True):
    cap = config.step_cap(env.grid)
    n = len(eps)
    uniforms = gen.random((n, cap, 2))
    steps = np.zeros(n, dtype=np.int64)
    rewards = np.zeros(n)
    reached = np.zeros(n, dtype=np.bool_)
    dl = env.cell_size_m
    fn = _kernels.run_episodes if compiled else _kernels.run_episodes.py_func
    fn(
        q.values,
        env.next_state,
        env.blocked,
        start,
        target,
        np.asarray(eps, dtype=float),
        float(config.learning_rate),
        float(config.discount),
        step_reward(dl, False, False),
        step_reward(dl, True, False),
        step_reward(dl, False, True),
        uniforms,
        steps,
        rewards,
        reached,
    )
    return steps, rewards, reached


def train(
    env: CoverageEnv,
    start: Sequence[int],
    target: Sequence[int],
    config: LearningConfig | None = None,
    total_episodes: int | None = None,
    reachable: bool | None = None,
    compiled: bool = True,
) -> TrainResult:
    """Learn a leg from ``start`` to ``target``.

    By default runs ``config.episodes`` episodes and, with ``auto_extend``,
    keeps adding blocks of the same size until the greedy rollout settles
    (see ``STOP_RULES``) or ``max_episodes`` is spent. ``total_episodes``
    instead runs exactly that many episodes with no stopping rule, which is
    what learning-curve comparisons need. The exploration schedule is always
    indexed by the global episode number over a horizon of ``config.episodes``.

    ``reachable`` skips the breadth-first precheck when the caller already
    knows the answer.
    """
    config = config or LearningConfig()
    state = env.reset(start, target)
    grid = env.grid
    if reachable is None:
        dist, _ = _bfs(env.masked_next_state, grid.state_index(state.agent_cell))
        reachable = bool(dist[grid.state_index(state.target_cell)] >= 0)
    if not reachable:
        raise InfeasibleLegError(
            f"target {tuple(state.target_cell)} unreachable from {tuple(state.agent_cell)}"
        )

    q = QTable.zeros(grid)
    gen = derive_rng(config.seed, "learning")
    s0, t0 = grid.state_index(state.agent_cell), grid.state_index(state.target_cell)
    cap = config.step_cap(grid)
    budget = config.max_episodes if total_episodes is None else int(total_episodes)
    parts: list[tuple[np.ndarray, ...]] = []
    done = 0
    trajectory = previous = None
    unchanged = 0
    while done < budget:
        n = min(config.episodes, budget - done)
        eps = np.array([epsilon_at(config.schedule, done + i, config.episodes) for i in range(n)])
        if state.terminal:
            parts.append((np.zeros(n, np.int64), np.zeros(n), np.ones(n, np.bool_), eps))
        else:
            parts.append((*_run_block(env, q, s0, t0, eps, config, gen, compiled), eps))
        done += n
        if total_episodes is not None:
            continue
        trajectory = _try_rollout(q, env, state, cap)
        if state.terminal:  # zero-length leg: nothing to learn
            break
        if trajectory is not None and previous is not None and previous.cells == trajectory.cells:
            unchanged += 1
        else:
            unchanged = 0
        settled = trajectory is not None and (
            config.stop_rule == "reach" or unchanged >= config.confirm_blocks
        )
        if settled or not config.auto_extend:
            break
        previous = trajectory
    if total_episodes is not None:
        trajectory = _try_rollout(q, env, state, cap)

    curve = LearningCurve(
        np.concatenate([p[0] for p in parts]),
        np.concatenate([p[1] for p in parts]),
        np.concatenate([p[3] for p in parts]),
        np.concatenate([p[2] for p in parts]),
        getattr(config.schedule, "name", ""),
        done > config.episodes,
    )
    return TrainResult(q, curve, trajectory)


def _try_rollout(q, env, state, cap):
    try:
        return greedy_rollout(q, env, state.agent_cell, state.target_cell, cap)
    except (PolicyNotConvergedError, DeadEndError):
        return None


def greedy_rollout(
    q: QTable,
    env: CoverageEnv,
    start: Sequence[int],
    target: Sequence[int],
    step_cap: int | None = None,
) -> Trajectory:
    """Follow the argmax policy over collision-free moves until ``target``.

    Raises ``PolicyNotConvergedError`` when a cell repeats (the policy is
    deterministic, so that is a loop) or ``step_cap`` is exceeded.
    """
    grid = env.grid
    cap = step_cap if step_cap is not None else 4 * sum(grid.counts)
    nxt = env.masked_next_state
    s = grid.state_index(start)
    goal = grid.state_index(target)
    path = [s]
    seen = {s}
    while s != goal:
        if len(path) > cap:
            raise PolicyNotConvergedError(f"greedy rollout exceeded {cap} steps")
        row = q.values[s]
        legal = [a for a in range(N_ACTIONS) if nxt[s, a] >= 0]
        if not legal:
            raise DeadEndError(f"no legal action from {tuple(grid.cell_of(s))}")
        a = max(legal, key=lambda b: (row[b], -b))
        s = int(nxt[s, a])
        if s in seen:
            raise PolicyNotConvergedError(f"greedy rollout revisits {tuple(grid.cell_of(s))}")
        seen.add(s)
        path.append(s)
    return Trajectory(tuple(grid.cell_of(p) for p in path), grid.cell_size_m)
