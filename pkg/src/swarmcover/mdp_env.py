"""Episodic grid environment for planning one leg between hovering points."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigurationError, IllegalActionError
from .gridworld import (
    ACTIONS,
    CellIndex,
    GridSpace,
    ObstacleMap,
    cell_center,
    check_cell,
    in_band,
    is_collision,
    nearest_cell,
    transition_table,
)

STEP_COST_PER_M = 0.1
GOAL_REWARD = 100.0
COLLISION_PENALTY = 100.0

REACHED = "reached-target"
COLLISION = "collision"
NONE = "none"

OBSTACLE_HANDLING = ("mask", "penalize")


def action_index(action: int | str) -> int:
    if isinstance(action, str):
        try:
            return ACTIONS.index(action)
        except ValueError:
            raise IllegalActionError(f"unknown action {action!r}") from None
    a = int(action)
    if not 0 <= a < len(ACTIONS):
        raise IllegalActionError(f"unknown action {action!r}")
    return a


def step_reward(cell_size_m: float, reached: bool, collided: bool) -> float:
    h = 1.0 if reached else 0.0
    lob = 1.0 if collided else 0.0
    return (-STEP_COST_PER_M * cell_size_m) * (1.0 - h) + GOAL_REWARD * h - COLLISION_PENALTY * lob


@dataclass(frozen=True)
class EnvState:
    agent_cell: CellIndex
    target_cell: CellIndex
    steps_taken: int = 0
    terminal_cause: str = NONE

    @property
    def terminal(self) -> bool:
        return self.terminal_cause != NONE


@dataclass(frozen=True)
class StepOutcome:
    next_state: EnvState
    reward: float
    terminal: bool
    terminal_cause: str


class CoverageEnv:
    """Six-action grid world with a single target cell per episode.

    With ``obstacle_handling="mask"`` moves into obstacles are illegal. With
    ``"penalize"`` they are allowed, cost an extra 100 and end the episode.
    Leaving the grid or the altitude band is always illegal.
    """

    def __init__(
        self,
        grid: GridSpace,
        obstacles: ObstacleMap,
        obstacle_handling: str = "penalize",
    ):
        if obstacle_handling not in OBSTACLE_HANDLING:
            raise ConfigurationError(
                f"obstacle_handling must be one of {OBSTACLE_HANDLING}, got {obstacle_handling!r}"
            )
        self.grid = grid
        self.obstacles = obstacles
        self.obstacle_handling = obstacle_handling
        self.next_state, self.blocked = transition_table(
            grid, obstacles, mask_obstacles=obstacle_handling == "mask"
        )
        self.masked_next_state = (
            self.next_state
            if obstacle_handling == "mask"
            else transition_table(grid, obstacles, mask_obstacles=True)[0]
        )

    @property
    def cell_size_m(self) -> float:
        return self.grid.cell_size_m

    def _check_endpoint(self, cell: Sequence[int], what: str) -> CellIndex:
        c = check_cell(self.grid, cell)
        if not in_band(self.grid, c):
            raise ConfigurationError(f"{what} cell {tuple(c)} is outside the altitude band")
        if is_collision(self.grid, self.obstacles, c):
            raise ConfigurationError(f"{what} cell {tuple(c)} lies inside an obstacle")
        return c

    def reset(self, start_cell: Sequence[int], target_cell: Sequence[int]) -> EnvState:
        start = self._check_endpoint(start_cell, "start")
        target = self._check_endpoint(target_cell, "target")
        return EnvState(start, target, 0, REACHED if start == target else NONE)

    def is_terminal(self, state: EnvState) -> bool:
        return state.terminal

    def legal_actions(self, cell: Sequence[int]) -> list[int]:
        s = self.grid.state_index(cell)
        return [a for a, t in enumerate(self.next_state[s]) if t >= 0]

    def step(self, state: EnvState, action: int | str) -> StepOutcome:
        if state.terminal:
            raise IllegalActionError(f"episode already ended ({state.terminal_cause})")
        a = action_index(action)
        s = self.grid.state_index(state.agent_cell)
        t = int(self.next_state[s, a])
        if t < 0:
            raise IllegalActionError(
                f"action {ACTIONS[a]!r} is not legal from {tuple(state.agent_cell)}"
            )
        cell = self.grid.cell_of(t)
        reached = cell == state.target_cell
        collided = bool(self.blocked[t])
        cause = REACHED if reached else COLLISION if collided else NONE
        nxt = replace(state, agent_cell=cell, steps_taken=state.steps_taken + 1, terminal_cause=cause)
        return StepOutcome(nxt, step_reward(self.cell_size_m, reached, collided), cause != NONE, cause)


def discounted_return(rewards: Iterable[float], gamma: float) -> float:
    if not 0.0 <= gamma <= 1.0:
        raise ConfigurationError(f"discount must be in [0, 1], got {gamma}")
    total, weight = 0.0, 1.0
    for r in rewards:
        total += weight * float(r)
        weight *= gamma
    return total


def snap_to_cell(
    grid: GridSpace,
    obstacles: ObstacleMap,
    point_xy_m: Sequence[float],
    altitude_m: float | None = None,
) -> tuple[CellIndex, bool]:
    """Map a horizontal hovering position to a free in-band cell.

    The flight layer is the band layer nearest ``altitude_m`` (default: band
    centre). If that cell collides, the nearest free in-band cell centre is
    used instead and the second return value is True.
    """
    lo, hi = grid.altitude_band_m
    h = (lo + hi) / 2.0 if altitude_m is None else float(altitude_m)
    layer = grid.layer_at(h)
    ix, iy, _ = nearest_cell(grid, (point_xy_m[0], point_xy_m[1], 0.0))
    cell = CellIndex(ix, iy, layer)
    if not is_collision(grid, obstacles, cell):
        return cell, False

    target = np.array([point_xy_m[0], point_xy_m[1], h], dtype=float)
    nx, ny, _ = grid.counts
    layers = list(grid.band_layers())
    best = None
    for radius in range(1, max(nx, ny) + 1):
        for jx in range(max(ix - radius, 0), min(ix + radius, nx - 1) + 1):
            for jy in range(max(iy - radius, 0), min(iy + radius, ny - 1) + 1):
                for jz in layers:
                    c = CellIndex(jx, jy, jz)
                    if is_collision(grid, obstacles, c):
                        continue
                    d = math.dist(cell_center(grid, c), target)
                    if best is None or (d, c) < best:
                        best = (d, c)
        # cells outside the window are more than radius * dl away
        if best is not None and best[0] <= radius * grid.cell_size_m:
            return best[1], True
    if best is not None:
        return best[1], True
    raise ConfigurationError("no collision-free cell inside the altitude band")
