"""Cell sequences flown by the swarm, their loss and constraint checks."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .errors import ConsistencyError
from .gridworld import CellIndex, GridSpace, ObstacleMap, cell_center, in_band, is_collision

TRAJECTORY_CSV_COLUMNS = ("leg", "step", "ix", "iy", "iz", "x_m", "y_m", "z_m")


@dataclass(frozen=True)
class Trajectory:
    """Visited cells, start included.

    ``leg_ends[k]`` is the index into ``cells`` where leg ``k`` finishes; a
    single-leg trajectory has ``leg_ends == (len(cells) - 1,)``.
    """

    cells: tuple[CellIndex, ...]
    cell_size_m: float
    leg_ends: tuple[int, ...] = field(default=())
    feasible: bool = True

    def __post_init__(self) -> None:
        cells = tuple(CellIndex(*(int(v) for v in c)) for c in self.cells)
        object.__setattr__(self, "cells", cells)
        if not self.leg_ends and cells:
            object.__setattr__(self, "leg_ends", (len(cells) - 1,))

    @property
    def steps(self) -> int:
        return max(len(self.cells) - 1, 0)

    @property
    def loss_m(self) -> float:
        return self.cell_size_m * self.steps

    def leg_steps(self) -> list[int]:
        out, prev = [], 0
        for end in self.leg_ends:
            out.append(end - prev)
            prev = end
        return out

    def violations(self, grid: GridSpace, obstacles: ObstacleMap) -> list[str]:
        """Human-readable list of broken constraints (empty when valid)."""
        problems = []
        for i, c in enumerate(self.cells):
            if not grid.in_bounds(c):
                problems.append(f"cell {i} {tuple(c)} outside grid")
                continue
            if not in_band(grid, c):
                problems.append(f"cell {i} {tuple(c)} outside altitude band")
            if is_collision(grid, obstacles, c):
                problems.append(f"cell {i} {tuple(c)} collides")
        for i, (a, b) in enumerate(zip(self.cells, self.cells[1:])):
            if sum(abs(p - q) for p, q in zip(a, b)) != 1:
                problems.append(f"cells {i}->{i + 1} are not axis-adjacent")
        return problems

    def validate(self, grid: GridSpace, obstacles: ObstacleMap) -> None:
        problems = self.violations(grid, obstacles)
        if problems:
            raise ConsistencyError("; ".join(problems[:5]))


def concatenate(legs: Sequence[Trajectory], cell_size_m: float) -> Trajectory:
    """Stitch legs end to start; each leg must begin where the previous one ended."""
    cells: list[CellIndex] = []
    ends: list[int] = []
    for leg in legs:
        if not leg.cells:
            continue
        if cells:
            if cells[-1] != leg.cells[0]:
                raise ConsistencyError(f"leg starts at {leg.cells[0]} but previous ended at {cells[-1]}")
            cells.extend(leg.cells[1:])
        else:
            cells.extend(leg.cells)
        ends.append(len(cells) - 1)
    return Trajectory(tuple(cells), cell_size_m, tuple(ends), all(leg.feasible for leg in legs))


def trajectory_rows(grid: GridSpace, traj: Trajectory) -> Iterable[tuple]:
    leg, start = 0, 0
    for i, c in enumerate(traj.cells):
        while leg < len(traj.leg_ends) - 1 and i > traj.leg_ends[leg]:
            start = traj.leg_ends[leg]
            leg += 1
        x, y, z = cell_center(grid, c)
        yield (leg, i - start, c.ix, c.iy, c.iz, x, y, z)


def write_trajectory_csv(path: str | Path, grid: GridSpace, traj: Trajectory) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRAJECTORY_CSV_COLUMNS)
        w.writerows(trajectory_rows(grid, traj))
