"""Discretised 3D mission space, 2.5D obstacle map and legal-move queries.

Cells are addressed by integer ``(ix, iy, iz)`` triples. Internally every cell
also has a flat state index ``(ix * ny + iy) * nz + iz`` which is what the
learning code and the transition tables use.
"""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from .errors import ConfigurationError, GridBoundsError

# forward/backward along x, right/left along y, up/down along z.
ACTIONS: tuple[str, ...] = ("f", "b", "r", "l", "u", "d")
ACTION_DELTAS: tuple[tuple[int, int, int], ...] = (
    (1, 0, 0),
    (-1, 0, 0),
    (0, 1, 0),
    (0, -1, 0),
    (0, 0, 1),
    (0, 0, -1),
)
N_ACTIONS = len(ACTIONS)


class CellIndex(NamedTuple):
    ix: int
    iy: int
    iz: int


@dataclass(frozen=True)
class GridSpace:
    """Cuboid of side lengths ``extent_m`` cut into cubes of edge ``cell_size_m``."""

    extent_m: tuple[float, float, float]
    cell_size_m: float
    counts: tuple[int, int, int]
    altitude_band_m: tuple[float, float]

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.counts

    @property
    def n_cells(self) -> int:
        nx, ny, nz = self.counts
        return nx * ny * nz

    def in_bounds(self, cell: Sequence[int]) -> bool:
        return all(0 <= int(c) < n for c, n in zip(cell, self.counts))

    def band_layers(self) -> range:
        """Layer indices whose centre altitude lies inside the altitude band."""
        lo, hi = self.altitude_band_m
        dl = self.cell_size_m
        layers = [iz for iz in range(self.counts[2]) if lo <= (iz + 0.5) * dl <= hi]
        if not layers:
            return range(0)
        return range(layers[0], layers[-1] + 1)

    def layer_at(self, altitude_m: float) -> int:
        """Layer whose centre is closest to ``altitude_m``, restricted to the band."""
        layers = self.band_layers()
        if not layers:
            raise ConfigurationError("altitude band contains no cell centre")
        return min(layers, key=lambda iz: (abs((iz + 0.5) * self.cell_size_m - altitude_m), iz))

    def state_index(self, cell: Sequence[int]) -> int:
        check_cell(self, cell)
        ix, iy, iz = (int(c) for c in cell)
        _, ny, nz = self.counts
        return (ix * ny + iy) * nz + iz

    def cell_of(self, state: int) -> CellIndex:
        if not 0 <= state < self.n_cells:
            raise GridBoundsError(f"state {state} outside [0, {self.n_cells})")
        _, ny, nz = self.counts
        ixy, iz = divmod(int(state), nz)
        ix, iy = divmod(ixy, ny)
        return CellIndex(ix, iy, iz)


def build_grid(
    extent_m: Sequence[float],
    cell_size_m: float,
    altitude_band_m: Sequence[float] | None = None,
) -> GridSpace:
    """Partition the cuboid into ``ceil(L_k / dl)`` cubes per axis.

    ``altitude_band_m`` defaults to the full height ``(0, L_z)``.
    """
    if len(extent_m) != 3:
        raise ConfigurationError(f"extent_m must have three components, got {extent_m!r}")
    lx, ly, lz = (float(v) for v in extent_m)
    dl = float(cell_size_m)
    if not dl > 0 or not math.isfinite(dl):
        raise ConfigurationError(f"cell_size_m must be positive, got {cell_size_m!r}")
    for name, v in (("L_x", lx), ("L_y", ly), ("L_z", lz)):
        if not v > 0 or not math.isfinite(v):
            raise ConfigurationError(f"extent {name} must be positive, got {v!r}")
    band = (0.0, lz) if altitude_band_m is None else tuple(float(v) for v in altitude_band_m)
    if len(band) != 2:
        raise ConfigurationError(f"altitude_band_m must be (h_min, h_max), got {altitude_band_m!r}")
    h_min, h_max = band
    if not (0.0 <= h_min <= h_max <= lz):
        raise ConfigurationError(
            f"altitude band ({h_min}, {h_max}) must satisfy 0 <= h_min <= h_max <= L_z={lz}"
        )
    counts = tuple(int(math.ceil(v / dl)) for v in (lx, ly, lz))
    return GridSpace((lx, ly, lz), dl, counts, (h_min, h_max))  # type: ignore[arg-type]


def check_cell(grid: GridSpace, cell: Sequence[int]) -> CellIndex:
    if len(cell) != 3:
        raise GridBoundsError(f"cell must have three indices, got {cell!r}")
    c = CellIndex(*(int(v) for v in cell))
    if not grid.in_bounds(c):
        raise GridBoundsError(f"cell {tuple(c)} outside grid of shape {grid.counts}")
    return c


def cell_center(grid: GridSpace, cell: Sequence[int]) -> tuple[float, float, float]:
    ix, iy, iz = check_cell(grid, cell)
    dl = grid.cell_size_m
    return ((ix + 0.5) * dl, (iy + 0.5) * dl, (iz + 0.5) * dl)


def nearest_cell(grid: GridSpace, point_m: Sequence[float]) -> CellIndex:
    """Cell containing ``point_m``, clipped to the grid."""
    idx = [
        min(max(int(math.floor(float(p) / grid.cell_size_m)), 0), n - 1)
        for p, n in zip(point_m, grid.counts)
    ]
    return CellIndex(*idx)


def in_band(grid: GridSpace, cell: Sequence[int]) -> bool:
    lo, hi = grid.altitude_band_m
    z = (int(cell[2]) + 0.5) * grid.cell_size_m
    return lo <= z <= hi


@dataclass(frozen=True)
class ObstacleMap:
    """Height field ``Ob(ix, iy)`` in metres over the horizontal cells (0 = free)."""

    heights: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        h = np.array(self.heights, dtype=float, copy=True)
        if h.ndim != 2:
            raise ConfigurationError(f"heights must be 2D, got shape {h.shape}")
        if not np.all(np.isfinite(h)) or np.any(h < 0):
            raise ConfigurationError("obstacle heights must be finite and non-negative")
        h.setflags(write=False)
        object.__setattr__(self, "heights", h)

    @property
    def shape(self) -> tuple[int, int]:
        return self.heights.shape  # type: ignore[return-value]

    def density(self) -> float:
        """Fraction of columns carrying an obstacle."""
        return float(np.count_nonzero(self.heights > 0)) / self.heights.size


def empty_obstacles(grid: GridSpace) -> ObstacleMap:
    return ObstacleMap(np.zeros(grid.counts[:2]))


def _check_obstacles(grid: GridSpace, obstacles: ObstacleMap) -> None:
    if obstacles.shape != grid.counts[:2]:
        raise ConfigurationError(
            f"obstacle map shape {obstacles.shape} does not match grid columns {grid.counts[:2]}"
        )
    if float(obstacles.heights.max(initial=0.0)) > grid.extent_m[2]:
        raise ConfigurationError("obstacle height exceeds L_z")


def random_pillars(
    grid: GridSpace,
    count: int,
    height_range_m: Sequence[float] | None = None,
    seed: int | np.random.SeedSequence | np.random.Generator | None = None,
    keep_free: Sequence[Sequence[int]] = (),
) -> ObstacleMap:
    """Place ``count`` single-column pillars on distinct random columns.

    Heights are drawn uniformly from ``height_range_m`` (default: full height,
    i.e. pillars that block every altitude). Columns listed in ``keep_free``
    (cells or ``(ix, iy)`` pairs) never receive a pillar.
    """
    rng = np.random.default_rng(seed)
    nx, ny = grid.counts[:2]
    lz = grid.extent_m[2]
    lo, hi = (lz, lz) if height_range_m is None else (float(height_range_m[0]), float(height_range_m[1]))
    if not (0 <= lo <= hi <= lz):
        raise ConfigurationError(f"pillar height range ({lo}, {hi}) must lie in [0, {lz}]")
    reserved = {int(c[0]) * ny + int(c[1]) for c in keep_free}
    candidates = np.array([c for c in range(nx * ny) if c not in reserved], dtype=np.int64)
    if count < 0 or count > candidates.size:
        raise ConfigurationError(f"cannot place {count} pillars on {candidates.size} free columns")
    cols = rng.choice(candidates, size=count, replace=False)
    heights = np.zeros(nx * ny)
    heights[cols] = rng.uniform(lo, hi, size=count) if hi > lo else hi
    return ObstacleMap(heights.reshape(nx, ny))


def load_obstacles(path: str | Path, grid: GridSpace | None = None) -> ObstacleMap:
    """Read a JSON obstacle file with ``cell_size_m``, ``nx``, ``ny`` and row-major ``heights``."""
    data = json.loads(Path(path).read_text())
    try:
        nx, ny = int(data["nx"]), int(data["ny"])
        dl = float(data["cell_size_m"])
        heights = np.asarray(data["heights"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigurationError(f"malformed obstacle file {path}: {exc}") from exc
    if heights.size != nx * ny:
        raise ConfigurationError(f"obstacle file {path}: expected {nx * ny} heights, got {heights.size}")
    obstacles = ObstacleMap(heights.reshape(nx, ny))
    if grid is not None:
        if not math.isclose(dl, grid.cell_size_m):
            raise ConfigurationError(
                f"obstacle file {path}: cell_size_m {dl} != grid cell size {grid.cell_size_m}"
            )
        _check_obstacles(grid, obstacles)
    return obstacles


def save_obstacles(path: str | Path, grid: GridSpace, obstacles: ObstacleMap) -> None:
    _check_obstacles(grid, obstacles)
    nx, ny = obstacles.shape
    payload = {
        "cell_size_m": grid.cell_size_m,
        "nx": nx,
        "ny": ny,
        "heights": obstacles.heights.ravel().tolist(),
    }
    Path(path).write_text(json.dumps(payload))


def is_collision(grid: GridSpace, obstacles: ObstacleMap, cell: Sequence[int]) -> bool:
    """True when the cell centre is at or below the obstacle top of its column."""
    ix, iy, iz = check_cell(grid, cell)
    return (iz + 0.5) * grid.cell_size_m <= obstacles.heights[ix, iy]


def legal_neighbors(
    grid: GridSpace,
    obstacles: ObstacleMap,
    cell: Sequence[int],
    include_obstacles: bool = False,
) -> list[tuple[str, CellIndex]]:
    """Axis neighbours that stay in the grid and the altitude band and do not collide.

    With ``include_obstacles`` colliding neighbours are kept; the environment
    uses this when obstacle moves are penalised rather than masked.
    """
    ix, iy, iz = check_cell(grid, cell)
    out = []
    for name, (dx, dy, dz) in zip(ACTIONS, ACTION_DELTAS):
        nb = CellIndex(ix + dx, iy + dy, iz + dz)
        if not grid.in_bounds(nb) or not in_band(grid, nb):
            continue
        if not include_obstacles and is_collision(grid, obstacles, nb):
            continue
        out.append((name, nb))
    return out


def collision_mask(grid: GridSpace, obstacles: ObstacleMap) -> np.ndarray:
    """Boolean array over flat states, True where the cell collides."""
    _check_obstacles(grid, obstacles)
    nz = grid.counts[2]
    centers_z = (np.arange(nz) + 0.5) * grid.cell_size_m
    blocked = centers_z[None, None, :] <= obstacles.heights[:, :, None]
    return blocked.ravel()


def transition_table(
    grid: GridSpace, obstacles: ObstacleMap, mask_obstacles: bool = True
) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(next_state, blocked)`` arrays over flat states.

    ``next_state[s, a]`` is the flat index reached by action ``a`` from ``s`` or
    -1 if the move leaves the grid or the altitude band (or hits an obstacle
    when ``mask_obstacles``). ``blocked[s]`` flags colliding cells.
    """
    nx, ny, nz = grid.counts
    blocked = collision_mask(grid, obstacles)
    ix, iy, iz = np.indices((nx, ny, nz)).reshape(3, -1)
    band = np.zeros(nz, dtype=bool)
    band[list(grid.band_layers())] = True
    nxt = np.full((grid.n_cells, N_ACTIONS), -1, dtype=np.int64)
    for a, (dx, dy, dz) in enumerate(ACTION_DELTAS):
        jx, jy, jz = ix + dx, iy + dy, iz + dz
        ok = (jx >= 0) & (jx < nx) & (jy >= 0) & (jy < ny) & (jz >= 0) & (jz < nz)
        ok[ok] &= band[jz[ok]]
        target = (jx * ny + jy) * nz + jz
        if mask_obstacles:
            ok[ok] &= ~blocked[target[ok]]
        nxt[ok, a] = target[ok]
    return nxt, blocked


def bfs_distances(
    grid: GridSpace, obstacles: ObstacleMap, source: Sequence[int]
) -> np.ndarray:
    """Step distance from ``source`` to every flat state over legal moves (-1 = unreachable)."""
    nxt, _ = transition_table(grid, obstacles)
    return _bfs(nxt, grid.state_index(source))[0]


def _bfs(nxt: np.ndarray, src: int) -> tuple[np.ndarray, np.ndarray]:
    dist = np.full(nxt.shape[0], -1, dtype=np.int64)
    parent = np.full(nxt.shape[0], -1, dtype=np.int64)
    table = nxt.tolist()
    dist[src] = 0
    queue = deque([src])
    d = dist.tolist()
    p = parent.tolist()
    while queue:
        s = queue.popleft()
        ds = d[s] + 1
        for t in table[s]:
            if t >= 0 and d[t] < 0:
                d[t] = ds
                p[t] = s
                queue.append(t)
    return np.asarray(d, dtype=np.int64), np.asarray(p, dtype=np.int64)


def bfs_path(
    grid: GridSpace, obstacles: ObstacleMap, start: Sequence[int], goal: Sequence[int]
) -> list[CellIndex] | None:
    """Minimum-step cell sequence from ``start`` to ``goal`` or None if unreachable.

    Neighbours are expanded in action order so the returned path is
    deterministic among equal-length alternatives.
    """
    nxt, _ = transition_table(grid, obstacles)
    src, dst = grid.state_index(start), grid.state_index(goal)
    dist, parent = _bfs(nxt, src)
    if dist[dst] < 0:
        return None
    states = [dst]
    while states[-1] != src:
        states.append(int(parent[states[-1]]))
    return [grid.cell_of(s) for s in reversed(states)]
