import numpy as np
import pytest

from swarmcover.gridworld import build_grid, empty_obstacles

# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def open_grid():
    """5 x 5 x 1 grid of 20 m cells, no obstacles."""
    return build_grid((100, 100, 20), 20)


@pytest.fixture
def empty(open_grid):
    return empty_obstacles(open_grid)


def wall_map(grid, cells_xy, height=None):
    """Obstacle map with full-height (or given height) pillars on the listed columns."""
    h = np.zeros(grid.counts[:2])
    for ix, iy in cells_xy:
        h[ix, iy] = grid.extent_m[2] if height is None else height
    from swarmcover.gridworld import ObstacleMap

    return ObstacleMap(h)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'} - {detail}")
