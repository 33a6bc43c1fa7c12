import json
import math

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from swarmcover.errors import ConfigurationError, GridBoundsError
from swarmcover.gridworld import (
    ACTION_DELTAS,
    ACTIONS,
    CellIndex,
    ObstacleMap,
    bfs_distances,
    bfs_path,
    build_grid,
    cell_center,
    empty_obstacles,
    in_band,
    is_collision,
    legal_neighbors,
    load_obstacles,
    random_pillars,
    save_obstacles,
    transition_table,
)

from conftest import wall_map


@pytest.mark.parametrize(
    "extent, dl, counts",
    [
        ((2000, 2000, 200), 20, (100, 100, 10)),
        ((2010, 2000, 200), 20, (101, 100, 10)),
        ((20, 20, 20), 20, (1, 1, 1)),
    ],
)
def test_build_grid_counts(extent, dl, counts):
    assert build_grid(extent, dl).counts == counts


@pytest.mark.parametrize(
    "extent, dl, band",
    [
        ((0, 10, 10), 1, None),
        ((10, -1, 10), 1, None),
        ((10, 10, 10), 0, None),
        ((10, 10, 10), -2, None),
        ((10, 10, 10), 1, (-1, 5)),
        ((10, 10, 10), 1, (5, 11)),
        ((10, 10, 10), 1, (6, 5)),
    ],
)
def test_build_grid_rejects_bad_dimensions(extent, dl, band):
    with pytest.raises(ConfigurationError):
        build_grid(extent, dl, band)


@given(
    st.tuples(*[st.floats(1.0, 5000.0)] * 3),
    st.floats(0.5, 100.0),
)
def test_ceiling_characterisation(extent, dl):
    g = build_grid(extent, dl)
    for n, length in zip(g.counts, extent):
        assert dl * n >= length > dl * (n - 1) - 1e-9 * length


@pytest.mark.parametrize(
    "dl, cell, center",
    [
        (20, (0, 0, 0), (10, 10, 10)),
        (20, (99, 99, 9), (1990, 1990, 190)),
        (10, (3, 0, 0), (35, 5, 5)),
    ],
)
def test_cell_center(dl, cell, center):
    g = build_grid((2000, 2000, 200), dl)
    assert cell_center(g, cell) == center


def test_cell_center_out_of_bounds():
    g = build_grid((100, 100, 100), 20)
    with pytest.raises(GridBoundsError):
        cell_center(g, (5, 0, 0))
    with pytest.raises(GridBoundsError):
        cell_center(g, (0, -1, 0))


def test_cell_center_injective():
    g = build_grid((100, 60, 40), 20)
    cells = [(i, j, k) for i in range(5) for j in range(3) for k in range(2)]
    assert len({cell_center(g, c) for c in cells}) == len(cells)


def test_is_collision_examples():
    g = build_grid((200, 200, 200), 20)
    assert not any(
        is_collision(g, empty_obstacles(g), (i, j, k)) for i in range(10) for j in range(10) for k in range(10)
    )
    pillar = wall_map(g, [(3, 3)])
    assert all(is_collision(g, pillar, (3, 3, k)) for k in range(10))
    half = wall_map(g, [(3, 3)], height=100)
    assert not is_collision(g, half, (3, 3, 6))  # centre 130 m
    assert is_collision(g, half, (3, 3, 4))  # centre 90 m


def test_is_collision_out_of_bounds():
    g = build_grid((100, 100, 100), 20)
    with pytest.raises(GridBoundsError):
        is_collision(g, empty_obstacles(g), (0, 0, 5))


def test_legal_neighbors_examples():
    g = build_grid((100, 100, 100), 20)
    ob = empty_obstacles(g)
    assert len(legal_neighbors(g, ob, (2, 2, 2))) == 6
    assert len(legal_neighbors(g, ob, (0, 0, 0))) == 3
    pillar = wall_map(g, [(3, 2)])
    nbs = legal_neighbors(g, pillar, (2, 2, 2))
    assert len(nbs) == 5
    assert ("f", CellIndex(3, 2, 2)) not in nbs


def test_legal_neighbors_respects_band():
    g = build_grid((100, 100, 200), 20, (120, 180))
    assert list(g.band_layers()) == [6, 7, 8]
    names = {a for a, _ in legal_neighbors(g, empty_obstacles(g), (2, 2, 8))}
    assert "u" not in names and "d" in names
    names = {a for a, _ in legal_neighbors(g, empty_obstacles(g), (2, 2, 6))}
    assert "d" not in names and "u" in names


def _random_world(seed):
    rng = np.random.default_rng(seed)
    nx_, ny_, nz_ = rng.integers(2, 8, size=3)
    g = build_grid((20.0 * nx_, 20.0 * ny_, 20.0 * nz_), 20, (0.0, 20.0 * nz_))
    heights = np.where(rng.random((nx_, ny_)) < 0.3, rng.uniform(0, 20.0 * nz_, (nx_, ny_)), 0.0)
    return g, ObstacleMap(heights)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10_000))
def test_legal_neighbor_invariants(seed):
    g, ob = _random_world(seed)
    nx_, ny_, nz_ = g.counts
    for c in ((i, j, k) for i in range(nx_) for j in range(ny_) for k in range(nz_)):
        if is_collision(g, ob, c):
            continue
        for action, nb in legal_neighbors(g, ob, c):
            assert g.in_bounds(nb) and in_band(g, nb) and not is_collision(g, ob, nb)
            delta = ACTION_DELTAS[ACTIONS.index(action)]
            assert tuple(np.subtract(nb, c)) == delta
            # reversibility
            assert c in [n for _, n in legal_neighbors(g, ob, nb)]


def test_transition_table_matches_legal_neighbors():
    g, ob = _random_world(7)
    nxt, blocked = transition_table(g, ob)
    for s in range(g.n_cells):
        c = g.cell_of(s)
        if blocked[s]:
            continue
        expected = {(ACTIONS.index(a), g.state_index(n)) for a, n in legal_neighbors(g, ob, c)}
        got = {(a, int(t)) for a, t in enumerate(nxt[s]) if t >= 0}
        assert got == expected


def test_state_index_round_trip():
    g = build_grid((100, 60, 40), 20)
    for s in range(g.n_cells):
        assert g.state_index(g.cell_of(s)) == s


def _networkx_graph(g, ob):
    graph = nx.Graph()
    nx_, ny_, nz_ = g.counts
    for c in ((i, j, k) for i in range(nx_) for j in range(ny_) for k in range(nz_)):
        if is_collision(g, ob, c) or not in_band(g, c):
            continue
        graph.add_node(c)
        for _, nb in legal_neighbors(g, ob, c):
            graph.add_edge(c, tuple(nb))
    return graph


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_bfs_matches_networkx(seed):
    g, ob = _random_world(seed)
    graph = _networkx_graph(g, ob)
    nodes = sorted(graph.nodes)
    if not nodes:
        return
    src = nodes[seed % len(nodes)]
    dist = bfs_distances(g, ob, src)
    ref = nx.single_source_shortest_path_length(graph, src)
    for s in range(g.n_cells):
        c = tuple(g.cell_of(s))
        assert dist[s] == ref.get(c, -1)
    dst = nodes[(seed * 7) % len(nodes)]
    path = bfs_path(g, ob, src, dst)
    assert len(path) - 1 == ref[dst]


def test_random_pillars_deterministic_and_bounded():
    g = build_grid((400, 400, 200), 20)
    a = random_pillars(g, 40, (0, 200), seed=3)
    b = random_pillars(g, 40, (0, 200), seed=3)
    assert np.array_equal(a.heights, b.heights)
    assert np.count_nonzero(a.heights) == 40
    assert a.heights.max() <= 200
    full = random_pillars(g, 10, seed=1, keep_free=[(0, 0, 0)])
    assert full.heights[0, 0] == 0
    assert set(np.unique(full.heights)) == {0.0, 200.0}
    with pytest.raises(ConfigurationError):
        random_pillars(g, 401, seed=0)


def test_obstacle_file_round_trip(tmp_path):
    g = build_grid((100, 80, 100), 20)
    ob = random_pillars(g, 5, (10, 90), seed=2)
    path = tmp_path / "obs.json"
    save_obstacles(path, g, ob)
    data = json.loads(path.read_text())
    assert (data["nx"], data["ny"], data["cell_size_m"]) == (5, 4, 20)
    assert np.array_equal(load_obstacles(path, g).heights, ob.heights)


def test_obstacle_file_validation(tmp_path):
    g = build_grid((100, 80, 100), 20)
    path = tmp_path / "obs.json"
    path.write_text(json.dumps({"cell_size_m": 20, "nx": 5, "ny": 4, "heights": [0] * 19}))
    with pytest.raises(ConfigurationError):
        load_obstacles(path, g)
    path.write_text(json.dumps({"cell_size_m": 20, "nx": 4, "ny": 5, "heights": [0] * 20}))
    with pytest.raises(ConfigurationError):
        load_obstacles(path, g)
    path.write_text(json.dumps({"cell_size_m": 10, "nx": 5, "ny": 4, "heights": [0] * 20}))
    with pytest.raises(ConfigurationError):
        load_obstacles(path, g)
    path.write_text(json.dumps({"cell_size_m": 20, "nx": 5, "ny": 4, "heights": [500] * 20}))
    with pytest.raises(ConfigurationError):
        load_obstacles(path, g)


def test_obstacle_map_is_read_only():
    ob = ObstacleMap(np.zeros((3, 3)))
    with pytest.raises(ValueError):
        ob.heights[0, 0] = 1.0
    with pytest.raises(ConfigurationError):
        ObstacleMap(np.full((2, 2), -1.0))
    assert math.isclose(ObstacleMap(np.array([[0, 5], [0, 0]])).density(), 0.25)
