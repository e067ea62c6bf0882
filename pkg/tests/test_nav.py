import heapq
import math

import numpy as np
import pytest

from mapping.grid import FREE, OBSTACLE, UNKNOWN, SemanticOccupancyGrid
from planners.nav import (
    EndpointBlockedError,
    NavigationError,
    UnreachableError,
    distance_field,
    flyable_mask,
    path_distance,
    plan_path,
)
from tools.geometry import NEIGHBORS_26, Bounds, center_of


def _dijkstra(fly: np.ndarray, src) -> dict:
    """Plain Dijkstra over the 26-connected flyable cells (local indices)."""
    dist = {src: 0.0}
    heap = [(0.0, src)]
    while heap:
        d, cur = heapq.heappop(heap)
        if d > dist[cur]:
            continue
        for off in NEIGHBORS_26:
            nb = tuple(c + o for c, o in zip(cur, off))
            if not all(0 <= c < n for c, n in zip(nb, fly.shape)) or not fly[nb]:
                continue
            nd = d + math.sqrt(sum(o * o for o in off))
            if nd < dist.get(nb, math.inf):
                dist[nb] = nd
                heapq.heappush(heap, (nd, nb))
    return dist


def _c(idx):
    return center_of(idx, 1.0)


def test_straight_and_diagonal_lengths(open_grid):
    grid = open_grid()
    assert plan_path(grid, _c((1, 1, 1)), _c((6, 1, 1)), clearance=0).length == pytest.approx(5.0)
    assert plan_path(grid, _c((1, 1, 1)), _c((4, 4, 4)), clearance=0).length == pytest.approx(3 * math.sqrt(3))


def test_same_voxel_is_a_single_waypoint(open_grid):
    p = plan_path(open_grid(), (2.2, 2.7, 2.1), (2.9, 2.1, 2.5), clearance=0)
    assert p.voxels == ((2, 2, 2),)
    assert p.waypoints == (_c((2, 2, 2)),)
    assert p.length == 0.0


def test_path_is_connected_and_flyable(open_grid):
    grid = open_grid(hi=(10, 10, 3))
    for y in range(0, 8):
        grid.state[grid.bounds.local((5, y, 1))] = OBSTACLE
    p = plan_path(grid, _c((1, 1, 1)), _c((8, 1, 1)), clearance=1)
    fly = flyable_mask(grid, 1)
    for a, b in zip(p.voxels[:-1], p.voxels[1:]):
        assert max(abs(x - y) for x, y in zip(a, b)) == 1
    for v in p.voxels[1:]:
        assert fly[grid.bounds.local(v)]
    step_sum = sum(math.dist(a, b) for a, b in zip(p.waypoints[:-1], p.waypoints[1:]))
    assert p.length == pytest.approx(step_sum)


def test_lengths_match_reference_dijkstra():
    rng = np.random.default_rng(4)
    for _ in range(8):
        grid = SemanticOccupancyGrid(1.0, Bounds((0, 0, 0), (6, 6, 4)))
        grid.state[:] = rng.choice([FREE, OBSTACLE, UNKNOWN], size=grid.state.shape, p=[0.7, 0.2, 0.1])
        fly = flyable_mask(grid, 0)
        cells = [tuple(int(c) for c in loc) for loc in np.argwhere(fly)]
        src = cells[0]
        ref = _dijkstra(fly, src)
        field = distance_field(grid, _c(src), clearance=0)
        for dst in cells[1:]:
            if dst in ref:
                assert plan_path(grid, _c(src), _c(dst), clearance=0).length == pytest.approx(ref[dst])
                assert field.at(dst) == pytest.approx(ref[dst])
            else:
                with pytest.raises(UnreachableError):
                    plan_path(grid, _c(src), _c(dst), clearance=0)
                assert not field.reachable(dst)


def test_symmetry_and_triangle_inequality(open_grid):
    grid = open_grid()
    for v in [(3, y, z) for y in range(0, 6) for z in range(0, 8)]:
        grid.state[grid.bounds.local(v)] = OBSTACLE
    a, b, c = _c((1, 1, 1)), _c((6, 2, 3)), _c((1, 7, 6))
    ab = path_distance(grid, a, b, clearance=0)
    ba = path_distance(grid, b, a, clearance=0)
    assert ab == pytest.approx(ba)
    ac = path_distance(grid, a, c, clearance=0)
    cb = path_distance(grid, c, b, clearance=0)
    assert ab <= ac + cb + 1e-9


def test_clearance_keeps_distance_from_obstacles(open_grid):
    grid = open_grid(hi=(12, 12, 3))
    grid.state[grid.bounds.local((6, 6, 1))] = OBSTACLE
    p = plan_path(grid, _c((2, 6, 1)), _c((10, 6, 1)), clearance=1)
    for v in p.voxels:
        assert max(abs(x - y) for x, y in zip(v, (6, 6, 1))) > 1


def test_blocked_endpoints(open_grid):
    grid = open_grid()
    grid.state[grid.bounds.local((5, 5, 5))] = OBSTACLE
    with pytest.raises(EndpointBlockedError, match="endpoint blocked"):
        plan_path(grid, _c((1, 1, 1)), _c((5, 5, 5)), clearance=0)
    with pytest.raises(EndpointBlockedError):
        plan_path(grid, _c((5, 5, 5)), _c((1, 1, 1)), clearance=0)
    # within clearance of the obstacle: the goal is blocked, the start may leave
    with pytest.raises(EndpointBlockedError):
        plan_path(grid, _c((1, 1, 1)), _c((5, 5, 4)), clearance=1)
    assert plan_path(grid, _c((5, 5, 4)), _c((1, 1, 1)), clearance=1).length > 0
    with pytest.raises(NavigationError):
        plan_path(grid, _c((1, 1, 1)), (100.0, 0.5, 0.5), clearance=0)


def test_walled_off_goal(open_grid):
    grid = open_grid()
    grid.state[grid.bounds.local((6, 6, 6))] = FREE
    for off in NEIGHBORS_26:
        grid.state[grid.bounds.local(tuple(6 + o for o in off))] = OBSTACLE
    with pytest.raises(UnreachableError, match="unreachable"):
        plan_path(grid, _c((1, 1, 1)), _c((6, 6, 6)), clearance=0)
    assert not distance_field(grid, _c((1, 1, 1)), clearance=0).reachable((6, 6, 6))


def test_cache_follows_grid_changes(open_grid):
    grid = open_grid()
    assert plan_path(grid, _c((0, 4, 4)), _c((7, 4, 4)), clearance=0).length == pytest.approx(7.0)
    for y in range(8):
        for z in range(8):
            if (y, z) != (0, 0):
                grid.state[grid.bounds.local((4, y, z))] = OBSTACLE
    assert plan_path(grid, _c((0, 4, 4)), _c((7, 4, 4)), clearance=0).length > 7.0
    assert distance_field(grid, _c((0, 4, 4)), clearance=0).at((7, 4, 4)) > 7.0
