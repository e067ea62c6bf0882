"""
Point-to-point navigation over the belief grid.

A cell is flyable when it is Free and no occupied cell lies within
`clearance` voxels (Chebyshev). Unknown cells are never flown through.
The start cell only has to be Free; the goal must be flyable.

plan_path is A* on the 26-connected flyable subgrid (edge weights 1, sqrt 2,
sqrt 3 times the voxel size, Euclidean heuristic, ties broken by the lowest
voxel index). distance_field runs Dijkstra over the same graph with
scipy.sparse.csgraph for one-to-many queries.
"""

from __future__ import annotations

import heapq
import logging
import math
import weakref
from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
from scipy.sparse import coo_matrix, csr_matrix
from scipy.sparse.csgraph import dijkstra

from mapping.grid import FREE, OBSTACLE, SemanticOccupancyGrid
from tools.geometry import NEIGHBORS_26, Index, Point, center_of, inflate

logger = logging.getLogger("gatsbi.nav")

_STEPS: Tuple[Tuple[Index, float], ...] = tuple(
    (off, math.sqrt(off[0] ** 2 + off[1] ** 2 + off[2] ** 2)) for off in NEIGHBORS_26
)
# one direction per undirected edge
_HALF_STEPS = tuple((off, w) for off, w in _STEPS if off > (0, 0, 0))


class NavigationError(RuntimeError):
    pass


class EndpointBlockedError(NavigationError):
    def __init__(self, which: str, voxel: Index):
        super().__init__(f"endpoint blocked: {which} {voxel}")
        self.which = which
        self.voxel = voxel


class UnreachableError(NavigationError):
    def __init__(self, start: Index, goal: Index):
        super().__init__(f"unreachable: {start} -> {goal}")
        self.start = start
        self.goal = goal


@dataclass(frozen=True)
class GridPath:
    voxels: Tuple[Index, ...]
    waypoints: Tuple[Point, ...]
    length: float

    @property
    def start(self) -> Index:
        return self.voxels[0]

    @property
    def goal(self) -> Index:
        return self.voxels[-1]


# ---------- flyable mask and graph cache ----------

@dataclass
class _Cached:
    digest: int
    flyable: np.ndarray
    graph: Optional[csr_matrix] = None


_cache: "weakref.WeakKeyDictionary[SemanticOccupancyGrid, Dict[int, _Cached]]" = weakref.WeakKeyDictionary()


def _entry(grid: SemanticOccupancyGrid, clearance: int) -> _Cached:
    digest = hash(grid.state.tobytes())
    per_grid = _cache.setdefault(grid, {})
    hit = per_grid.get(clearance)
    if hit is None or hit.digest != digest:
        occupied = grid.state >= OBSTACLE
        fly = (grid.state == FREE) & ~inflate(occupied, clearance)
        fly.setflags(write=False)
        hit = _Cached(digest, fly)
        per_grid[clearance] = hit
    return hit


def flyable_mask(grid: SemanticOccupancyGrid, clearance: int) -> np.ndarray:
    """Read-only boolean array over grid.bounds."""
    return _entry(grid, clearance).flyable


def _slices(off: int, n: int) -> Tuple[slice, slice]:
    if off >= 0:
        return slice(0, n - off), slice(off, n)
    return slice(-off, n), slice(0, n + off)


def _graph(grid: SemanticOccupancyGrid, clearance: int) -> csr_matrix:
    hit = _entry(grid, clearance)
    if hit.graph is None:
        fly = hit.flyable
        flat = np.arange(fly.size).reshape(fly.shape)
        rows, cols, weights = [], [], []
        for off, w in _HALF_STEPS:
            (ax, bx), (ay, by), (az, bz) = (_slices(o, n) for o, n in zip(off, fly.shape))
            both = fly[ax, ay, az] & fly[bx, by, bz]
            rows.append(flat[ax, ay, az][both])
            cols.append(flat[bx, by, bz][both])
            weights.append(np.full(int(both.sum()), w * grid.voxel_size))
        r = np.concatenate(rows)
        c = np.concatenate(cols)
        hit.graph = coo_matrix((np.concatenate(weights), (r, c)), shape=(fly.size, fly.size)).tocsr()
    return hit.graph


# ---------- endpoint checks ----------

def _check_endpoints(grid: SemanticOccupancyGrid, fly: np.ndarray, s: Index, t: Optional[Index]) -> None:
    if grid.code_at(s) != FREE:
        raise EndpointBlockedError("start", s)
    if t is not None and (not grid.bounds.contains(t) or not fly[grid.bounds.local(t)]):
        raise EndpointBlockedError("goal", t)


# ---------- A* ----------

def plan_path(
    grid: SemanticOccupancyGrid,
    start: Sequence[float],
    goal: Sequence[float],
    clearance: int = 1,
) -> GridPath:
    vs = grid.voxel_size
    s = grid.voxel_of(start)
    t = grid.voxel_of(goal)
    fly = flyable_mask(grid, clearance)
    _check_endpoints(grid, fly, s, t)
    if s == t:
        return GridPath((s,), (center_of(s, vs),), 0.0)

    b = grid.bounds
    nx, ny, nz = b.shape
    sl, tl = b.local(s), b.local(t)

    def h(c: Index) -> float:
        return vs * math.sqrt((c[0] - tl[0]) ** 2 + (c[1] - tl[1]) ** 2 + (c[2] - tl[2]) ** 2)

    g: Dict[Index, float] = {sl: 0.0}
    came_from: Dict[Index, Index] = {}
    closed = set()
    heap = [(h(sl), sl)]
    found = False
    while heap:
        _, cur = heapq.heappop(heap)
        if cur in closed:
            continue
        if cur == tl:
            found = True
            break
        closed.add(cur)
        gc = g[cur]
        for off, w in _STEPS:
            nb = (cur[0] + off[0], cur[1] + off[1], cur[2] + off[2])
            if not (0 <= nb[0] < nx and 0 <= nb[1] < ny and 0 <= nb[2] < nz):
                continue
            if nb in closed or not fly[nb]:
                continue
            ng = gc + w * vs
            if ng < g.get(nb, math.inf):
                g[nb] = ng
                came_from[nb] = cur
                heapq.heappush(heap, (ng + h(nb), nb))
    if not found:
        raise UnreachableError(s, t)

    chain = [tl]
    while chain[-1] != sl:
        chain.append(came_from[chain[-1]])
    chain.reverse()
    voxels = tuple(b.glob(c) for c in chain)
    return GridPath(voxels, tuple(center_of(v, vs) for v in voxels), g[tl])


def path_distance(
    grid: SemanticOccupancyGrid,
    start: Sequence[float],
    goal: Sequence[float],
    clearance: int = 1,
) -> float:
    return plan_path(grid, start, goal, clearance).length


# ---------- one-to-many ----------

@dataclass(frozen=True)
class DistanceField:
    source: Index
    origin: Index
    dist: np.ndarray

    def at(self, idx: Sequence[int]) -> float:
        loc = tuple(i - o for i, o in zip(idx, self.origin))
        if any(c < 0 or c >= n for c, n in zip(loc, self.dist.shape)):
            return math.inf
        return float(self.dist[loc])

    def reachable(self, idx: Sequence[int]) -> bool:
        return math.isfinite(self.at(idx))


def distance_field(grid: SemanticOccupancyGrid, source: Sequence[float], clearance: int = 1) -> DistanceField:
    """Path distance from `source` to every flyable cell (inf elsewhere)."""
    s = grid.voxel_of(source)
    fly = flyable_mask(grid, clearance)
    _check_endpoints(grid, fly, s, None)
    graph = _graph(grid, clearance)
    b = grid.bounds
    sl = b.local(s)
    src = int(np.ravel_multi_index(sl, fly.shape))
    if not fly[sl]:
        # exempt source: link it to its flyable neighbors
        rows, cols, ws = [], [], []
        for off, w in _STEPS:
            nb = (sl[0] + off[0], sl[1] + off[1], sl[2] + off[2])
            if all(0 <= c < n for c, n in zip(nb, fly.shape)) and fly[nb]:
                rows.append(src)
                cols.append(int(np.ravel_multi_index(nb, fly.shape)))
                ws.append(w * grid.voxel_size)
        extra = coo_matrix((ws, (rows, cols)), shape=graph.shape).tocsr()
        graph = graph + extra
    dist = dijkstra(graph, directed=False, indices=src).reshape(fly.shape)
    return DistanceField(s, b.lo, dist)
