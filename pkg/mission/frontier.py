"""
Nearest-frontier exploration with an inspection-counting overlay.

Used standalone as the comparison baseline and, one step at a time, by the
GATSBI executor while no bridge voxel (or no reachable viewpoint) is known.
"""

from __future__ import annotations

import logging
from typing import List, Optional, Sequence

import numpy as np
from scipy.spatial import cKDTree

from mapping.grid import FREE, UNKNOWN, SemanticOccupancyGrid
from planners.nav import NavigationError, distance_field, plan_path
from tools.geometry import Bounds, Index, center_of
from world.config import ScenarioConfig
from world.model import WorldModel

from mission.flight import MissionState, credit, fly_segment, record, take_scan
from mission.log import MissionLog

logger = logging.getLogger("gatsbi.frontier")


class ExplorationBoxError(ValueError):
    pass


def detect_frontiers(grid: SemanticOccupancyGrid, box: Bounds) -> List[Index]:
    """Free cells inside `box` with at least one Unknown 6-neighbor, ascending."""
    st = grid.state
    unknown = st == UNKNOWN
    touches = np.zeros_like(unknown)
    for axis in range(3):
        n = st.shape[axis]
        if n < 2:
            continue
        lo = [slice(None)] * 3
        hi = [slice(None)] * 3
        lo[axis] = slice(0, n - 1)
        hi[axis] = slice(1, n)
        touches[tuple(lo)] |= unknown[tuple(hi)]
        touches[tuple(hi)] |= unknown[tuple(lo)]

    inside = np.zeros_like(unknown)
    g = grid.bounds
    sl = tuple(
        slice(max(b_lo, g_lo) - g_lo, max(max(b_lo, g_lo), min(b_hi, g_hi)) - g_lo)
        for b_lo, b_hi, g_lo, g_hi in zip(box.lo, box.hi, g.lo, g.hi)
    )
    inside[sl] = True

    mask = (st == FREE) & touches & inside
    return [g.glob(loc) for loc in np.argwhere(mask)]


def _retire_near(state: MissionState, target: Index, candidates: List[Index], radius: int) -> None:
    state.retired.add(target)
    for f in candidates:
        if max(abs(f[0] - target[0]), abs(f[1] - target[1]), abs(f[2] - target[2])) <= radius:
            state.retired.add(f)


def _near(frontiers: List[Index], targets: Sequence[Index], radius: float) -> List[Index]:
    """Frontiers within `radius` voxels of any target voxel."""
    if not frontiers or not targets:
        return []
    tree = cKDTree(np.asarray(targets, dtype=float))
    d, _ = tree.query(np.asarray(frontiers, dtype=float), distance_upper_bound=radius)
    return [f for f, di in zip(frontiers, d) if np.isfinite(di)]


def frontier_step(
    state: MissionState,
    world: WorldModel,
    config: ScenarioConfig,
    opportunistic: bool = True,
    box: Optional[Bounds] = None,
    near: Sequence[Index] = (),
    radius_m: float = 0.0,
) -> bool:
    """
    Fly to the nearest eligible frontier by path distance (ties: lowest voxel
    index), scan there and retire it. False when no eligible frontier is left.

    `box` defaults to the configured exploration box. With `near`, only
    frontiers within `radius_m` of one of those voxels are eligible.
    """
    if box is None:
        box = config.exploration_bounds(world.bounds, world.voxel_size)
    frontiers = [f for f in detect_frontiers(state.grid, box) if f not in state.retired]
    if near:
        frontiers = _near(frontiers, near, radius_m / world.voxel_size)
    if not frontiers:
        return False

    field = distance_field(state.grid, state.pose.position, config.clearance)
    reachable = []
    for f in frontiers:
        d = field.at(f)
        if d == float("inf"):
            # focused frontiers may become reachable as the map grows
            if not near:
                state.retired.add(f)
        else:
            reachable.append((d, f))
    if not reachable:
        logger.debug(f"[frontier] {len(frontiers)} frontiers, none reachable")
        return False

    _, target = min(reachable)
    try:
        path = plan_path(state.grid, state.pose.position, center_of(target, world.voxel_size), config.clearance)
    except NavigationError as e:
        logger.debug(f"[frontier] {target}: {e}")
        state.retired.add(target)
        return True

    fly_segment(state, path, world, config, opportunistic=opportunistic)
    take_scan(state, world, config)
    if opportunistic:
        credit(state, config)
    _retire_near(state, target, frontiers, config.frontier_retire_radius)
    return True


def run_frontier_mission(world: WorldModel, config: ScenarioConfig) -> MissionLog:
    """Explore until no eligible frontier remains, counting inspections on the way."""
    box = config.exploration_bounds(world.bounds, world.voxel_size)
    if not box.contains(config.start_voxel(world.voxel_size)):
        raise ExplorationBoxError("start pose lies outside the bounding box")

    state = MissionState.start(world, config, planner="frontier")
    state.phase = "explore"
    take_scan(state, world, config)
    credit(state, config)

    steps = 0
    while frontier_step(state, world, config, opportunistic=True):
        steps += 1
    state.log.outcome = "explored"
    state.log.final_grid = state.grid
    record(state, "done")
    logger.info(
        f"[frontier] {steps} steps, {state.distance_flown:.1f} m, "
        f"{100.0 * state.log.final_pct:.1f}% inspected"
    )
    return state.log
