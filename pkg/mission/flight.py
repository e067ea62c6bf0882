"""
Flight, scanning and inspection bookkeeping shared by the GATSBI executor and
the frontier baseline. The two planners differ only in how they pick where to
fly next.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import FrozenSet, Optional, Set, Tuple

import numpy as np

from mapping.grid import BN, SemanticOccupancyGrid, integrate_scan, mark_inspected
from planners.nav import GridPath
from sensing.lidar import simulate_scan
from tools.geometry import Index, distance
from view.viewpoints import viewable_from
from world.config import ScenarioConfig
from world.model import WorldModel
from world.oracle import inspectable_set
from world.pose import Pose

from mission.log import Inspection, MissionLog, TimelineRow

logger = logging.getLogger("gatsbi.mission")

_EPS = 1e-9


@dataclass
class MissionState:
    grid: SemanticOccupancyGrid
    pose: Pose
    inspectable: FrozenSet[Index]
    rng: np.random.Generator
    log: MissionLog
    clock: float = 0.0
    distance_flown: float = 0.0
    next_scan: float = 0.0
    phase: str = "bootstrap"
    replan_idx: int = 0
    # lazy edge costs, keyed like GtspInstance.overrides; kept for the whole mission
    overrides: dict = field(default_factory=dict)
    excluded: Set[Tuple[Index, Index]] = field(default_factory=set)
    excluded_version: int = -1
    flagged_unreachable: Set[Index] = field(default_factory=set)
    retired: Set[Index] = field(default_factory=set)

    @classmethod
    def start(cls, world: WorldModel, config: ScenarioConfig, planner: str) -> "MissionState":
        grid = SemanticOccupancyGrid.like(world)
        inspectable = inspectable_set(world, config.view, config.clearance, config.start_pose.position)
        log = MissionLog(config.name, planner, config.rng_seed, inspectable=len(inspectable))
        return cls(
            grid=grid,
            pose=config.start_pose,
            inspectable=inspectable,
            rng=np.random.default_rng(config.rng_seed),
            log=log,
            next_scan=config.scan_period,
        )

    @property
    def voxel(self) -> Index:
        return self.grid.voxel_of(self.pose.position)


def percent(state: MissionState) -> float:
    """|V_BI ∩ I| / |I|; 1.0 when nothing is inspectable."""
    if not state.inspectable:
        return 1.0
    done = sum(1 for i in state.log.inspections if i.voxel in state.inspectable)
    return done / len(state.inspectable)


def record(state: MissionState, phase: Optional[str] = None) -> TimelineRow:
    c = state.grid.counts()
    row = TimelineRow(
        clock_s=state.clock,
        distance_m=state.distance_flown,
        v_f=c["v_f"],
        v_o=c["v_o"],
        v_bn=c["v_bn"],
        v_bi=c["v_bi"],
        pct_inspected=percent(state),
        phase=phase or state.phase,
    )
    state.log.timeline.append(row)
    return row


def take_scan(state: MissionState, world: WorldModel, config: ScenarioConfig) -> int:
    """Scan from the current pose and fold it into the belief. Returns cells changed."""
    scan = simulate_scan(world, state.pose, config.lidar, state.rng)
    report = integrate_scan(state.grid, scan)
    record(state)
    return report.total


def inspect(state: MissionState, voxel: Index) -> bool:
    if state.grid.code_at(voxel) != BN:
        return False
    mark_inspected(state.grid, voxel)
    state.log.inspections.append(Inspection(voxel, state.clock, state.phase))
    return True


def credit(state: MissionState, config: ScenarioConfig) -> int:
    """Inspect every uninspected face the camera could aim at from here."""
    hits = 0
    for b, _face in viewable_from(state.grid, state.voxel, config.view):
        if inspect(state, b):
            hits += 1
    if hits:
        record(state)
    return hits


def _heading(a, b, fallback: float) -> float:
    dx, dy = b[0] - a[0], b[1] - a[1]
    if abs(dx) < _EPS and abs(dy) < _EPS:
        return fallback
    return math.atan2(dy, dx)


def fly_segment(
    state: MissionState,
    path: GridPath,
    world: WorldModel,
    config: ScenarioConfig,
    opportunistic: Optional[bool] = None,
) -> int:
    """
    Fly the waypoint chain at flight_speed. Scans fire on every scan_period
    boundary of the mission clock, taken from the most recently reached
    waypoint. Returns the number of scans taken.
    """
    speed = config.flight_speed
    period = config.scan_period
    use_credit = config.opportunistic if opportunistic is None else opportunistic
    scans = 0
    flight_start = state.clock

    for voxel, wp in zip(path.voxels, path.waypoints):
        here = state.pose.position
        leg = distance(here, wp)
        if leg <= _EPS:
            continue
        t0, d0 = state.clock, state.distance_flown
        arrive = t0 + leg / speed
        while state.next_scan < arrive - _EPS:
            state.clock = max(t0, state.next_scan)
            state.distance_flown = d0 + (state.clock - t0) * speed
            take_scan(state, world, config)
            scans += 1
            state.next_scan += period
        state.pose = state.pose.moved_to(wp, _heading(here, wp, state.pose.yaw))
        state.clock = arrive
        state.distance_flown = d0 + leg
        state.log.trajectory.append(voxel)
        while state.next_scan <= state.clock + _EPS:
            take_scan(state, world, config)
            scans += 1
            state.next_scan += period
        if use_credit:
            credit(state, config)

    if state.log.timing and state.phase == "tour":
        state.log.timing[-1].flight_s += state.clock - flight_start
    logger.debug(f"[fly] {len(path.voxels)} waypoints, {path.length:.1f} m, {scans} scans")
    return scans

