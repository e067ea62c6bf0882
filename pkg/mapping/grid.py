"""
Online semantic occupancy grid.

Deterministic set/clear occupancy: a voxel traversed by a ray becomes Free
unless it is already occupied, the voxel a ray stops in becomes Obstacle or
BridgeNotInspected. Occupied states never revert, BridgeInspected is absorbing,
and the first observation decides bridge vs obstacle.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import IntEnum
from typing import Dict, FrozenSet, NamedTuple, Sequence, Tuple

import numpy as np

from sensing.lidar import LabeledScan
from tools.geometry import Bounds, Index, voxel_of
from tools.raycast import traverse
from world.model import Label

logger = logging.getLogger("gatsbi.mapping")


class CellState(IntEnum):
    UNKNOWN = 0
    FREE = 1
    OBSTACLE = 2
    BRIDGE_NOT_INSPECTED = 3
    BRIDGE_INSPECTED = 4


UNKNOWN = int(CellState.UNKNOWN)
FREE = int(CellState.FREE)
OBSTACLE = int(CellState.OBSTACLE)
BN = int(CellState.BRIDGE_NOT_INSPECTED)
BI = int(CellState.BRIDGE_INSPECTED)


class NotAwaitingInspectionError(ValueError):
    pass


class VoxelSets(NamedTuple):
    free: FrozenSet[Index]
    inspected: FrozenSet[Index]
    not_inspected: FrozenSet[Index]
    obstacle: FrozenSet[Index]


@dataclass
class MutationReport:
    new_free: int = 0
    new_obstacle: int = 0
    new_bridge: int = 0

    @property
    def total(self) -> int:
        return self.new_free + self.new_obstacle + self.new_bridge


class SemanticOccupancyGrid:
    """Belief over a fixed voxel box; cells outside the box read as Unknown."""

    def __init__(self, voxel_size: float, bounds: Bounds):
        if voxel_size <= 0:
            raise ValueError("voxel_size must be positive")
        self.voxel_size = float(voxel_size)
        self.bounds = bounds
        self.state = np.zeros(bounds.shape, dtype=np.int8)
        # bumped on every occupancy change; nav keys its caches on it
        self.version = 0

    @classmethod
    def like(cls, world) -> "SemanticOccupancyGrid":
        return cls(world.voxel_size, world.bounds)

    def copy(self) -> "SemanticOccupancyGrid":
        g = SemanticOccupancyGrid(self.voxel_size, self.bounds)
        g.state = self.state.copy()
        g.version = self.version
        return g

    # ---------- queries ----------

    def state_at(self, idx: Sequence[int]) -> CellState:
        if not self.bounds.contains(idx):
            return CellState.UNKNOWN
        return CellState(int(self.state[self.bounds.local(idx)]))

    def code_at(self, idx: Sequence[int]) -> int:
        if not self.bounds.contains(idx):
            return UNKNOWN
        lo = self.bounds.lo
        return int(self.state[idx[0] - lo[0], idx[1] - lo[1], idx[2] - lo[2]])

    def is_free(self, idx: Sequence[int]) -> bool:
        return self.code_at(idx) == FREE

    def is_occupied(self, idx: Sequence[int]) -> bool:
        return self.code_at(idx) >= OBSTACLE

    def voxel_of(self, p: Sequence[float]) -> Index:
        return voxel_of(p, self.voxel_size)

    def counts(self) -> Dict[str, int]:
        s = self.state
        return {
            "v_f": int(np.count_nonzero(s == FREE)),
            "v_o": int(np.count_nonzero(s == OBSTACLE)),
            "v_bn": int(np.count_nonzero(s == BN)),
            "v_bi": int(np.count_nonzero(s == BI)),
        }

    def cells_in(self, code: int) -> list:
        return sorted(self.bounds.glob(loc) for loc in np.argwhere(self.state == code))

    def occupied_mask(self) -> np.ndarray:
        return self.state >= OBSTACLE

    # ---------- mutation ----------

    def set_free(self, idx: Sequence[int]) -> bool:
        """Mark a voxel Free if it is Unknown. Returns True on change."""
        if not self.bounds.contains(idx):
            return False
        loc = self.bounds.local(idx)
        if self.state[loc] == UNKNOWN:
            self.state[loc] = FREE
            self.version += 1
            return True
        return False


def integrate_scan(grid: SemanticOccupancyGrid, scan: LabeledScan) -> MutationReport:
    """Carve free space along every ray and record the labeled hit voxels."""
    report = MutationReport()
    st = grid.state
    lo = grid.bounds.lo
    vs = grid.voxel_size
    origin = scan.origin

    o = voxel_of(origin, vs)
    if not grid.bounds.contains(o):
        raise ValueError(f"scan origin {origin} outside grid bounds")
    if grid.set_free(o):
        report.new_free += 1

    for r in scan.returns:
        target = r.voxel
        for v, _ in traverse(origin, r.direction, scan.range_max, vs, grid.bounds):
            if v == target:
                break
            loc = (v[0] - lo[0], v[1] - lo[1], v[2] - lo[2])
            if st[loc] == UNKNOWN:
                st[loc] = FREE
                report.new_free += 1
        if not grid.bounds.contains(target):
            continue
        loc = (target[0] - lo[0], target[1] - lo[1], target[2] - lo[2])
        cur = st[loc]
        if cur == UNKNOWN or cur == FREE:
            if r.label is Label.BRIDGE:
                st[loc] = BN
                report.new_bridge += 1
            else:
                st[loc] = OBSTACLE
                report.new_obstacle += 1

    for m in scan.misses:
        for v, _ in traverse(origin, m.direction, scan.range_max, vs, grid.bounds):
            loc = (v[0] - lo[0], v[1] - lo[1], v[2] - lo[2])
            if st[loc] == UNKNOWN:
                st[loc] = FREE
                report.new_free += 1

    if report.total:
        grid.version += 1
    return report


def mark_inspected(grid: SemanticOccupancyGrid, idx: Sequence[int]) -> None:
    if grid.code_at(idx) != BN:
        raise NotAwaitingInspectionError("not awaiting inspection")
    grid.state[grid.bounds.local(idx)] = BI


def voxel_sets(grid: SemanticOccupancyGrid) -> VoxelSets:
    return VoxelSets(
        free=frozenset(grid.cells_in(FREE)),
        inspected=frozenset(grid.cells_in(BI)),
        not_inspected=frozenset(grid.cells_in(BN)),
        obstacle=frozenset(grid.cells_in(OBSTACLE)),
    )


def knowledge_signature(grid: SemanticOccupancyGrid) -> Tuple[int, int, int]:
    """Changes only when something new is mapped; inspection does not count."""
    c = grid.counts()
    return (c["v_f"], c["v_o"], c["v_bn"] + c["v_bi"])
