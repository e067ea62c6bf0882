from __future__ import annotations

import logging
from typing import FrozenSet, Optional, Sequence

import numpy as np

from mapping.grid import BN, FREE, OBSTACLE, UNKNOWN
from tools.geometry import FACES, Bounds, Index, add, component_of, inflate, voxel_of
from view.spec import ViewSpec
from view.viewpoints import face_offsets, is_viewable
from world.model import BRIDGE, EMPTY, WorldModel

logger = logging.getLogger("gatsbi.world")


class GroundTruthView:
    """
    Full-knowledge stand-in for the belief grid: every in-bounds empty cell
    reads Free, bridge cells read BridgeNotInspected.
    """

    def __init__(self, world: WorldModel):
        self.voxel_size = world.voxel_size
        self.bounds: Bounds = world.bounds
        self._labels = world.labels

    def code_at(self, idx: Sequence[int]) -> int:
        if not self.bounds.contains(idx):
            return UNKNOWN
        lo = self.bounds.lo
        code = self._labels[idx[0] - lo[0], idx[1] - lo[1], idx[2] - lo[2]]
        if code == EMPTY:
            return FREE
        return BN if code == BRIDGE else OBSTACLE


def reachable_mask(world: WorldModel, clearance: int, start: Sequence[float]) -> np.ndarray:
    """Cells a UAV starting at `start` could reach keeping `clearance` from geometry."""
    occupied = world.occupied_mask()
    flyable = ~inflate(occupied, clearance) & ~occupied
    seed = world.bounds.local(voxel_of(start, world.voxel_size))
    flyable[seed] = not occupied[seed]
    return component_of(flyable, seed)


def inspectable_set(
    world: WorldModel,
    view: ViewSpec,
    clearance: int = 0,
    reachable_from: Optional[Sequence[float]] = None,
) -> FrozenSet[Index]:
    """
    Bridge voxels with at least one face viewable from an empty cell under
    full knowledge. `clearance` and `reachable_from` further restrict the
    viewpoints to cells a UAV could actually occupy and reach.
    """
    truth = GroundTruthView(world)
    bounds = world.bounds
    allowed = None
    if clearance > 0 or reachable_from is not None:
        occupied = world.occupied_mask()
        allowed = ~inflate(occupied, clearance) & ~occupied
        if reachable_from is not None:
            allowed = reachable_mask(world, clearance, reachable_from)

    out = set()
    for b in world.bridge_voxels():
        found = False
        for face in FACES:
            if truth.code_at(add(b, face.normal)) >= OBSTACLE:
                continue
            for k in face_offsets(face, view, world.voxel_size):
                f = add(b, k)
                if truth.code_at(f) != FREE:
                    continue
                if allowed is not None and not allowed[bounds.local(f)]:
                    continue
                if is_viewable(truth, f, b, face, view):
                    found = True
                    break
            if found:
                break
        if found:
            out.add(b)
    logger.debug(f"[oracle] {len(out)} inspectable of {len(world.bridge_voxels())} bridge voxels")
    return frozenset(out)
