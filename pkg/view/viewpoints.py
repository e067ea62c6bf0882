"""
VIEW predicate and candidate viewpoint enumeration.

A face of a bridge voxel is viewable from a free voxel when the face center
lies inside the viewing-distance band, the incidence angle between the face
normal and the face-to-viewpoint vector stays within half the apex angle
(plus tolerance), the segment between them crosses only known free space, and
the voxel in front of the face is not occupied.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import List, Protocol, Sequence, Tuple

import numpy as np

from mapping.grid import BN, FREE, OBSTACLE
from tools.geometry import FACES, Bounds, Face, Index, Point, add, center_of, face_center
from tools.raycast import segment_voxels
from view.spec import ViewSpec

logger = logging.getLogger("gatsbi.view")

_EPS = 1e-9


class OccupancyView(Protocol):
    """What VIEW needs from a grid: cell codes in mapping.grid terms."""

    voxel_size: float
    bounds: Bounds

    def code_at(self, idx: Sequence[int]) -> int: ...


@dataclass(frozen=True)
class Candidate:
    free_voxel: Index
    bridge_voxel: Index
    face: Face
    position: Point
    yaw: float
    pitch: float

    @property
    def sort_key(self) -> Tuple[Index, int, Index]:
        return (self.bridge_voxel, FACES.index(self.face), self.free_voxel)


def _aim(src: Point, dst: Point) -> Tuple[float, float]:
    dx, dy, dz = dst[0] - src[0], dst[1] - src[1], dst[2] - src[2]
    return math.atan2(dy, dx), math.atan2(dz, math.hypot(dx, dy))


def is_viewable(grid: OccupancyView, free_voxel: Index, bridge_voxel: Index, face: Face, spec: ViewSpec) -> bool:
    if grid.code_at(free_voxel) != FREE:
        return False
    if grid.code_at(bridge_voxel) < BN:
        return False
    if grid.code_at(add(bridge_voxel, face.normal)) >= OBSTACLE:
        return False

    vs = grid.voxel_size
    fc = face_center(bridge_voxel, face, vs)
    pc = center_of(free_voxel, vs)
    w = (pc[0] - fc[0], pc[1] - fc[1], pc[2] - fc[2])
    dist = math.sqrt(w[0] * w[0] + w[1] * w[1] + w[2] * w[2])
    if dist < spec.d_min * (1.0 - _EPS) or dist > spec.d_max * (1.0 + _EPS):
        return False

    along = w[face.axis] * face.sign
    if along <= 0.0:
        return False
    if along / dist < math.cos(spec.max_incidence_rad) - _EPS:
        return False

    for v in segment_voxels(pc, fc, vs, grid.bounds):
        if v != bridge_voxel and grid.code_at(v) != FREE:
            return False
    return True


@lru_cache(maxsize=64)
def face_offsets(face: Face, spec: ViewSpec, voxel_size: float) -> Tuple[Index, ...]:
    """
    Integer offsets k (free voxel = bridge voxel + k) that can satisfy the
    distance band and cone for `face`, ascending. A slightly loose superset;
    is_viewable makes the final call.
    """
    reach = int(math.ceil(spec.d_max / voxel_size)) + 1
    r = np.arange(-reach, reach + 1)
    kx, ky, kz = np.meshgrid(r, r, r, indexing="ij")
    k = np.stack([kx.ravel(), ky.ravel(), kz.ravel()], axis=1)
    w = (k - 0.5 * np.array(face.normal)) * voxel_size
    dist = np.linalg.norm(w, axis=1)
    along = w[:, face.axis] * face.sign
    loose = 1e-6
    keep = (
        (dist >= spec.d_min * (1.0 - loose))
        & (dist <= spec.d_max * (1.0 + loose))
        & (along > 0.0)
        & (along >= dist * (math.cos(spec.max_incidence_rad) - loose))
    )
    picked = sorted(tuple(int(c) for c in row) for row in k[keep])
    return tuple(picked)


def make_candidate(grid: OccupancyView, free_voxel: Index, bridge_voxel: Index, face: Face) -> Candidate:
    vs = grid.voxel_size
    pos = center_of(free_voxel, vs)
    yaw, pitch = _aim(pos, face_center(bridge_voxel, face, vs))
    return Candidate(free_voxel, bridge_voxel, face, pos, yaw, pitch)


def generate_viewpoints(grid, spec: ViewSpec) -> List[Candidate]:
    """
    Every (free voxel, not-yet-inspected bridge voxel, face) triple satisfying
    VIEW, ordered by bridge voxel, face, free voxel.
    """
    out: List[Candidate] = []
    bridge = grid.cells_in(BN)
    for b in bridge:
        for face in FACES:
            if grid.code_at(add(b, face.normal)) >= OBSTACLE:
                continue
            for k in face_offsets(face, spec, grid.voxel_size):
                f = add(b, k)
                if grid.code_at(f) != FREE:
                    continue
                if is_viewable(grid, f, b, face, spec):
                    out.append(make_candidate(grid, f, b, face))
    logger.debug(f"[view] {len(out)} candidates over {len(bridge)} uninspected voxels")
    return out


def viewable_from(
    grid: OccupancyView,
    free_voxel: Index,
    spec: ViewSpec,
    states: Tuple[int, ...] = (BN,),
) -> List[Tuple[Index, Face]]:
    """Bridge voxel faces (in the given states) inspectable from one free voxel."""
    if grid.code_at(free_voxel) != FREE:
        return []
    seen: List[Tuple[Index, Face]] = []
    for face in FACES:
        for k in face_offsets(face, spec, grid.voxel_size):
            b = (free_voxel[0] - k[0], free_voxel[1] - k[1], free_voxel[2] - k[2])
            if grid.code_at(b) not in states:
                continue
            if is_viewable(grid, free_voxel, b, face, spec):
                seen.append((b, face))
    seen.sort(key=lambda bf: (bf[0], FACES.index(bf[1])))
    return seen
