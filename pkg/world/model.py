from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from tools.geometry import Bounds, Index, Point

# default free margin around the shape hull; must exceed d_max plus clearance
DEFAULT_MARGIN_M = 12.0

EMPTY = 0
BRIDGE = 1
OBSTACLE = 2


class Label(Enum):
    BRIDGE = "bridge"
    OBSTACLE = "obstacle"

    @property
    def code(self) -> int:
        return BRIDGE if self is Label.BRIDGE else OBSTACLE


class EmptyWorldError(ValueError):
    pass


@dataclass(frozen=True)
class Box:
    """Axis-aligned box in meters."""

    lo: Point
    hi: Point

    def __post_init__(self) -> None:
        if any(h <= l for l, h in zip(self.lo, self.hi)):
            raise ValueError(f"box {self.lo}..{self.hi} has non-positive extent")

    def index_range(self, voxel_size: float) -> Tuple[Index, Index]:
        """Half-open range of voxel indices whose centers lie inside the box."""
        lo = tuple(int(math.ceil(c / voxel_size - 0.5)) for c in self.lo)
        hi = tuple(int(math.ceil(c / voxel_size - 0.5)) for c in self.hi)
        return lo, hi  # type: ignore[return-value]


Shape = Tuple[Box, Label]


@dataclass(frozen=True, eq=False)
class WorldModel:
    """
    Ground-truth voxel world. Immutable: the label array is read-only and
    nothing mutates it after construction, so one instance can be shared by
    concurrent scenario runs.
    """

    voxel_size: float
    bounds: Bounds
    labels: np.ndarray

    def __post_init__(self) -> None:
        voxel_size, bounds, labels = self.voxel_size, self.bounds, self.labels
        if voxel_size <= 0:
            raise ValueError("voxel_size must be positive")
        if tuple(labels.shape) != bounds.shape:
            raise ValueError(f"label array {labels.shape} does not match bounds {bounds.shape}")
        if not np.isin(labels, (EMPTY, BRIDGE, OBSTACLE)).all():
            raise ValueError("labels must be empty, bridge or obstacle")
        arr = np.array(labels, dtype=np.int8, copy=True)
        arr.setflags(write=False)
        object.__setattr__(self, "voxel_size", float(voxel_size))
        object.__setattr__(self, "labels", arr)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, WorldModel):
            return NotImplemented
        return (
            self.voxel_size == other.voxel_size
            and self.bounds == other.bounds
            and np.array_equal(self.labels, other.labels)
        )

    def __repr__(self) -> str:
        n_b = int((self.labels == BRIDGE).sum())
        n_o = int((self.labels == OBSTACLE).sum())
        return f"WorldModel(voxel_size={self.voxel_size}, bounds={self.bounds}, bridge={n_b}, obstacle={n_o})"

    @property
    def cells(self) -> Dict[Index, Label]:
        out: Dict[Index, Label] = {}
        for code, label in ((BRIDGE, Label.BRIDGE), (OBSTACLE, Label.OBSTACLE)):
            for loc in np.argwhere(self.labels == code):
                out[self.bounds.glob(loc)] = label
        return dict(sorted(out.items()))

    def code_at(self, idx: Sequence[int]) -> int:
        if not self.bounds.contains(idx):
            return EMPTY
        return int(self.labels[self.bounds.local(idx)])

    def label_at(self, idx: Sequence[int]) -> Optional[Label]:
        code = self.code_at(idx)
        if code == BRIDGE:
            return Label.BRIDGE
        if code == OBSTACLE:
            return Label.OBSTACLE
        return None

    def is_occupied(self, idx: Sequence[int]) -> bool:
        return self.code_at(idx) != EMPTY

    def is_empty_cell(self, idx: Sequence[int]) -> bool:
        """In bounds and unoccupied."""
        return self.bounds.contains(idx) and self.code_at(idx) == EMPTY

    def bridge_voxels(self) -> List[Index]:
        return sorted(self.bounds.glob(loc) for loc in np.argwhere(self.labels == BRIDGE))

    def occupied_mask(self) -> np.ndarray:
        return self.labels != EMPTY


def hull_bounds(shapes: Iterable[Shape], voxel_size: float, margin: float) -> Bounds:
    m = int(math.ceil(margin / voxel_size))
    lo = [None, None, None]
    hi = [None, None, None]
    for box, _ in shapes:
        for a in range(3):
            l = int(math.floor(box.lo[a] / voxel_size)) - m
            h = int(math.ceil(box.hi[a] / voxel_size)) + m
            lo[a] = l if lo[a] is None else min(lo[a], l)
            hi[a] = h if hi[a] is None else max(hi[a], h)
    return Bounds((lo[0], lo[1], lo[2]), (hi[0], hi[1], hi[2]))  # type: ignore[arg-type]


def world_from_primitives(
    shapes: Sequence[Shape],
    voxel_size: float,
    bounds: Optional[Bounds] = None,
    margin: float = DEFAULT_MARGIN_M,
) -> WorldModel:
    """
    Voxelize labeled boxes. A voxel receives a label when its center lies in
    the box; Bridge wins over Obstacle where boxes overlap. Without explicit
    bounds the world spans the shape hull grown by `margin` meters.
    """
    if not shapes:
        raise EmptyWorldError("empty world")
    if voxel_size <= 0:
        raise ValueError("voxel_size must be positive")

    b = bounds or hull_bounds(shapes, voxel_size, margin)
    labels = np.zeros(b.shape, dtype=np.int8)

    # obstacles first so bridge boxes overwrite them
    ordered = [s for s in shapes if s[1] is Label.OBSTACLE] + [s for s in shapes if s[1] is Label.BRIDGE]
    for box, label in ordered:
        lo, hi = box.index_range(voxel_size)
        sl = []
        for a in range(3):
            l = max(lo[a], b.lo[a]) - b.lo[a]
            h = min(hi[a], b.hi[a]) - b.lo[a]
            sl.append(slice(l, max(l, h)))
        labels[tuple(sl)] = label.code

    return WorldModel(voxel_size, b, labels)


def world_to_shapes(world: WorldModel) -> List[Shape]:
    """Per-row x-runs of same-label voxels, one box each; voxelizes back exactly."""
    vs = world.voxel_size
    shapes: List[Shape] = []
    sx, sy, sz = world.bounds.shape
    for ly in range(sy):
        for lz in range(sz):
            row = world.labels[:, ly, lz]
            lx = 0
            while lx < sx:
                code = int(row[lx])
                if code == EMPTY:
                    lx += 1
                    continue
                start = lx
                while lx < sx and int(row[lx]) == code:
                    lx += 1
                ix0, iy, iz = world.bounds.glob((start, ly, lz))
                ix1 = ix0 + (lx - start)
                box = Box((ix0 * vs, iy * vs, iz * vs), (ix1 * vs, (iy + 1) * vs, (iz + 1) * vs))
                shapes.append((box, Label.BRIDGE if code == BRIDGE else Label.OBSTACLE))
    return shapes
