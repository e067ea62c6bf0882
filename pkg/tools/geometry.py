from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterator, Sequence, Tuple

import numpy as np
from scipy import ndimage

Index = Tuple[int, int, int]
Point = Tuple[float, float, float]

# 26-neighborhood offsets, sorted so iteration order is deterministic
NEIGHBORS_26: Tuple[Index, ...] = tuple(
    (dx, dy, dz)
    for dx in (-1, 0, 1)
    for dy in (-1, 0, 1)
    for dz in (-1, 0, 1)
    if (dx, dy, dz) != (0, 0, 0)
)
NEIGHBORS_6: Tuple[Index, ...] = (
    (-1, 0, 0), (1, 0, 0), (0, -1, 0), (0, 1, 0), (0, 0, -1), (0, 0, 1),
)


class Face(Enum):
    """Axis-aligned voxel face, named by its outward normal."""

    PX = "+x"
    NX = "-x"
    PY = "+y"
    NY = "-y"
    PZ = "+z"
    NZ = "-z"

    @property
    def axis(self) -> int:
        return "xyz".index(self.value[1])

    @property
    def sign(self) -> int:
        return 1 if self.value[0] == "+" else -1

    @property
    def normal(self) -> Index:
        n = [0, 0, 0]
        n[self.axis] = self.sign
        return (n[0], n[1], n[2])


FACES: Tuple[Face, ...] = tuple(Face)


@dataclass(frozen=True)
class Bounds:
    """Half-open voxel index box: lo <= idx < hi on every axis."""

    lo: Index
    hi: Index

    def __post_init__(self) -> None:
        if any(h <= l for l, h in zip(self.lo, self.hi)):
            raise ValueError(f"degenerate bounds {self.lo}..{self.hi}")

    @property
    def shape(self) -> Index:
        return (self.hi[0] - self.lo[0], self.hi[1] - self.lo[1], self.hi[2] - self.lo[2])

    def contains(self, idx: Sequence[int]) -> bool:
        return (
            self.lo[0] <= idx[0] < self.hi[0]
            and self.lo[1] <= idx[1] < self.hi[1]
            and self.lo[2] <= idx[2] < self.hi[2]
        )

    def local(self, idx: Sequence[int]) -> Index:
        return (idx[0] - self.lo[0], idx[1] - self.lo[1], idx[2] - self.lo[2])

    def glob(self, local: Sequence[int]) -> Index:
        return (int(local[0]) + self.lo[0], int(local[1]) + self.lo[1], int(local[2]) + self.lo[2])

    def indices(self) -> Iterator[Index]:
        for ix in range(self.lo[0], self.hi[0]):
            for iy in range(self.lo[1], self.hi[1]):
                for iz in range(self.lo[2], self.hi[2]):
                    yield (ix, iy, iz)


def voxel_of(p: Sequence[float], voxel_size: float) -> Index:
    return (
        int(math.floor(p[0] / voxel_size)),
        int(math.floor(p[1] / voxel_size)),
        int(math.floor(p[2] / voxel_size)),
    )


def center_of(idx: Sequence[int], voxel_size: float) -> Point:
    return (
        (idx[0] + 0.5) * voxel_size,
        (idx[1] + 0.5) * voxel_size,
        (idx[2] + 0.5) * voxel_size,
    )


def face_center(idx: Sequence[int], face: Face, voxel_size: float) -> Point:
    c = list(center_of(idx, voxel_size))
    c[face.axis] += 0.5 * face.sign * voxel_size
    return (c[0], c[1], c[2])


def add(idx: Sequence[int], off: Sequence[int]) -> Index:
    return (idx[0] + off[0], idx[1] + off[1], idx[2] + off[2])


def distance(a: Sequence[float], b: Sequence[float]) -> float:
    return math.sqrt((a[0] - b[0]) ** 2 + (a[1] - b[1]) ** 2 + (a[2] - b[2]) ** 2)


def inflate(mask: np.ndarray, radius: int) -> np.ndarray:
    """Grow a boolean voxel mask by `radius` cells in Chebyshev distance."""
    if radius <= 0:
        return mask.copy()
    structure = np.ones((2 * radius + 1,) * 3, dtype=bool)
    return ndimage.binary_dilation(mask, structure=structure)


def component_of(mask: np.ndarray, seed: Sequence[int]) -> np.ndarray:
    """26-connected component of `mask` containing local index `seed`."""
    labeled, _ = ndimage.label(mask, structure=np.ones((3, 3, 3), dtype=bool))
    tag = labeled[tuple(seed)]
    if tag == 0:
        return np.zeros_like(mask, dtype=bool)
    return labeled == tag
