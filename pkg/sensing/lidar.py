"""
Spinning-LiDAR simulation by voxel raycasting against the ground truth.

Every return carries the oracle label of the voxel it hit (bridge or
obstacle); this stands in for camera-based semantic segmentation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from tools.geometry import Index, Point, voxel_of
from tools.raycast import traverse
from world.model import EMPTY, Label, WorldModel
from world.pose import Pose


class SensorEmbeddedError(ValueError):
    pass


class LidarSpec(BaseModel):
    """VLP-16-like defaults: 360 x 30 degrees, 100 m range."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    range_max: float = Field(default=100.0, gt=0.0)
    horizontal_fov: float = Field(default=360.0, gt=0.0, le=360.0)
    vertical_fov_min: float = Field(default=-15.0, ge=-90.0, le=90.0)
    vertical_fov_max: float = Field(default=15.0, ge=-90.0, le=90.0)
    azimuth_steps: int = Field(default=360, ge=1)
    elevation_steps: int = Field(default=16, ge=1)
    label_noise: float = Field(default=0.0, ge=0.0, le=1.0, description="Per-return label flip probability")

    @model_validator(mode="after")
    def fov_is_ordered(self) -> "LidarSpec":
        if self.vertical_fov_min > self.vertical_fov_max:
            raise ValueError("vertical_fov_min must not exceed vertical_fov_max")
        return self

    def azimuths_deg(self) -> List[float]:
        n = self.azimuth_steps
        if self.horizontal_fov >= 360.0:
            return [i * 360.0 / n for i in range(n)]
        if n == 1:
            return [0.0]
        half = self.horizontal_fov / 2.0
        return [-half + i * self.horizontal_fov / (n - 1) for i in range(n)]

    def elevations_deg(self) -> List[float]:
        n = self.elevation_steps
        if n == 1:
            return [(self.vertical_fov_min + self.vertical_fov_max) / 2.0]
        span = self.vertical_fov_max - self.vertical_fov_min
        return [self.vertical_fov_min + i * span / (n - 1) for i in range(n)]


@dataclass(frozen=True)
class ScanReturn:
    azimuth: float
    elevation: float
    direction: Point
    voxel: Index
    point: Point
    label: Label


@dataclass(frozen=True)
class ScanMiss:
    azimuth: float
    elevation: float
    direction: Point


@dataclass
class LabeledScan:
    origin: Point
    range_max: float
    returns: List[ScanReturn] = field(default_factory=list)
    misses: List[ScanMiss] = field(default_factory=list)

    @property
    def ray_count(self) -> int:
        return len(self.returns) + len(self.misses)


def _snap(c: float) -> float:
    return 0.0 if abs(c) < 1e-12 else c


def ray_directions(yaw: float, spec: LidarSpec) -> List[Tuple[float, float, Point]]:
    """(azimuth deg, elevation deg, unit direction) per ray, azimuth-major."""
    out: List[Tuple[float, float, Point]] = []
    for az in spec.azimuths_deg():
        a = yaw + math.radians(az)
        for el in spec.elevations_deg():
            e = math.radians(el)
            d = (_snap(math.cos(e) * math.cos(a)), _snap(math.cos(e) * math.sin(a)), _snap(math.sin(e)))
            out.append((az, el, d))
    return out


def simulate_scan(
    world: WorldModel,
    pose: Pose,
    spec: LidarSpec,
    rng: Optional[np.random.Generator] = None,
) -> LabeledScan:
    """
    Cast azimuth_steps x elevation_steps rays from the pose. The first occupied
    voxel on a ray yields a return at the ray's entry point into that voxel;
    rays that run out of range or leave the world are misses.
    """
    origin = tuple(float(c) for c in pose.position)
    vs = world.voxel_size
    start = voxel_of(origin, vs)
    if not world.bounds.contains(start):
        raise ValueError(f"sensor pose {origin} outside world bounds")
    if world.is_occupied(start):
        raise SensorEmbeddedError("sensor embedded in geometry")
    if spec.label_noise > 0.0 and rng is None:
        raise ValueError("label noise requires an rng")

    labels = world.labels
    lo = world.bounds.lo
    scan = LabeledScan(origin=origin, range_max=spec.range_max)  # type: ignore[arg-type]

    for az, el, d in ray_directions(pose.yaw, spec):
        hit = None
        for v, t in traverse(origin, d, spec.range_max, vs, world.bounds):
            code = labels[v[0] - lo[0], v[1] - lo[1], v[2] - lo[2]]
            if code != EMPTY:
                hit = (v, t, int(code))
                break
        if hit is None:
            scan.misses.append(ScanMiss(az, el, d))
            continue
        v, t, code = hit
        label = Label.BRIDGE if code == Label.BRIDGE.code else Label.OBSTACLE
        if spec.label_noise > 0.0 and rng.random() < spec.label_noise:
            label = Label.OBSTACLE if label is Label.BRIDGE else Label.BRIDGE
        point = (origin[0] + d[0] * t, origin[1] + d[1] * t, origin[2] + d[2] * t)
        scan.returns.append(ScanReturn(az, el, d, v, point, label))

    return scan
