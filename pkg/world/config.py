from __future__ import annotations

import math
from typing import Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from planners.gtsp import SolverBudget
from sensing.lidar import LidarSpec
from tools.geometry import Bounds, voxel_of
from view.spec import ViewSpec
from world.pose import Pose

Vec3 = Tuple[float, float, float]


class AxisBox(BaseModel):
    """Axis-aligned box in meters."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    min: Vec3
    max: Vec3

    @model_validator(mode="after")
    def positive_extent(self) -> "AxisBox":
        if any(h <= l for l, h in zip(self.min, self.max)):
            raise ValueError("max must exceed min on every axis")
        return self

    def contains(self, p) -> bool:
        return all(l <= c <= h for l, c, h in zip(self.min, p, self.max))

    def to_bounds(self, voxel_size: float) -> Bounds:
        lo = tuple(int(math.floor(c / voxel_size + 1e-9)) for c in self.min)
        hi = tuple(int(math.ceil(c / voxel_size - 1e-9)) for c in self.max)
        return Bounds(lo, hi)  # type: ignore[arg-type]


class ScenarioConfig(BaseModel):
    """Everything a mission needs besides the world itself."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    name: str = "scenario"
    start_pose: Pose
    view: ViewSpec = Field(default_factory=ViewSpec)
    lidar: LidarSpec = Field(default_factory=LidarSpec)
    dd: float = Field(gt=0.0, description="Discrepancy distance, meters")
    rpt: float = Field(default=120.0, gt=0.0, description="Replan time limit, simulated seconds")
    flight_speed: float = Field(default=2.0, gt=0.0)
    scan_period: float = Field(default=1.0, gt=0.0)
    rng_seed: int = Field(default=0, ge=0, lt=2**64)
    bounding_box: Optional[AxisBox] = None
    clearance: int = Field(default=1, ge=0, description="Obstacle inflation for flight, voxels")
    opportunistic: bool = False
    max_replan_retries: int = Field(default=8, ge=0)
    max_plan_iterations: int = Field(default=400, ge=1)
    frontier_retire_radius: int = Field(default=1, ge=0)
    solver: SolverBudget = Field(default_factory=SolverBudget)

    @field_validator("name")
    @classmethod
    def non_empty_name(cls, v: str) -> str:
        if not v.strip():
            raise ValueError("name must be a non-empty string")
        return v

    def exploration_bounds(self, world_bounds: Bounds, voxel_size: float) -> Bounds:
        """Voxel box the frontier search is restricted to."""
        if self.bounding_box is None:
            return world_bounds
        b = self.bounding_box.to_bounds(voxel_size)
        lo = tuple(max(a, c) for a, c in zip(b.lo, world_bounds.lo))
        hi = tuple(min(a, c) for a, c in zip(b.hi, world_bounds.hi))
        return Bounds(lo, hi)  # type: ignore[arg-type]

    def start_voxel(self, voxel_size: float):
        return voxel_of(self.start_pose.position, voxel_size)
