from __future__ import annotations

import math
from typing import Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator


class Pose(BaseModel):
    """Position in meters plus yaw in radians (camera pitch is free)."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    position: Tuple[float, float, float]
    yaw: float = Field(default=0.0, description="Heading about +z, radians")

    @field_validator("position")
    @classmethod
    def finite_position(cls, v):
        if not all(math.isfinite(c) for c in v):
            raise ValueError("position must be finite")
        return v

    def moved_to(self, position, yaw: Optional[float] = None) -> "Pose":
        return Pose(position=tuple(float(c) for c in position), yaw=self.yaw if yaw is None else yaw)
