from __future__ import annotations

import math

from pydantic import BaseModel, ConfigDict, Field, model_validator


class ViewSpec(BaseModel):
    """Viewing cone and viewing distance band that define VIEW."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    apex_deg: float = Field(default=0.0, ge=0.0, lt=180.0, description="Full apex angle of the viewing cone")
    d_min: float = Field(default=2.0, gt=0.0, description="Minimum viewing distance, meters")
    d_max: float = Field(default=10.0, gt=0.0, description="Maximum viewing distance, meters")
    angle_tol_deg: float = Field(default=0.0, ge=0.0, lt=90.0, description="Slack added to the half apex angle")

    @model_validator(mode="after")
    def band_is_ordered(self) -> "ViewSpec":
        if not self.d_min < self.d_max:
            raise ValueError("d_min must be smaller than d_max")
        return self

    @property
    def max_incidence_rad(self) -> float:
        return math.radians(min(self.apex_deg / 2.0 + self.angle_tol_deg, 90.0))
