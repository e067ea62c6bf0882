from __future__ import annotations
import json
import os
from typing import List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from tools.geometry import Bounds
from world.config import AxisBox, ScenarioConfig, Vec3
from world.model import Box, EmptyWorldError, Label, WorldModel, world_from_primitives, world_to_shapes

SCHEMA_VERSION = "1.0.0"

# fields that describe the world rather than the mission
WORLD_FIELDS = ("voxel_size", "bounds", "shapes")


class ScenarioError(ValueError):
    """Parse or validation failure; `field` is the dotted path when known."""

    def __init__(self, message: str, field: Optional[str] = None):
        super().__init__(f"{field}: {message}" if field else message)
        self.field = field


class ShapeSpec(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    label: Literal["bridge", "obstacle"]
    min: Vec3
    max: Vec3

    @model_validator(mode="after")
    def positive_extent(self) -> "ShapeSpec":
        if any(h <= l for l, h in zip(self.min, self.max)):
            raise ValueError("max must exceed min on every axis")
        return self

    def to_shape(self) -> Tuple[Box, Label]:
        return Box(self.min, self.max), Label(self.label)


class ScenarioDocument(ScenarioConfig):
    """On-disk scenario: mission config plus the world description."""

    voxel_size: float = Field(gt=0.0)
    bounds: Optional[AxisBox] = Field(default=None, description="World extents in meters; default is the shape hull plus margin")
    shapes: List[ShapeSpec]
    dd: Optional[float] = Field(default=None, gt=0.0, description="Discrepancy distance; default 2 x voxel_size")

    def to_config(self) -> ScenarioConfig:
        data = self.model_dump(exclude=set(WORLD_FIELDS))
        if data["dd"] is None:
            data["dd"] = 2.0 * self.voxel_size
        return ScenarioConfig.model_validate(data)


def _first_error(e: ValidationError) -> ScenarioError:
    err = e.errors()[0]
    loc = ".".join(str(p) for p in err.get("loc", ())) or None
    return ScenarioError(err.get("msg", "invalid value"), loc)


def check_start(world: WorldModel, config: ScenarioConfig) -> None:
    v = config.start_voxel(world.voxel_size)
    if not world.bounds.contains(v):
        raise ScenarioError(f"start pose {config.start_pose.position} lies outside the world", "start_pose")
    if world.is_occupied(v):
        raise ScenarioError(f"start pose {config.start_pose.position} lies in an occupied voxel", "start_pose")


def parse_document(text: str) -> ScenarioDocument:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ScenarioError(f"invalid JSON at line {e.lineno} column {e.colno}: {e.msg}")
    if not isinstance(data, dict):
        raise ScenarioError("scenario document must be a JSON object")
    try:
        return ScenarioDocument.model_validate(data)
    except ValidationError as e:
        raise _first_error(e) from e


def build(doc: ScenarioDocument) -> Tuple[WorldModel, ScenarioConfig]:
    bounds: Optional[Bounds] = doc.bounds.to_bounds(doc.voxel_size) if doc.bounds else None
    try:
        world = world_from_primitives([s.to_shape() for s in doc.shapes], doc.voxel_size, bounds)
    except EmptyWorldError as e:
        raise ScenarioError(str(e), "shapes") from e
    try:
        config = doc.to_config()
    except ValidationError as e:
        raise _first_error(e) from e
    check_start(world, config)
    return world, config


def load_world(text: str) -> Tuple[WorldModel, ScenarioConfig]:
    """Scenario document text -> (world, config). Same text, same model."""
    return build(parse_document(text))


def load_world_file(path: str) -> Tuple[WorldModel, ScenarioConfig]:
    try:
        with open(path, "r", encoding="utf-8") as f:
            text = f.read()
    except OSError as e:
        raise ScenarioError(f"cannot read {path}: {e.strerror or e}")
    return load_world(text)


def document_for(world: WorldModel, config: ScenarioConfig) -> dict:
    vs = world.voxel_size
    b = world.bounds
    doc = config.model_dump(mode="json")
    doc["voxel_size"] = vs
    doc["bounds"] = {"min": [c * vs for c in b.lo], "max": [c * vs for c in b.hi]}
    doc["shapes"] = [
        {"label": label.value, "min": list(box.lo), "max": list(box.hi)}
        for box, label in world_to_shapes(world)
    ]
    return doc


def dump_world(world: WorldModel, config: ScenarioConfig) -> str:
    """Scenario document text that load_world turns back into the same cells and bounds."""
    return json.dumps(document_for(world, config), indent=2) + "\n"


def write_world_file(path: str, world: WorldModel, config: ScenarioConfig) -> str:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        f.write(dump_world(world, config))
    return path
