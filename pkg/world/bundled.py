"""
Five box-composed bridge analogues: arch, covered, box girder, iron truss
and a steel girder bridge set in distractor terrain. All use 1 m voxels, a
ground slab labeled obstacle, a start pose about 6 m off one end of the deck
at deck height, and a bounding box roughly 6 m around the bridge.
"""

from __future__ import annotations

from typing import Dict, List, NamedTuple, Tuple

from planners.gtsp import SolverBudget
from sensing.lidar import LidarSpec
from view.spec import ViewSpec
from world.config import AxisBox, ScenarioConfig
from world.model import Box, Label, Shape, WorldModel, world_from_primitives
from world.pose import Pose

VOXEL_SIZE = 1.0
MARGIN = 12.0
HEADROOM = 12.0

BUNDLED_LIDAR = LidarSpec(range_max=40.0, azimuth_steps=180, elevation_steps=16)
BUNDLED_SOLVER = SolverBudget(max_iterations=800, max_stagnation=200, time_limit_s=15.0, trials=1)


class BundledScenario(NamedTuple):
    shapes: List[Shape]
    bounds: AxisBox
    config: ScenarioConfig


def _b(lo, hi) -> Shape:
    return Box(tuple(float(c) for c in lo), tuple(float(c) for c in hi)), Label.BRIDGE


def _o(lo, hi) -> Shape:
    return Box(tuple(float(c) for c in lo), tuple(float(c) for c in hi)), Label.OBSTACLE


def _frame(name: str, bridge: List[Shape], extra: List[Shape], start: Tuple[float, float, float]) -> BundledScenario:
    """Ground slab, world bounds and bounding box around a bridge composition."""
    lo = [min(s[0].lo[a] for s in bridge) for a in range(3)]
    hi = [max(s[0].hi[a] for s in bridge) for a in range(3)]
    bounds = AxisBox(
        min=(lo[0] - MARGIN, lo[1] - MARGIN, 0.0),
        max=(hi[0] + MARGIN, hi[1] + MARGIN, hi[2] + HEADROOM),
    )
    ground = _o((bounds.min[0], bounds.min[1], 0.0), (bounds.max[0], bounds.max[1], 1.0))
    box = AxisBox(min=(lo[0] - 6.0, lo[1] - 6.0, 1.0), max=(hi[0] + 6.0, hi[1] + 6.0, hi[2] + 6.0))
    config = ScenarioConfig(
        name=name,
        start_pose=Pose(position=start, yaw=0.0),
        view=ViewSpec(apex_deg=0.0, d_min=2.0, d_max=10.0, angle_tol_deg=0.0),
        lidar=BUNDLED_LIDAR,
        dd=2.0 * VOXEL_SIZE,
        rpt=120.0,
        flight_speed=2.0,
        scan_period=2.0,
        rng_seed=0,
        bounding_box=box,
        solver=BUNDLED_SOLVER,
    )
    return BundledScenario([ground] + extra + bridge, bounds, config)


def arch() -> BundledScenario:
    bridge = [
        _b((0, 0, 7), (20, 5, 8)),       # deck
        _b((0, 1, 1), (2, 4, 7)),        # abutments
        _b((18, 1, 1), (20, 4, 7)),
        _b((2, 1, 3), (4, 4, 5)),        # stepped rib
        _b((4, 1, 5), (7, 4, 6)),
        _b((7, 1, 6), (13, 4, 7)),
        _b((13, 1, 5), (16, 4, 6)),
        _b((16, 1, 3), (18, 4, 5)),
    ]
    return _frame("arch", bridge, [], (-5.5, 2.5, 7.5))


def covered() -> BundledScenario:
    bridge = [
        _b((0, 0, 5), (18, 6, 6)),       # deck
        _b((0, 0, 6), (18, 1, 9)),       # side walls
        _b((0, 5, 6), (18, 6, 9)),
        _b((0, 0, 9), (18, 6, 10)),      # roof
        _b((0, 0, 1), (2, 6, 5)),        # piers
        _b((16, 0, 1), (18, 6, 5)),
    ]
    return _frame("covered", bridge, [], (-5.5, 3.5, 7.5))


def box_girder() -> BundledScenario:
    bridge = [
        _b((0, 0, 8), (24, 7, 9)),       # deck slab
        _b((0, 2, 5), (24, 5, 8)),       # box
        _b((7, 2, 1), (9, 5, 5)),        # piers
        _b((15, 2, 1), (17, 5, 5)),
    ]
    return _frame("box_girder", bridge, [], (-5.5, 3.5, 8.5))


def iron_truss() -> BundledScenario:
    bridge = [
        _b((0, 0, 5), (20, 5, 6)),       # deck
        _b((0, 0, 10), (20, 1, 11)),     # top chords
        _b((0, 4, 10), (20, 5, 11)),
        _b((0, 0, 1), (2, 5, 5)),        # piers
        _b((18, 0, 1), (20, 5, 5)),
    ]
    for x in (0, 4, 8, 12, 16, 19):
        bridge.append(_b((x, 0, 6), (x + 1, 1, 10)))
        bridge.append(_b((x, 4, 6), (x + 1, 5, 10)))
    for x in (0, 8, 16):
        bridge.append(_b((x, 1, 10), (x + 1, 4, 11)))
    return _frame("iron_truss", bridge, [], (-5.5, 2.5, 7.5))


def steel() -> BundledScenario:
    bridge = [
        _b((0, 0, 7), (22, 6, 8)),       # deck
        _b((0, 1, 5), (22, 2, 7)),       # girders
        _b((0, 4, 5), (22, 5, 7)),
        _b((10, 1, 1), (12, 5, 5)),      # pier
    ]
    terrain = [
        _o((-12, -12, 1), (-3, 18, 4)),  # hills
        _o((25, -12, 1), (34, 18, 4)),
        _o((3, -6, 1), (4, -5, 6)),      # trees
        _o((2, -7, 6), (5, -4, 9)),
        _o((15, 10, 1), (16, 11, 6)),
        _o((14, 9, 6), (17, 12, 9)),
        _o((4, 11, 1), (9, 15, 5)),      # house
        _o((4, 11, 5), (9, 15, 6)),
    ]
    return _frame("steel", bridge, terrain, (-5.5, 3.5, 7.5))


_BUILDERS = {
    "arch": arch,
    "covered": covered,
    "box_girder": box_girder,
    "iron_truss": iron_truss,
    "steel": steel,
}

SCENARIO_NAMES: Tuple[str, ...] = tuple(_BUILDERS)


def bundled_scenarios() -> Dict[str, BundledScenario]:
    return {name: build() for name, build in _BUILDERS.items()}


def load_bundled(name: str) -> Tuple[WorldModel, ScenarioConfig]:
    if name not in _BUILDERS:
        raise KeyError(f"unknown bundled scenario {name!r}; choose from {', '.join(SCENARIO_NAMES)}")
    sc = _BUILDERS[name]()
    world = world_from_primitives(sc.shapes, VOXEL_SIZE, sc.bounds.to_bounds(VOXEL_SIZE))
    return world, sc.config
