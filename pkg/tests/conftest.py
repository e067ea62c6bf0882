import numpy as np
import pytest

from mapping.grid import BN, FREE, OBSTACLE, SemanticOccupancyGrid
from planners.gtsp import SolverBudget
from sensing.lidar import LidarSpec
from tools.geometry import Bounds
from view.spec import ViewSpec
from world.config import ScenarioConfig
from world.model import BRIDGE, EMPTY, Box, Label, WorldModel, world_from_primitives
from world.pose import Pose

SMALL_LIDAR = LidarSpec(
    range_max=20.0,
    vertical_fov_min=-45.0,
    vertical_fov_max=45.0,
    azimuth_steps=90,
    elevation_steps=9,
)
SMALL_VIEW = ViewSpec(apex_deg=0.0, d_min=1.0, d_max=4.0)
SMALL_SOLVER = SolverBudget(max_iterations=300, max_stagnation=100, trials=1)


def known(world: WorldModel) -> SemanticOccupancyGrid:
    """Belief grid that already knows every cell of `world`."""
    grid = SemanticOccupancyGrid.like(world)
    grid.state = np.select(
        [world.labels == EMPTY, world.labels == BRIDGE],
        [FREE, BN],
        default=OBSTACLE,
    ).astype(np.int8)
    grid.version = 1
    return grid


@pytest.fixture
def full_knowledge():
    return known


@pytest.fixture
def wall_world() -> WorldModel:
    """A 3x3 bridge wall in the x=0 plane, nothing else."""
    return world_from_primitives(
        [(Box((0.0, -1.0, 3.0), (1.0, 2.0, 6.0)), Label.BRIDGE)],
        1.0,
        Bounds((-8, -5, 0), (6, 6, 10)),
    )


def _wall_config(seed: int = 0, **update) -> ScenarioConfig:
    data = dict(
        name="wall",
        start_pose=Pose(position=(-3.5, 0.5, 4.5)),
        view=SMALL_VIEW,
        lidar=SMALL_LIDAR,
        dd=2.0,
        scan_period=1.0,
        rng_seed=seed,
        solver=SMALL_SOLVER,
    )
    data.update(update)
    return ScenarioConfig(**data)


@pytest.fixture
def wall_config():
    return _wall_config


@pytest.fixture
def open_grid():
    """All-free belief grid factory over a half-open voxel box."""

    def make(lo=(0, 0, 0), hi=(8, 8, 8), voxel_size=1.0) -> SemanticOccupancyGrid:
        grid = SemanticOccupancyGrid(voxel_size, Bounds(tuple(lo), tuple(hi)))
        grid.state[:] = FREE
        grid.version = 1
        return grid

    return make


@pytest.fixture
def deck_world() -> WorldModel:
    """A 20x4x1 deck on two 1x1x5 piers, all bridge."""
    shapes = [
        (Box((0.0, 0.0, 5.0), (20.0, 4.0, 6.0)), Label.BRIDGE),
        (Box((2.0, 1.0, 0.0), (3.0, 2.0, 5.0)), Label.BRIDGE),
        (Box((17.0, 1.0, 0.0), (18.0, 2.0, 5.0)), Label.BRIDGE),
    ]
    return world_from_primitives(shapes, 1.0, Bounds((-6, -6, -1), (26, 10, 12)))


def slab_entries(origin, direction, voxels, voxel_size: float = 1.0) -> np.ndarray:
    """
    Distance along the ray at which it enters each closed voxel box (slab
    test), inf where it never does. Independent of the grid traversal.
    """
    o = np.asarray(origin, dtype=float)
    d = np.asarray(direction, dtype=float)
    lo = np.asarray(voxels, dtype=float).reshape(-1, 3) * voxel_size
    hi = lo + voxel_size
    near = np.empty_like(lo)
    far = np.empty_like(lo)
    for a in range(3):
        if d[a] == 0.0:
            inside = (lo[:, a] <= o[a]) & (o[a] <= hi[:, a])
            near[:, a] = np.where(inside, -np.inf, np.inf)
            far[:, a] = np.where(inside, np.inf, -np.inf)
        else:
            t1 = (lo[:, a] - o[a]) / d[a]
            t2 = (hi[:, a] - o[a]) / d[a]
            near[:, a] = np.minimum(t1, t2)
            far[:, a] = np.maximum(t1, t2)
    t_in = near.max(axis=1)
    t_out = far.min(axis=1)
    hit = (t_in <= t_out) & (t_out >= 0.0)
    return np.where(hit, np.maximum(t_in, 0.0), np.inf)


@pytest.fixture
def slab():
    return slab_entries
