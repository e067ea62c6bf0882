import csv
import math

import numpy as np
import pytest

from sensing.lidar import LidarSpec, SensorEmbeddedError, ray_directions, simulate_scan
from tools.geometry import Bounds
from tools.raycast import segment_voxels, traverse
from world.model import Box, Label, world_from_primitives
from world.pose import Pose
from writers.snapshot_csv import SCAN_FIELDS, write_scan_csv

ONE_RAY = LidarSpec(horizontal_fov=1.0, azimuth_steps=1, elevation_steps=1, vertical_fov_min=0.0, vertical_fov_max=0.0)


def _wall(label=Label.BRIDGE):
    return world_from_primitives(
        [(Box((5.0, -2.0, -2.0), (6.0, 3.0, 3.0)), label)],
        1.0,
        Bounds((-10, -10, -10), (10, 10, 10)),
    )


# ---------- raycast ----------

def test_traverse_axis_aligned():
    got = [v for v, _ in traverse((0.5, 0.5, 0.5), (1.0, 0.0, 0.0), 3.0, 1.0)]
    assert got == [(0, 0, 0), (1, 0, 0), (2, 0, 0), (3, 0, 0)]


def test_traverse_reports_entry_distance():
    got = list(traverse((0.25, 0.5, 0.5), (1.0, 0.0, 0.0), 2.0, 1.0))
    assert [t for _, t in got] == pytest.approx([0.0, 0.75, 1.75])


def test_traverse_stops_at_bounds():
    b = Bounds((0, 0, 0), (3, 1, 1))
    got = [v for v, _ in traverse((0.5, 0.5, 0.5), (1.0, 0.0, 0.0), 50.0, 1.0, b)]
    assert got == [(0, 0, 0), (1, 0, 0), (2, 0, 0)]


def test_segment_voxels_are_face_connected_and_cover_samples():
    rng = np.random.default_rng(3)
    for _ in range(50):
        a = rng.uniform(-4, 4, size=3)
        b = rng.uniform(-4, 4, size=3)
        got = segment_voxels(tuple(a), tuple(b), 1.0)
        for u, v in zip(got[:-1], got[1:]):
            assert sum(abs(p - q) for p, q in zip(u, v)) == 1
        sampled = {tuple(int(math.floor(c)) for c in a + s * (b - a)) for s in np.linspace(0.0, 0.999, 400)}
        assert sampled <= set(got)


# ---------- lidar ----------

def test_ray_count_and_directions():
    spec = LidarSpec(azimuth_steps=8, elevation_steps=3)
    rays = ray_directions(0.0, spec)
    assert len(rays) == 24
    assert [el for _, el, _ in rays[:3]] == [-15.0, 0.0, 15.0]
    for _, _, d in rays:
        assert math.sqrt(sum(c * c for c in d)) == pytest.approx(1.0)


def test_single_ray_hits_labeled_voxel():
    scan = simulate_scan(_wall(), Pose(position=(0.5, 0.5, 0.5)), ONE_RAY)
    assert len(scan.returns) == 1 and not scan.misses
    r = scan.returns[0]
    assert r.voxel == (5, 0, 0)
    assert r.label is Label.BRIDGE
    assert r.point == pytest.approx((5.0, 0.5, 0.5))


def test_obstacle_label_is_reported():
    scan = simulate_scan(_wall(Label.OBSTACLE), Pose(position=(0.5, 0.5, 0.5)), ONE_RAY)
    assert scan.returns[0].label is Label.OBSTACLE


def test_scan_dump_lists_returns_only(tmp_path):
    spec = LidarSpec(range_max=20.0, azimuth_steps=4, elevation_steps=1, vertical_fov_min=0.0, vertical_fov_max=0.0)
    scan = simulate_scan(_wall(), Pose(position=(0.5, 0.5, 0.5)), spec)
    path = write_scan_csv(scan, str(tmp_path / "scan.csv"))
    with open(path, newline="", encoding="utf-8") as f:
        rows = list(csv.reader(f))
    assert rows[0] == SCAN_FIELDS
    assert len(rows) == 1 + len(scan.returns)
    assert rows[1][5] == "bridge"
    assert float(rows[1][2]) == pytest.approx(5.0)


def test_yaw_turns_the_scan():
    scan = simulate_scan(_wall(), Pose(position=(0.5, 0.5, 0.5), yaw=math.pi), ONE_RAY)
    assert scan.returns == [] and len(scan.misses) == 1


def test_out_of_range_is_a_miss():
    spec = ONE_RAY.model_copy(update={"range_max": 3.0})
    scan = simulate_scan(_wall(), Pose(position=(0.5, 0.5, 0.5)), spec)
    assert scan.returns == [] and len(scan.misses) == 1


def test_sensor_inside_geometry():
    with pytest.raises(SensorEmbeddedError, match="sensor embedded in geometry"):
        simulate_scan(_wall(), Pose(position=(5.5, 0.5, 0.5)), ONE_RAY)


def test_full_scan_is_deterministic():
    spec = LidarSpec(azimuth_steps=36, elevation_steps=4, label_noise=0.3)
    w = _wall()
    pose = Pose(position=(0.5, 0.5, 0.5))
    a = simulate_scan(w, pose, spec, np.random.default_rng(11))
    b = simulate_scan(w, pose, spec, np.random.default_rng(11))
    assert a == b
    assert a.ray_count == 144


def test_label_noise_needs_rng():
    with pytest.raises(ValueError):
        simulate_scan(_wall(), Pose(position=(0.5, 0.5, 0.5)), LidarSpec(label_noise=0.5))


def test_invalid_fov():
    with pytest.raises(ValueError):
        LidarSpec(vertical_fov_min=10.0, vertical_fov_max=-10.0)


def test_nearer_of_two_collinear_voxels_hides_the_other():
    world = world_from_primitives(
        [
            (Box((3.0, 0.0, 0.0), (4.0, 1.0, 1.0)), Label.BRIDGE),
            (Box((6.0, 0.0, 0.0), (7.0, 1.0, 1.0)), Label.BRIDGE),
        ],
        1.0,
        Bounds((-2, -2, -2), (9, 3, 3)),
    )
    scan = simulate_scan(world, Pose(position=(0.5, 0.5, 0.5)), ONE_RAY)
    assert [r.voxel for r in scan.returns] == [(3, 0, 0)]
    assert scan.returns[0].point == pytest.approx((3.0, 0.5, 0.5))


def _scattered(rng, cells, lo=-6, hi=7):
    shapes = []
    for _ in range(cells):
        v = tuple(int(c) for c in rng.integers(lo, hi, size=3))
        if v == (0, 0, 0):
            continue
        label = Label.BRIDGE if rng.random() < 0.5 else Label.OBSTACLE
        shapes.append((Box(tuple(float(c) for c in v), tuple(float(c + 1) for c in v)), label))
    return shapes


@pytest.mark.parametrize("seed", range(6))
def test_first_hit_matches_exhaustive_slab_tests(seed, slab):
    rng = np.random.default_rng(seed)
    world = world_from_primitives(_scattered(rng, 60), 1.0, Bounds((-6, -6, -6), (7, 7, 7)))
    occupied = np.argwhere(world.occupied_mask()) + np.array(world.bounds.lo)
    spec = LidarSpec(range_max=8.0, azimuth_steps=30, elevation_steps=7, vertical_fov_min=-60.0, vertical_fov_max=60.0)
    pose = Pose(position=tuple(rng.uniform(0.05, 0.95, size=3)), yaw=float(rng.uniform(-math.pi, math.pi)))

    scan = simulate_scan(world, pose, spec)
    assert scan.ray_count == 210
    for r in scan.returns:
        t = slab(scan.origin, r.direction, occupied)
        j = int(np.argmin(t))
        assert tuple(int(c) for c in occupied[j]) == r.voxel
        assert t[j] == pytest.approx(math.dist(scan.origin, r.point), abs=1e-9)
        assert r.label is world.label_at(r.voxel)
    for m in scan.misses:
        t = slab(scan.origin, m.direction, occupied)
        assert not (t <= spec.range_max).any()


def _turned(v):
    # quarter turn about the vertical axis through (0.5, 0.5)
    return (-v[1], v[0], v[2])


def test_quarter_turn_of_world_and_sensor_turns_the_scan():
    rng = np.random.default_rng(5)
    shapes = _scattered(rng, 80)
    turned = [(Box(_turned(b.lo), tuple(c + 1 for c in _turned(b.lo))), label) for b, label in shapes]
    bounds = Bounds((-6, -6, -6), (7, 7, 7))
    spec = LidarSpec(range_max=12.0, azimuth_steps=28, elevation_steps=5, vertical_fov_min=-40.0, vertical_fov_max=40.0)

    a = simulate_scan(world_from_primitives(shapes, 1.0, bounds), Pose(position=(0.5, 0.5, 0.5)), spec)
    b = simulate_scan(world_from_primitives(turned, 1.0, bounds), Pose(position=(0.5, 0.5, 0.5), yaw=math.pi / 2), spec)

    assert len(a.returns) == len(b.returns) and len(a.misses) == len(b.misses)
    for ra, rb in zip(a.returns, b.returns):
        assert (ra.azimuth, ra.elevation) == (rb.azimuth, rb.elevation)
        assert rb.voxel == _turned(ra.voxel)
        assert rb.label is ra.label
        assert rb.point == pytest.approx((1.0 - ra.point[1], ra.point[0], ra.point[2]), abs=1e-9)
