from __future__ import annotations

import math
from typing import Iterator, List, Optional, Sequence, Tuple

from tools.geometry import Bounds, Index, voxel_of

_INF = float("inf")


def traverse(
    origin: Sequence[float],
    direction: Sequence[float],
    max_t: float,
    voxel_size: float,
    bounds: Optional[Bounds] = None,
) -> Iterator[Tuple[Index, float]]:
    """
    Uniform-grid traversal (Amanatides & Woo) front to back.

    Yields (voxel index, entry distance) for every voxel the ray
    origin + t*direction pierces for 0 <= t <= max_t. `direction` must be a
    unit vector so t is in meters. Stops at the first voxel outside `bounds`.
    Ties between axes step x before y before z.
    """
    ox, oy, oz = float(origin[0]), float(origin[1]), float(origin[2])
    dx, dy, dz = float(direction[0]), float(direction[1]), float(direction[2])

    vx = int(math.floor(ox / voxel_size))
    vy = int(math.floor(oy / voxel_size))
    vz = int(math.floor(oz / voxel_size))

    if bounds is not None:
        lx, ly, lz = bounds.lo
        hx, hy, hz = bounds.hi
        if not (lx <= vx < hx and ly <= vy < hy and lz <= vz < hz):
            return
    else:
        lx = ly = lz = -(1 << 62)
        hx = hy = hz = 1 << 62

    if dx > 0.0:
        step_x, t_max_x, t_delta_x = 1, ((vx + 1) * voxel_size - ox) / dx, voxel_size / dx
    elif dx < 0.0:
        step_x, t_max_x, t_delta_x = -1, (vx * voxel_size - ox) / dx, -voxel_size / dx
    else:
        step_x, t_max_x, t_delta_x = 0, _INF, _INF

    if dy > 0.0:
        step_y, t_max_y, t_delta_y = 1, ((vy + 1) * voxel_size - oy) / dy, voxel_size / dy
    elif dy < 0.0:
        step_y, t_max_y, t_delta_y = -1, (vy * voxel_size - oy) / dy, -voxel_size / dy
    else:
        step_y, t_max_y, t_delta_y = 0, _INF, _INF

    if dz > 0.0:
        step_z, t_max_z, t_delta_z = 1, ((vz + 1) * voxel_size - oz) / dz, voxel_size / dz
    elif dz < 0.0:
        step_z, t_max_z, t_delta_z = -1, (vz * voxel_size - oz) / dz, -voxel_size / dz
    else:
        step_z, t_max_z, t_delta_z = 0, _INF, _INF

    t = 0.0
    while t <= max_t:
        yield (vx, vy, vz), t
        if t_max_x <= t_max_y and t_max_x <= t_max_z:
            vx += step_x
            t = t_max_x
            t_max_x += t_delta_x
            if not lx <= vx < hx:
                return
        elif t_max_y <= t_max_z:
            vy += step_y
            t = t_max_y
            t_max_y += t_delta_y
            if not ly <= vy < hy:
                return
        else:
            vz += step_z
            t = t_max_z
            t_max_z += t_delta_z
            if not lz <= vz < hz:
                return


def segment_voxels(
    a: Sequence[float],
    b: Sequence[float],
    voxel_size: float,
    bounds: Optional[Bounds] = None,
) -> List[Index]:
    """Voxels pierced by the half-open segment [a, b)."""
    d = (b[0] - a[0], b[1] - a[1], b[2] - a[2])
    length = math.sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2])
    if length == 0.0:
        idx = voxel_of(a, voxel_size)
        return [idx] if bounds is None or bounds.contains(idx) else []
    unit = (d[0] / length, d[1] / length, d[2] / length)
    # the end point itself is excluded; its voxel only counts if entered earlier
    limit = length * (1.0 - 1e-12)
    return [v for v, _ in traverse(a, unit, limit, voxel_size, bounds)]
