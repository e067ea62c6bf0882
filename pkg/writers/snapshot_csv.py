from __future__ import annotations
import csv, os

import numpy as np

from mapping.grid import UNKNOWN, CellState, SemanticOccupancyGrid
from sensing.lidar import LabeledScan

GRID_FIELDS = ["ix", "iy", "iz", "state"]
SCAN_FIELDS = ["azimuth", "elevation", "x", "y", "z", "label"]


def write_grid_csv(grid: SemanticOccupancyGrid, out_path: str) -> str:
    """Every known cell, ascending by voxel index."""
    os.makedirs(os.path.dirname(os.path.abspath(out_path)), exist_ok=True)
    with open(out_path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(GRID_FIELDS)
        for loc in np.argwhere(grid.state != UNKNOWN):
            ix, iy, iz = grid.bounds.glob(loc)
            w.writerow([ix, iy, iz, CellState(int(grid.state[tuple(loc)])).name.lower()])
    return out_path


def write_scan_csv(scan: LabeledScan, out_path: str) -> str:
    """Returns only; misses carry no point."""
    os.makedirs(os.path.dirname(os.path.abspath(out_path)), exist_ok=True)
    with open(out_path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(SCAN_FIELDS)
        for r in scan.returns:
            w.writerow([r.azimuth, r.elevation, r.point[0], r.point[1], r.point[2], r.label.value])
    return out_path
