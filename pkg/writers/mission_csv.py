from __future__ import annotations
import csv, os
from typing import Iterable

from mission.log import TIMELINE_FIELDS, TIMING_FIELDS, MissionLog, TimelineRow, TimingRow


def _ensure_parent(out_path: str) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(out_path)), exist_ok=True)


def write_timeline_csv(out_path: str, rows: Iterable[TimelineRow]) -> str:
    """One row per log event; columns exactly TIMELINE_FIELDS."""
    _ensure_parent(out_path)
    with open(out_path, "w", newline="", encoding="utf-8") as f:
        w = csv.DictWriter(f, fieldnames=TIMELINE_FIELDS)
        w.writeheader()
        for r in rows:
            w.writerow(r.as_dict())
    return out_path


def write_timing_csv(out_path: str, rows: Iterable[TimingRow]) -> str:
    _ensure_parent(out_path)
    with open(out_path, "w", newline="", encoding="utf-8") as f:
        w = csv.DictWriter(f, fieldnames=TIMING_FIELDS)
        w.writeheader()
        for r in rows:
            w.writerow(r.as_dict())
    return out_path


def write_mission_csvs(out_dir: str, log: MissionLog) -> dict:
    os.makedirs(out_dir, exist_ok=True)
    return {
        "timeline": write_timeline_csv(os.path.join(out_dir, "timeline.csv"), log.timeline),
        "timing": write_timing_csv(os.path.join(out_dir, "timing.csv"), log.timing),
    }
