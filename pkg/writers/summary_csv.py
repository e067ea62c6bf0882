from __future__ import annotations
import os
from dataclasses import asdict, dataclass
from typing import Dict, List, Sequence

import pandas as pd

from mission.log import TIMELINE_FIELDS, TIMING_FIELDS, MissionLog

STAT_COLUMNS = ("non_gtsp_s", "gtsp_s", "flight_s")
STATS = ("avg", "min", "max", "std")

SUMMARY_FIELDS = [
    "scenario",
    "planner",
    "seed",
    "outcome",
    "pct_inspected",
    "distance_m",
    "time_s",
    "inspectable",
    "replans",
] + [f"{c[:-2]}_{s}" for c in STAT_COLUMNS for s in STATS]

CURVE_COLUMNS = ("pct_inspected", "v_o", "distance_m")


@dataclass
class RunSummary:
    scenario: str
    planner: str
    seed: int
    outcome: str
    pct_inspected: float
    distance_m: float
    time_s: float
    inspectable: int
    replans: int
    non_gtsp_avg: float = 0.0
    non_gtsp_min: float = 0.0
    non_gtsp_max: float = 0.0
    non_gtsp_std: float = 0.0
    gtsp_avg: float = 0.0
    gtsp_min: float = 0.0
    gtsp_max: float = 0.0
    gtsp_std: float = 0.0
    flight_avg: float = 0.0
    flight_min: float = 0.0
    flight_max: float = 0.0
    flight_std: float = 0.0


def timing_frame(log: MissionLog) -> pd.DataFrame:
    return pd.DataFrame([r.as_dict() for r in log.timing], columns=TIMING_FIELDS)


def timeline_frame(log: MissionLog) -> pd.DataFrame:
    return pd.DataFrame([r.as_dict() for r in log.timeline], columns=TIMELINE_FIELDS)


def timing_stats(timing: pd.DataFrame) -> Dict[str, float]:
    """avg/min/max/std per timing column; sample std, 0 for fewer than two rows."""
    out: Dict[str, float] = {}
    for col in STAT_COLUMNS:
        s = timing[col].astype(float) if col in timing else pd.Series(dtype=float)
        prefix = col[:-2]
        if s.empty:
            out.update({f"{prefix}_{k}": 0.0 for k in STATS})
            continue
        std = float(s.std(ddof=1)) if len(s) > 1 else 0.0
        out[f"{prefix}_avg"] = float(s.mean())
        out[f"{prefix}_min"] = float(s.min())
        out[f"{prefix}_max"] = float(s.max())
        out[f"{prefix}_std"] = std
    return out


def summarize(log: MissionLog) -> RunSummary:
    return RunSummary(
        scenario=log.scenario,
        planner=log.planner,
        seed=log.seed,
        outcome=log.outcome,
        pct_inspected=log.final_pct,
        distance_m=log.total_distance,
        time_s=log.total_time,
        inspectable=log.inspectable,
        replans=len(log.timing),
        **timing_stats(timing_frame(log)),
    )


def failed_summary(scenario: str, planner: str, seed: int, error: str) -> RunSummary:
    return RunSummary(scenario, planner, seed, f"error: {error}", 0.0, 0.0, 0.0, 0, 0)


def write_summary_csv(out_path: str, summaries: Sequence[RunSummary]) -> str:
    os.makedirs(os.path.dirname(os.path.abspath(out_path)), exist_ok=True)
    df = pd.DataFrame([asdict(s) for s in summaries], columns=SUMMARY_FIELDS)
    df.to_csv(out_path, index=False)
    return out_path


def comparison_frame(runs: Dict[int, Dict[str, MissionLog]]) -> pd.DataFrame:
    """
    Per seed, every planner's curve sampled on the union of their clocks;
    a curve holds its last value between (and after) its own rows.
    """
    frames: List[pd.DataFrame] = []
    for seed in sorted(runs):
        by_planner = runs[seed]
        clocks = sorted({r.clock_s for log in by_planner.values() for r in log.timeline})
        merged = pd.DataFrame({"clock_s": pd.Series(clocks, dtype=float)})
        for planner in sorted(by_planner):
            tl = timeline_frame(by_planner[planner])[["clock_s", *CURVE_COLUMNS]]
            tl = tl.astype({"clock_s": float}).drop_duplicates("clock_s", keep="last")
            tl = tl.rename(columns={c: f"{planner}_{c}" for c in CURVE_COLUMNS})
            merged = pd.merge_asof(merged, tl, on="clock_s", direction="backward")
        merged.insert(0, "seed", seed)
        frames.append(merged)
    if not frames:
        return pd.DataFrame(columns=["seed", "clock_s"])
    return pd.concat(frames, ignore_index=True)


def write_comparison_csv(out_path: str, runs: Dict[int, Dict[str, MissionLog]]) -> str:
    os.makedirs(os.path.dirname(os.path.abspath(out_path)), exist_ok=True)
    comparison_frame(runs).to_csv(out_path, index=False)
    return out_path
