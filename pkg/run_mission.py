#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Runs bridge-inspection missions:
- run:        one scenario with one planner (gatsbi or frontier)
- compare:    both planners over a list of seeds, plus clock-aligned curves
- gen-worlds: writes the five bundled scenario documents
Scenarios are JSON documents or bundled names (arch, covered, box_girder,
iron_truss, steel).
Exit codes:
  0 = mission(s) ran to termination
  1 = mission failure (bridge not observable, navigation failure, fatal error)
  2 = usage or scenario errors
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import ValidationError

from mission.executor import MissionError, run_mission
from mission.frontier import ExplorationBoxError, run_frontier_mission
from mission.log import MissionLog
from parsers.gtsplib import dump_instance
from parsers.scenario import ScenarioError, load_world_file, write_world_file
from planners.nav import NavigationError
from sensing.lidar import simulate_scan
from world.bundled import SCENARIO_NAMES, load_bundled
from world.config import ScenarioConfig
from world.model import WorldModel
from writers.mission_csv import write_mission_csvs
from writers.snapshot_csv import write_grid_csv, write_scan_csv
from writers.summary_csv import (
    RunSummary,
    failed_summary,
    summarize,
    write_comparison_csv,
    write_summary_csv,
)

PLANNERS = ("gatsbi", "frontier")

EXIT_OK = 0
EXIT_MISSION = 1
EXIT_USAGE = 2


# ---------- CLI & paths ----------

def _u64(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _positive(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be > 0")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="run_mission", description="GTSP-based bridge inspection simulator")
    sub = p.add_subparsers(dest="command", required=True)

    def overrides(sp: argparse.ArgumentParser) -> None:
        sp.add_argument("--scenario", required=True, help="Scenario JSON path or bundled name")
        sp.add_argument("--out", default="out", help="Output dir")
        sp.add_argument("--dd", type=_positive, default=None, help="Discrepancy distance override, meters")
        sp.add_argument("--rpt", type=_positive, default=None, help="Replan time limit override, seconds")
        sp.add_argument("--opportunistic", choices=("on", "off"), default=None)
        sp.add_argument("--snapshots", action="store_true", help="Also write grid.csv, scan_start.csv and last_plan.gtsp")

    run = sub.add_parser("run", help="Run one mission")
    overrides(run)
    run.add_argument("--planner", choices=PLANNERS, default="gatsbi")
    run.add_argument("--seed", type=_u64, default=None)

    cmp_ = sub.add_parser("compare", help="Run both planners across seeds")
    overrides(cmp_)
    cmp_.add_argument("--seeds", type=_u64, nargs="+", default=[0])
    cmp_.add_argument("--jobs", type=int, default=1, help="Parallel runs (processes)")

    gen = sub.add_parser("gen-worlds", help="Write the bundled scenario files")
    gen.add_argument("--out", default="worlds", help="Output dir")
    return p


def parse_args(argv: Optional[Sequence[str]] = None) -> argparse.Namespace:
    return build_parser().parse_args(argv)


def ensure_dir(d: str) -> str:
    os.makedirs(d, exist_ok=True)
    return d


# ---------- Logging to files AND console ----------

def setup_logging(log_dir: str) -> logging.Logger:
    ensure_dir(log_dir)
    logger = logging.getLogger("gatsbi")
    logger.setLevel(logging.INFO)
    for h in list(logger.handlers):
        h.close()
    logger.handlers.clear()

    sh = logging.StreamHandler(sys.stdout)
    sh.setLevel(logging.INFO)
    sh.setFormatter(logging.Formatter("%(message)s"))

    fh = logging.FileHandler(os.path.join(log_dir, "mission.stdout.txt"), mode="w", encoding="utf-8")
    fh.setLevel(logging.INFO)
    fh.setFormatter(logging.Formatter("%(message)s"))

    eh = logging.FileHandler(os.path.join(log_dir, "mission.stderr.txt"), mode="w", encoding="utf-8")
    eh.setLevel(logging.WARNING)
    eh.setFormatter(logging.Formatter("%(message)s"))

    logger.addHandler(sh)
    logger.addHandler(fh)
    logger.addHandler(eh)
    return logger


# ---------- Scenario intake ----------

def resolve_scenario(ref: str) -> Tuple[WorldModel, ScenarioConfig]:
    if os.path.isfile(ref):
        return load_world_file(ref)
    if ref in SCENARIO_NAMES:
        return load_bundled(ref)
    raise ScenarioError(f"no such file or bundled scenario: {ref!r}", "scenario")


def apply_overrides(config: ScenarioConfig, args: argparse.Namespace, seed: Optional[int] = None) -> ScenarioConfig:
    update: Dict[str, object] = {}
    if getattr(args, "dd", None) is not None:
        update["dd"] = args.dd
    if getattr(args, "rpt", None) is not None:
        update["rpt"] = args.rpt
    if getattr(args, "opportunistic", None) is not None:
        update["opportunistic"] = args.opportunistic == "on"
    if seed is not None:
        update["rng_seed"] = seed
    if not update:
        return config
    try:
        return ScenarioConfig.model_validate({**config.model_dump(), **update})
    except ValidationError as e:
        err = e.errors()[0]
        raise ScenarioError(err.get("msg", "invalid value"), ".".join(str(p) for p in err.get("loc", ())))


def run_planner(world: WorldModel, config: ScenarioConfig, planner: str) -> MissionLog:
    if planner == "frontier":
        return run_frontier_mission(world, config)
    return run_mission(world, config)


def write_run(out_dir: str, log: MissionLog, logger: logging.Logger) -> RunSummary:
    write_mission_csvs(out_dir, log)
    summary = summarize(log)
    write_summary_csv(os.path.join(out_dir, "summary.csv"), [summary])
    logger.info(
        f"[write] {out_dir}: {len(log.timeline)} timeline rows, {len(log.timing)} replans, "
        f"{100.0 * summary.pct_inspected:.1f}% inspected"
    )
    return summary


def write_snapshots(out_dir: str, log: MissionLog, world: WorldModel, config: ScenarioConfig, logger: logging.Logger) -> List[str]:
    """Final belief grid, the opening scan and the last GTSP instance, when present."""
    written = []
    if log.final_grid is not None:
        written.append(write_grid_csv(log.final_grid, os.path.join(out_dir, "grid.csv")))
    # same generator state as the mission's first scan
    scan = simulate_scan(world, config.start_pose, config.lidar, np.random.default_rng(config.rng_seed))
    written.append(write_scan_csv(scan, os.path.join(out_dir, "scan_start.csv")))
    if log.last_instance is not None:
        path = os.path.join(out_dir, "last_plan.gtsp")
        with open(path, "w", encoding="utf-8") as f:
            f.write(dump_instance(log.last_instance, name=f"{config.name}_{log.planner}"))
        written.append(path)
    logger.info(f"[write] snapshots: {', '.join(os.path.basename(p) for p in written)}")
    return written


# ---------- Commands ----------

def cmd_run(args: argparse.Namespace, logger: logging.Logger) -> int:
    world, config = resolve_scenario(args.scenario)
    config = apply_overrides(config, args, args.seed)
    logger.info(f"[run] {config.name} with {args.planner}, seed {config.rng_seed}")
    log = run_planner(world, config, args.planner)
    write_run(args.out, log, logger)
    if args.snapshots:
        write_snapshots(args.out, log, world, config, logger)
    return EXIT_OK


def _one(job: Tuple[WorldModel, ScenarioConfig, str]) -> MissionLog:
    world, config, planner = job
    return run_planner(world, config, planner)


def cmd_compare(args: argparse.Namespace, logger: logging.Logger) -> int:
    world, base = resolve_scenario(args.scenario)
    jobs: List[Tuple[WorldModel, ScenarioConfig, str]] = []
    for seed in args.seeds:
        config = apply_overrides(base, args, seed)
        for planner in PLANNERS:
            jobs.append((world, config, planner))

    results: List[object] = []
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            futures = [pool.submit(_one, j) for j in jobs]
            for fut in futures:
                try:
                    results.append(fut.result())
                except (MissionError, NavigationError, ExplorationBoxError) as e:
                    results.append(e)
    else:
        for j in jobs:
            try:
                results.append(_one(j))
            except (MissionError, NavigationError, ExplorationBoxError) as e:
                results.append(e)

    summaries: List[RunSummary] = []
    runs: Dict[int, Dict[str, MissionLog]] = {}
    failed = 0
    for (_, config, planner), res in zip(jobs, results):
        seed = config.rng_seed
        if isinstance(res, MissionLog):
            run_dir = os.path.join(args.out, f"{planner}_seed{seed}")
            summaries.append(write_run(run_dir, res, logger))
            if args.snapshots:
                write_snapshots(run_dir, res, world, config, logger)
            runs.setdefault(seed, {})[planner] = res
        else:
            failed += 1
            logger.warning(f"[compare] {planner} seed {seed}: {res}")
            summaries.append(failed_summary(config.name, planner, seed, str(res)))

    write_comparison_csv(os.path.join(args.out, "comparison.csv"), runs)
    write_summary_csv(os.path.join(args.out, "summary.csv"), summaries)
    logger.info(f"[compare] {len(jobs) - failed}/{len(jobs)} runs finished")
    return EXIT_MISSION if failed else EXIT_OK


def cmd_gen_worlds(args: argparse.Namespace, logger: logging.Logger) -> int:
    ensure_dir(args.out)
    for name in SCENARIO_NAMES:
        world, config = load_bundled(name)
        path = write_world_file(os.path.join(args.out, f"{name}.json"), world, config)
        logger.info(f"[gen] wrote {os.path.basename(path)}")
    return EXIT_OK


COMMANDS = {
    "run": cmd_run,
    "compare": cmd_compare,
    "gen-worlds": cmd_gen_worlds,
}


# ---------- Main run ----------

def run(args: argparse.Namespace) -> int:
    out_dir = ensure_dir(args.out)
    logger = setup_logging(out_dir)
    try:
        return COMMANDS[args.command](args, logger)
    except (ScenarioError, ExplorationBoxError) as e:
        logger.error(f"[scenario] {e}")
        return EXIT_USAGE
    except (MissionError, NavigationError) as e:
        logger.error(f"[mission] {e}")
        return EXIT_MISSION


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = parse_args(argv)
    out_dir = args.out
    try:
        return run(args)
    except Exception as e:
        # last resort: the error must reach the stderr log
        try:
            ensure_dir(out_dir)
            with open(os.path.join(out_dir, "mission.stderr.txt"), "a", encoding="utf-8") as f:
                f.write(f"[fatal] {e}\n")
        except Exception:
            pass
        print(f"[fatal] {e}", file=sys.stderr)
        return EXIT_MISSION


if __name__ == "__main__":
    sys.exit(main())
