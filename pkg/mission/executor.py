"""
GATSBI mission loop: perceive, generate viewpoints, solve the GTSP over the
uninspected bridge voxels, then fly the tour with lazy edge-cost checks until
the replan timer runs out or the tour is done. Repeats until no uninspected
bridge voxel is left or the rest is declared uninspectable.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Union

from mapping.grid import BN, knowledge_signature
from planners.gtsp import GtspInstance, GtspVertex, Tour, build_instance, solve
from planners.nav import GridPath, NavigationError, distance_field, plan_path
from tools.geometry import distance
from view.viewpoints import Candidate, generate_viewpoints, is_viewable
from world.config import ScenarioConfig
from world.model import WorldModel

from mission.flight import MissionState, fly_segment, inspect, record, take_scan
from mission.frontier import frontier_step
from mission.log import EdgeAudit, MissionLog, TimingRow

logger = logging.getLogger("gatsbi.mission")


class MissionError(RuntimeError):
    pass


class TourOutcome(Enum):
    COMPLETED = "completed"
    TIMED_OUT = "timed_out"
    INVALIDATED = "invalidated"


@dataclass
class Plan:
    instance: GtspInstance
    tour: Tour
    cursor: int = 0

    @property
    def done(self) -> bool:
        return self.cursor + 1 >= len(self.tour.vertices)

    @property
    def next_vertex(self) -> GtspVertex:
        return self.instance.vertices[self.tour.vertices[self.cursor + 1]]


@dataclass(frozen=True)
class Proceed:
    path: GridPath


@dataclass(frozen=True)
class Replan:
    cost: float


@dataclass(frozen=True)
class Excluded:
    candidate: Candidate
    cluster_empty: bool


EdgeDecision = Union[Proceed, Replan, Excluded]


def bootstrap(state: MissionState, world: WorldModel, config: ScenarioConfig) -> int:
    """Initial scan, then frontier steps until a bridge voxel shows up."""
    state.phase = "bootstrap"
    take_scan(state, world, config)
    steps = 0
    while not state.grid.counts()["v_bn"]:
        if not frontier_step(state, world, config, opportunistic=False):
            raise MissionError("bridge not observable")
        steps += 1
    logger.info(f"[bootstrap] first bridge voxel after {steps} frontier steps")
    return steps


def explore_for_views(state: MissionState, world: WorldModel, config: ScenarioConfig) -> bool:
    """
    Frontier step restricted to frontiers within viewing range of an
    uninspected bridge voxel, anywhere in the world. False when none is left.
    """
    remaining = state.grid.cells_in(BN)
    radius = config.view.d_max + math.sqrt(3.0) * world.voxel_size
    moved = frontier_step(
        state, world, config,
        opportunistic=config.opportunistic, box=world.bounds, near=remaining, radius_m=radius,
    )
    if moved:
        logger.debug(f"[explore] looking for views of {len(remaining)} uninspected voxels")
    return moved


def _solver_seed(config: ScenarioConfig, replan_idx: int) -> int:
    return (config.rng_seed * 1_000_003 + replan_idx) % 2**64


def plan_iteration(state: MissionState, config: ScenarioConfig) -> Optional[Plan]:
    """
    Viewpoints -> reachable candidates -> GTSP instance -> tour. None when no
    reachable candidate exists for any uninspected voxel.
    """
    t0 = time.perf_counter()
    grid = state.grid
    if state.excluded_version != grid.version:
        state.excluded.clear()
        state.excluded_version = grid.version

    field = distance_field(grid, state.pose.position, config.clearance)
    candidates = [
        c for c in generate_viewpoints(grid, config.view)
        if (c.free_voxel, c.bridge_voxel) not in state.excluded and field.reachable(c.free_voxel)
    ]
    if not candidates:
        logger.debug(f"[plan] no reachable candidates for {grid.counts()['v_bn']} uninspected voxels")
        return None

    instance = build_instance(candidates, state.pose.position, start_key=state.voxel, overrides=state.overrides)
    t1 = time.perf_counter()
    tour = solve(instance, config.solver, seed=_solver_seed(config, state.replan_idx))
    t2 = time.perf_counter()

    state.log.timing.append(TimingRow(state.replan_idx, t1 - t0, t2 - t1))
    state.log.last_instance = instance
    state.replan_idx += 1
    logger.info(
        f"[plan] {len(candidates)} candidates, {instance.n_clusters - 1} clusters, "
        f"tour {tour.total_cost:.1f} m ({t1 - t0:.2f}s + {t2 - t1:.2f}s)"
    )
    return Plan(instance, tour)


def lazy_edge_check(state: MissionState, plan: Plan, config: ScenarioConfig) -> EdgeDecision:
    """
    Compare the collision-free path length to the next tour vertex with the
    cost the solver assumed. Too large a gap stores the true cost and asks for
    a re-solve; an unreachable vertex is excluded.
    """
    target = plan.next_vertex
    here = state.voxel
    key = frozenset((tuple(here), target.key))
    if tuple(here) == target.key:
        assumed = 0.0
    else:
        assumed = state.overrides.get(key, distance(state.pose.position, target.position))

    try:
        path = plan_path(state.grid, state.pose.position, target.position, config.clearance)
    except NavigationError as e:
        cand = target.candidate
        state.excluded.add((cand.free_voxel, cand.bridge_voxel))
        members = plan.instance.clusters[target.cluster]
        left = [
            v for v in members
            if (plan.instance.vertices[v].candidate.free_voxel, cand.bridge_voxel) not in state.excluded
        ]
        if not left:
            state.flagged_unreachable.add(cand.bridge_voxel)
        state.log.edges.append(EdgeAudit(here, target.key, assumed, None, config.dd, "excluded"))
        logger.debug(f"[edge] {e}; excluded {cand.free_voxel} for {cand.bridge_voxel}")
        return Excluded(cand, not left)

    gap = path.length - assumed
    if gap > config.dd + 1e-9:
        state.overrides[key] = path.length
        plan.instance.set_override(plan.tour.vertices[plan.cursor], plan.tour.vertices[plan.cursor + 1], path.length)
        state.log.edges.append(EdgeAudit(here, target.key, assumed, path.length, config.dd, "replan"))
        logger.debug(f"[edge] {here}->{target.key}: path {path.length:.2f} vs {assumed:.2f}, replan")
        return Replan(path.length)

    state.log.edges.append(EdgeAudit(here, target.key, assumed, path.length, config.dd, "proceed"))
    return Proceed(path)


def _arrive(state: MissionState, vertex: GtspVertex, config: ScenarioConfig) -> bool:
    cand = vertex.candidate
    if state.grid.code_at(cand.bridge_voxel) != BN:
        return False
    if not is_viewable(state.grid, cand.free_voxel, cand.bridge_voxel, cand.face, config.view):
        logger.debug(f"[tour] view of {cand.bridge_voxel} lost on arrival")
        return False
    inspect(state, cand.bridge_voxel)
    record(state)
    return True


def run_tour(state: MissionState, plan: Plan, world: WorldModel, config: ScenarioConfig) -> TourOutcome:
    state.phase = "tour"
    tour_start = state.clock
    retries = 0
    while not plan.done:
        if state.clock - tour_start >= config.rpt:
            return TourOutcome.TIMED_OUT
        target = plan.next_vertex
        if state.grid.code_at(target.candidate.bridge_voxel) != BN:
            # already covered on the way
            plan.cursor += 1
            continue

        decision = lazy_edge_check(state, plan, config)
        if isinstance(decision, Proceed):
            fly_segment(state, decision.path, world, config)
            plan.cursor += 1
            _arrive(state, target, config)
            continue

        retries += 1
        if retries > config.max_replan_retries:
            return TourOutcome.INVALIDATED
        fresh = plan_iteration(state, config)
        if fresh is None:
            return TourOutcome.INVALIDATED
        plan = fresh
    return TourOutcome.COMPLETED


def run_mission(world: WorldModel, config: ScenarioConfig) -> MissionLog:
    state = MissionState.start(world, config, planner="gatsbi")
    bootstrap(state, world, config)

    stagnant = 0
    iterations = 0
    outcome = "complete"
    while state.grid.counts()["v_bn"]:
        state.phase = "plan"
        plan = plan_iteration(state, config)
        if plan is None:
            state.phase = "explore"
            if explore_for_views(state, world, config):
                stagnant = 0
                continue
            before = knowledge_signature(state.grid)
            frontier_step(state, world, config, opportunistic=config.opportunistic)
            stagnant = stagnant + 1 if knowledge_signature(state.grid) == before else 0
            if stagnant >= 2:
                remaining = state.grid.cells_in(BN)
                state.log.uninspectable = remaining
                state.log.unreachable = [v for v in remaining if v in state.flagged_unreachable]
                outcome = "uninspectable"
                logger.info(
                    f"[mission] {len(remaining)} bridge voxels declared uninspectable, "
                    f"{len(state.log.unreachable)} of them with unreachable viewpoints"
                )
                break
            continue
        stagnant = 0
        iterations += 1
        result = run_tour(state, plan, world, config)
        logger.debug(f"[mission] tour {result.value} at {state.clock:.1f}s")
        if iterations >= config.max_plan_iterations and state.grid.counts()["v_bn"]:
            logger.warning(f"[mission] stopped after {iterations} plan iterations")
            outcome = "iteration_cap"
            break

    state.log.outcome = outcome
    state.log.final_grid = state.grid
    state.phase = "done"
    record(state, "done")
    logger.info(
        f"[mission] {outcome}: {100.0 * state.log.final_pct:.1f}% of {state.log.inspectable} inspectable, "
        f"{state.distance_flown:.1f} m, {state.clock:.1f} s"
    )
    return state.log


def audit_violations(log: MissionLog) -> List[EdgeAudit]:
    """Flown edges whose path exceeded the assumed cost by more than DD."""
    return [
        e for e in log.flown_edges()
        if e.path_distance is not None and e.path_distance - e.instance_cost > e.dd + 1e-9
    ]
