"""
GTSP reduction and solver.

Vertices are candidate viewpoints clustered by the bridge voxel they inspect,
plus a singleton START cluster. The objective is an open path anchored at
START that visits exactly one vertex of every cluster.

The solver is an adaptive large neighborhood search: cheapest-insertion
construction, then repeated destroy (random / segment / worst cluster removal,
operator and removal size picked by success-weighted roulette) and greedy
reinsertion, with 2-opt and cluster relocation over the order and an exact
layered shortest path over the vertex choices for a fixed order. Instances with
few clusters are solved exactly by dynamic programming over cluster subsets.
"""

from __future__ import annotations

import itertools
import logging
import math
import time
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from tools.geometry import Index, Point

logger = logging.getLogger("gatsbi.gtsp")

START_CLUSTER = 0
START_KEY = ("start",)
BRUTE_FORCE_LIMIT = 10**7
EXACT_CLUSTER_LIMIT = 16
EXACT_STATE_LIMIT = 4 * 10**6


class InfeasibleInstanceError(ValueError):
    pass


class InstanceTooLargeError(ValueError):
    pass


class SolverBudget(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    max_iterations: int = Field(default=3000, ge=0)
    max_stagnation: int = Field(default=600, ge=1)
    time_limit_s: float = Field(default=15.0, gt=0.0, description="Wall-clock cap; only large instances reach it")
    trials: int = Field(default=2, ge=1)
    exact_clusters: int = Field(
        default=8, ge=0, le=EXACT_CLUSTER_LIMIT, description="Instances with at most this many clusters are solved exactly"
    )


@dataclass(frozen=True)
class GtspVertex:
    position: Point
    cluster: int
    key: tuple
    candidate: Optional[object] = None

    @property
    def is_start(self) -> bool:
        return self.cluster == START_CLUSTER


def _pair(a: tuple, b: tuple) -> FrozenSet[tuple]:
    return frozenset((a, b))


class GtspInstance:
    """
    Clustered complete graph with Euclidean costs. `overrides` replaces the
    cost between two vertex keys (free voxel indices) with a measured path
    length; keys rather than vertex numbers let overrides survive rebuilds.
    """

    def __init__(
        self,
        vertices: Sequence[GtspVertex],
        clusters: Sequence[Sequence[int]],
        cluster_targets: Sequence[Optional[Index]],
        overrides: Optional[Dict[FrozenSet[tuple], float]] = None,
    ):
        self.vertices: List[GtspVertex] = list(vertices)
        self.clusters: List[List[int]] = [list(c) for c in clusters]
        self.cluster_targets: List[Optional[Index]] = list(cluster_targets)
        self.overrides: Dict[FrozenSet[tuple], float] = dict(overrides or {})
        self._matrix: Optional[np.ndarray] = None

    def __len__(self) -> int:
        return len(self.vertices)

    @property
    def n_clusters(self) -> int:
        return len(self.clusters)

    def validate(self) -> None:
        seen = set()
        for ci, members in enumerate(self.clusters):
            if not members:
                raise InfeasibleInstanceError(f"cluster {ci} is empty")
            for v in members:
                if v in seen or self.vertices[v].cluster != ci:
                    raise InfeasibleInstanceError(f"vertex {v} is not in exactly one cluster")
                seen.add(v)
        if len(seen) != len(self.vertices):
            raise InfeasibleInstanceError("clusters do not cover every vertex")
        if self.clusters[START_CLUSTER] != [0]:
            raise InfeasibleInstanceError("cluster 0 must be the START singleton")

    def euclidean(self, u: int, v: int) -> float:
        a, b = self.vertices[u].position, self.vertices[v].position
        return math.sqrt((a[0] - b[0]) ** 2 + (a[1] - b[1]) ** 2 + (a[2] - b[2]) ** 2)

    def cost(self, u: int, v: int) -> float:
        if u == v:
            return 0.0
        ku, kv = self.vertices[u].key, self.vertices[v].key
        if ku == kv:
            return 0.0
        return self.overrides.get(_pair(ku, kv), self.euclidean(u, v))

    def set_override(self, u: int, v: int, value: float) -> None:
        if self.vertices[u].key == self.vertices[v].key:
            return
        self.overrides[_pair(self.vertices[u].key, self.vertices[v].key)] = float(value)
        self._matrix = None

    def matrix(self) -> np.ndarray:
        if self._matrix is None:
            pos = np.array([v.position for v in self.vertices], dtype=float).reshape(-1, 3)
            diff = pos[:, None, :] - pos[None, :, :]
            m = np.sqrt((diff * diff).sum(axis=2))
            if self.overrides:
                by_key: Dict[tuple, List[int]] = {}
                for i, v in enumerate(self.vertices):
                    by_key.setdefault(v.key, []).append(i)
                for pair, value in self.overrides.items():
                    ka, kb = tuple(pair)
                    ia, ib = by_key.get(ka), by_key.get(kb)
                    if ia and ib:
                        m[np.ix_(ia, ib)] = value
                        m[np.ix_(ib, ia)] = value
            # shared free voxel: zero cost
            keys: Dict[tuple, List[int]] = {}
            for i, v in enumerate(self.vertices):
                keys.setdefault(v.key, []).append(i)
            for members in keys.values():
                if len(members) > 1:
                    m[np.ix_(members, members)] = 0.0
            np.fill_diagonal(m, 0.0)
            self._matrix = m
        return self._matrix

    def path_cost(self, route: Sequence[int]) -> float:
        m = self.matrix()
        total = 0.0
        for a, b in zip(route[:-1], route[1:]):
            total += float(m[a, b])
        return total


@dataclass
class Tour:
    vertices: List[int]
    total_cost: float
    iterations: int = 0


def build_instance(
    candidates: Sequence,
    start: Sequence[float],
    start_key: tuple = START_KEY,
    overrides: Optional[Dict[FrozenSet[tuple], float]] = None,
) -> GtspInstance:
    """
    One vertex per candidate at its free-voxel center, clustered by bridge
    voxel (clusters ascending by voxel index), plus the START singleton as
    vertex 0 / cluster 0.
    """
    ordered = sorted(candidates, key=lambda c: c.sort_key)
    vertices: List[GtspVertex] = [GtspVertex(tuple(float(c) for c in start), START_CLUSTER, tuple(start_key))]
    clusters: List[List[int]] = [[0]]
    targets: List[Optional[Index]] = [None]
    cluster_of: Dict[Index, int] = {}
    for cand in ordered:
        ci = cluster_of.get(cand.bridge_voxel)
        if ci is None:
            ci = len(clusters)
            cluster_of[cand.bridge_voxel] = ci
            clusters.append([])
            targets.append(cand.bridge_voxel)
        clusters[ci].append(len(vertices))
        vertices.append(GtspVertex(cand.position, ci, tuple(cand.free_voxel), cand))
    return GtspInstance(vertices, clusters, targets, overrides)


# ---------- local search primitives ----------

def optimize_vertices(m: np.ndarray, clusters: List[List[int]], order: Sequence[int]) -> Tuple[List[int], float]:
    """Exact best vertex per cluster for a fixed cluster order (layered DP)."""
    if not order:
        return [0], 0.0
    prev_ids = np.array([0])
    prev_cost = np.zeros(1)
    back: List[np.ndarray] = []
    layers: List[np.ndarray] = []
    for c in order:
        ids = np.array(clusters[c])
        tot = prev_cost[:, None] + m[np.ix_(prev_ids, ids)]
        arg = tot.argmin(axis=0)
        back.append(arg)
        layers.append(ids)
        prev_cost = tot[arg, np.arange(len(ids))]
        prev_ids = ids
    j = int(prev_cost.argmin())
    best = float(prev_cost[j])
    route = [0] * (len(order) + 1)
    for layer in range(len(order) - 1, -1, -1):
        route[layer + 1] = int(layers[layer][j])
        j = int(back[layer][j])
    return route, best


def _route_cost(m: np.ndarray, route: Sequence[int]) -> float:
    total = 0.0
    for a, b in zip(route[:-1], route[1:]):
        total += float(m[a, b])
    return total


def _insert_clusters(
    m: np.ndarray,
    clusters: List[List[int]],
    vcluster: np.ndarray,
    route: List[int],
    pending: Sequence[int],
) -> List[int]:
    """Greedy cheapest insertion of whole clusters (best vertex, best slot)."""
    route = list(route)
    pending = sorted(pending)
    while pending:
        cand = np.array(sorted(v for c in pending for v in clusters[c]))
        r = np.array(route)
        # slot i means "between route[i] and route[i+1]"; the last slot appends
        if len(r) > 1:
            mid = m[np.ix_(r[:-1], cand)] + m[np.ix_(cand, r[1:])].T - m[r[:-1], r[1:]][:, None]
            slots = np.vstack([mid, m[r[-1], cand][None, :]])
        else:
            slots = m[r[-1], cand][None, :]
        per_vertex = slots.min(axis=0)
        k = int(per_vertex.argmin())
        slot = int(slots[:, k].argmin())
        v = int(cand[k])
        route.insert(slot + 1, v)
        pending.remove(int(vcluster[v]))
    return route


def two_opt(m: np.ndarray, route: List[int], max_passes: int = 50) -> List[int]:
    """Segment reversal on the open path; route[0] (START) stays fixed."""
    route = list(route)
    n = len(route)
    if n < 3:
        return route
    for _ in range(max_passes):
        improved = False
        for i in range(1, n - 1):
            r = np.array(route)
            a, b = r[i - 1], r[i]
            js = np.arange(i + 1, n)
            c = r[js]
            gain = m[a, b] - m[a, c]
            inner = js < n - 1
            d = r[np.minimum(js + 1, n - 1)]
            gain = gain + np.where(inner, m[c, d] - m[b, d], 0.0)
            k = int(gain.argmax())
            if gain[k] > 1e-9 * float(m[a, b]):
                j = int(js[k])
                route[i:j + 1] = route[i:j + 1][::-1]
                improved = True
        if not improved:
            break
    return route


def or_opt(m: np.ndarray, clusters: List[List[int]], vcluster: np.ndarray, route: List[int]) -> List[int]:
    """One pass moving single clusters to their cheapest slot, any vertex of the cluster."""
    route = list(route)
    scale = _route_cost(m, route)
    i = 1
    while i < len(route):
        prev, v = route[i - 1], route[i]
        if i + 1 < len(route):
            nxt = route[i + 1]
            saving = float(m[prev, v] + m[v, nxt] - m[prev, nxt])
        else:
            saving = float(m[prev, v])
        partial = route[:i] + route[i + 1:]
        moved = _insert_clusters(m, clusters, vcluster, partial, [int(vcluster[v])])
        j = moved.index(next(u for u in moved if vcluster[u] == vcluster[v]))
        added = float(m[moved[j - 1], moved[j]])
        if j + 1 < len(moved):
            added += float(m[moved[j], moved[j + 1]] - m[moved[j - 1], moved[j + 1]])
        if added < saving - 1e-12 * scale:
            route = moved
        i += 1
    return route


def _polish(m: np.ndarray, clusters: List[List[int]], route: List[int], vcluster: np.ndarray) -> Tuple[List[int], float]:
    cost = _route_cost(m, route)
    while True:
        route2 = or_opt(m, clusters, vcluster, two_opt(m, route))
        route2, cost2 = optimize_vertices(m, clusters, [int(vcluster[v]) for v in route2[1:]])
        if cost2 < cost - 1e-12 * cost:
            route, cost = route2, cost2
            continue
        return route, cost


# ---------- adaptive search ----------

_OPERATORS = ("random", "segment", "worst")
_SEGMENT = 50
_DECAY = 0.8
_SCORE_BEST, _SCORE_BETTER, _SCORE_ACCEPTED = 3.0, 2.0, 1.0
# near-best candidates get the full local search on instances up to this many clusters
_POLISH_WINDOW = 0.02
_POLISH_ALL_LIMIT = 40


@dataclass
class _Weights:
    values: np.ndarray
    scores: np.ndarray = field(init=False)
    uses: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        self.scores = np.zeros_like(self.values)
        self.uses = np.zeros_like(self.values)

    def pick(self, rng: np.random.Generator) -> int:
        p = self.values / self.values.sum()
        return int(rng.choice(len(self.values), p=p))

    def reward(self, i: int, score: float) -> None:
        self.scores[i] += score
        self.uses[i] += 1

    def update(self) -> None:
        avg = np.divide(self.scores, self.uses, out=np.zeros_like(self.scores), where=self.uses > 0)
        self.values = np.maximum(_DECAY * self.values + (1.0 - _DECAY) * avg, 0.05)
        self.scores[:] = 0.0
        self.uses[:] = 0.0


def _removal_sizes(n: int) -> List[int]:
    """Fibonacci-spaced sizes up to n clusters; n itself is always offered."""
    sizes = [s for s in (1, 2, 3, 5, 8, 13, 21, 34) if s < n]
    return sizes + [max(1, n)]


def _remove(
    m: np.ndarray,
    route: List[int],
    op: str,
    k: int,
    rng: np.random.Generator,
) -> Tuple[List[int], List[int]]:
    """Returns (partial route, removed positions' vertices)."""
    n = len(route) - 1
    k = min(k, n)
    if op == "segment":
        p = int(rng.integers(1, n - k + 2))
        idx = list(range(p, p + k))
    elif op == "worst":
        r = np.array(route)
        prev = r[:-1][:n]
        cur = r[1:]
        nxt = np.append(r[2:], -1)
        saving = m[prev, cur].copy()
        inner = nxt >= 0
        saving[inner] += m[cur[inner], nxt[inner]] - m[prev[inner], nxt[inner]]
        saving *= rng.uniform(0.8, 1.2, size=n)
        idx = sorted((np.argsort(-saving, kind="stable")[:k] + 1).tolist())
    else:
        idx = sorted(rng.choice(np.arange(1, n + 1), size=k, replace=False).tolist())
    removed = [route[i] for i in idx]
    keep = set(idx)
    return [v for i, v in enumerate(route) if i not in keep], removed


def _search(
    instance: GtspInstance,
    budget: SolverBudget,
    rng: np.random.Generator,
    deadline: float,
) -> Tour:
    m = instance.matrix()
    clusters = instance.clusters
    vcluster = np.array([v.cluster for v in instance.vertices])
    others = list(range(1, instance.n_clusters))

    route = _insert_clusters(m, clusters, vcluster, [0], others)
    route, cost = _polish(m, clusters, route, vcluster)
    best_route, best_cost = route, cost
    cur_route, cur_cost = route, cost
    if len(others) <= 1:
        return Tour(best_route, best_cost, 0)

    ops = _Weights(np.ones(len(_OPERATORS)))
    sizes = _removal_sizes(len(others))
    polish_all = len(others) <= _POLISH_ALL_LIMIT
    size_w = _Weights(np.ones(len(sizes)))
    stagnation = 0
    it = 0
    while it < budget.max_iterations and stagnation < budget.max_stagnation:
        if time.perf_counter() > deadline:
            logger.debug(f"[gtsp] time limit reached after {it} iterations")
            break
        it += 1
        oi = ops.pick(rng)
        si = size_w.pick(rng)
        partial, removed = _remove(m, cur_route, _OPERATORS[oi], sizes[si], rng)
        cand = _insert_clusters(m, clusters, vcluster, partial, [int(vcluster[v]) for v in removed])
        cand, cand_cost = optimize_vertices(m, clusters, [int(vcluster[v]) for v in cand[1:]])
        if polish_all and cand_cost < best_cost * (1.0 + _POLISH_WINDOW):
            cand, cand_cost = _polish(m, clusters, cand, vcluster)

        tol = 1e-12 * cur_cost
        score = 0.0
        if cand_cost < best_cost - 1e-12 * best_cost:
            best_route, best_cost = cand, cand_cost
            cur_route, cur_cost = cand, cand_cost
            score = _SCORE_BEST
            stagnation = 0
        else:
            stagnation += 1
            delta = cand_cost - cur_cost
            # temperature relative to the current cost keeps the search scale free
            temp = 0.03 * (1.0 - it / max(1, budget.max_iterations)) * cur_cost / len(others)
            if delta < -tol:
                cur_route, cur_cost = cand, cand_cost
                score = _SCORE_BETTER
            elif temp > 0.0 and rng.random() < math.exp(-max(delta, 0.0) / temp):
                cur_route, cur_cost = cand, cand_cost
                score = _SCORE_ACCEPTED
        ops.reward(oi, score)
        size_w.reward(si, score)
        if it % _SEGMENT == 0:
            ops.update()
            size_w.update()
    return Tour(best_route, best_cost, it)


def solve(instance: GtspInstance, budget: Optional[SolverBudget] = None, seed: int = 0) -> Tour:
    """
    Best open path from START over `budget.trials` independent searches.
    Deterministic for a fixed (instance, budget, seed) unless the wall-clock
    cap is hit.
    """
    budget = budget or SolverBudget()
    instance.validate()
    k = instance.n_clusters - 1
    if k <= budget.exact_clusters and _exact_states(instance) <= EXACT_STATE_LIMIT:
        tour = held_karp(instance)
        logger.debug(f"[gtsp] {k} clusters, {len(instance)} vertices -> exact cost {tour.total_cost:.3f}")
        return tour
    deadline = time.perf_counter() + budget.time_limit_s
    best: Optional[Tour] = None
    total_it = 0
    for trial in range(budget.trials):
        rng = np.random.default_rng([int(seed) % 2**64, trial])
        tour = _search(instance, budget, rng, deadline)
        total_it += tour.iterations
        if best is None or tour.total_cost < best.total_cost - 1e-12 * best.total_cost:
            best = tour
        if instance.n_clusters <= 2:
            break
    best.iterations = total_it
    logger.debug(
        f"[gtsp] {instance.n_clusters - 1} clusters, {len(instance)} vertices -> "
        f"cost {best.total_cost:.3f} in {total_it} iterations"
    )
    return best


def brute_force(instance: GtspInstance) -> Tour:
    """Exhaustive enumeration over cluster orders and vertex choices."""
    instance.validate()
    others = list(range(1, instance.n_clusters))
    combos = math.factorial(len(others))
    for c in others:
        combos *= len(instance.clusters[c])
    if combos > BRUTE_FORCE_LIMIT:
        raise InstanceTooLargeError(f"{combos} combinations exceed the brute-force limit")
    m = instance.matrix()
    best_route = [0]
    best_cost = 0.0 if not others else math.inf
    for order in itertools.permutations(others):
        for choice in itertools.product(*(instance.clusters[c] for c in order)):
            route = (0,) + choice
            cost = _route_cost(m, route)
            if cost < best_cost:
                best_route, best_cost = list(route), cost
    return Tour(best_route, best_cost, combos)


def _exact_states(instance: GtspInstance) -> int:
    return (1 << (instance.n_clusters - 1)) * len(instance)


def held_karp(instance: GtspInstance) -> Tour:
    """
    Optimal open path by dynamic programming over (visited cluster subset,
    last vertex). Ties keep the lowest predecessor vertex.
    """
    instance.validate()
    others = list(range(1, instance.n_clusters))
    k = len(others)
    if k == 0:
        return Tour([0], 0.0, 0)
    if k > EXACT_CLUSTER_LIMIT or _exact_states(instance) > EXACT_STATE_LIMIT:
        raise InstanceTooLargeError(f"{k} clusters x {len(instance)} vertices exceed the exact solver limit")

    m = instance.matrix()
    n = len(instance)
    full = (1 << k) - 1
    members = [np.array(instance.clusters[c]) for c in others]
    bit_of = np.zeros(n, dtype=np.int64)
    for b, ids in enumerate(members):
        bit_of[ids] = b

    cost = np.full((full + 1, n), np.inf)
    parent = np.full((full + 1, n), -1, dtype=np.int64)
    for b, ids in enumerate(members):
        cost[1 << b, ids] = m[0, ids]
        parent[1 << b, ids] = 0

    for mask in range(1, full):
        row = cost[mask]
        live = np.flatnonzero(np.isfinite(row))
        if live.size == 0:
            continue
        for b, ids in enumerate(members):
            if mask & (1 << b):
                continue
            tot = row[live][:, None] + m[np.ix_(live, ids)]
            arg = tot.argmin(axis=0)
            val = tot[arg, np.arange(len(ids))]
            nxt = mask | (1 << b)
            better = val < cost[nxt, ids]
            cost[nxt, ids[better]] = val[better]
            parent[nxt, ids[better]] = live[arg[better]]

    end = int(cost[full].argmin())
    total = float(cost[full, end])
    route = [end]
    mask, v = full, end
    while True:
        p = int(parent[mask, v])
        mask ^= 1 << int(bit_of[v])
        if p == 0:
            break
        route.append(p)
        v = p
    route.append(0)
    route.reverse()
    return Tour(route, total, full)
