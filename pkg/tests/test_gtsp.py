import math

import numpy as np
import pytest

from mapping.grid import BN, FREE, SemanticOccupancyGrid
from parsers.gtsplib import GtspFormatError, dump_instance, load_instance
from planners.gtsp import (
    EXACT_CLUSTER_LIMIT,
    START_KEY,
    GtspInstance,
    GtspVertex,
    InfeasibleInstanceError,
    InstanceTooLargeError,
    SolverBudget,
    brute_force,
    build_instance,
    held_karp,
    or_opt,
    solve,
)
from tools.geometry import Bounds
from view.spec import ViewSpec
from view.viewpoints import generate_viewpoints

BUDGET = SolverBudget(max_iterations=400, max_stagnation=150, trials=1)


def _instance(start, clusters) -> GtspInstance:
    """clusters: list of lists of positions; START becomes vertex 0 / cluster 0."""
    vertices = [GtspVertex(tuple(start), 0, START_KEY)]
    members = [[0]]
    for ci, positions in enumerate(clusters, start=1):
        ids = []
        for p in positions:
            ids.append(len(vertices))
            vertices.append(GtspVertex(tuple(float(c) for c in p), ci, ("node", len(vertices))))
        members.append(ids)
    return GtspInstance(vertices, members, [None] * len(members))


def _random_instance(rng) -> GtspInstance:
    n_clusters = int(rng.integers(2, 6))
    sizes = [int(rng.integers(1, 4)) for _ in range(n_clusters)]
    while sum(sizes) > 11:
        sizes[int(np.argmax(sizes))] -= 1
    clusters = [[rng.uniform(-10, 10, size=3) for _ in range(s)] for s in sizes]
    return _instance(rng.uniform(-10, 10, size=3), clusters)


def _is_feasible(instance: GtspInstance, route) -> bool:
    if route[0] != 0:
        return False
    seen = [instance.vertices[v].cluster for v in route]
    return sorted(seen) == list(range(instance.n_clusters))


def test_single_cluster_picks_nearest_vertex():
    inst = _instance((0, 0, 0), [[(5, 0, 0), (2, 0, 0), (9, 0, 0)]])
    tour = solve(inst, BUDGET)
    assert tour.vertices == [0, 2]
    assert tour.total_cost == pytest.approx(2.0)


def test_collinear_clusters_are_visited_in_order():
    inst = _instance((0, 0, 0), [[(3, 0, 0)], [(1, 0, 0)], [(4, 0, 0)], [(2, 0, 0)]])
    tour = solve(inst, BUDGET, seed=5)
    assert [inst.vertices[v].position[0] for v in tour.vertices] == [0, 1, 2, 3, 4]
    assert tour.total_cost == pytest.approx(4.0)


def _quality(budget: SolverBudget):
    rng = np.random.default_rng(2024)
    exact, worst = 0, 1.0
    for seed in range(100):
        inst = _random_instance(rng)
        opt = brute_force(inst)
        tour = solve(inst, budget, seed=seed)
        assert _is_feasible(inst, tour.vertices)
        assert tour.total_cost == pytest.approx(inst.path_cost(tour.vertices))
        worst = max(worst, tour.total_cost / opt.total_cost)
        if tour.total_cost <= opt.total_cost * (1 + 1e-9) + 1e-12:
            exact += 1
    return exact, worst


def test_solver_matches_brute_force_on_random_instances():
    exact, worst = _quality(SolverBudget())
    assert exact == 100
    assert worst <= 1.0 + 1e-9


@pytest.mark.slow
def test_search_alone_stays_near_optimum():
    exact, worst = _quality(SolverBudget(exact_clusters=0))
    assert exact >= 95
    assert worst <= 1.05


def test_held_karp_agrees_with_brute_force():
    rng = np.random.default_rng(99)
    for _ in range(30):
        inst = _random_instance(rng)
        inst.set_override(0, len(inst) - 1, 3.0 * inst.euclidean(0, len(inst) - 1))
        dp, opt = held_karp(inst), brute_force(inst)
        assert _is_feasible(inst, dp.vertices)
        assert dp.total_cost == pytest.approx(opt.total_cost)
        assert dp.total_cost == pytest.approx(inst.path_cost(dp.vertices))


def test_held_karp_refuses_large_instances():
    clusters = [[(i, 0, 0)] for i in range(EXACT_CLUSTER_LIMIT + 1)]
    with pytest.raises(InstanceTooLargeError):
        held_karp(_instance((0, 0, 0), clusters))


def test_or_opt_moves_a_misplaced_cluster():
    inst = _instance((0, 0, 0), [[(1, 0, 0)], [(2, 0, 0)], [(3, 0, 0)], [(4, 0, 0)]])
    vcluster = np.array([v.cluster for v in inst.vertices])
    route = or_opt(inst.matrix(), inst.clusters, vcluster, [0, 1, 3, 2, 4])
    assert route == [0, 1, 2, 3, 4]
    assert inst.path_cost(route) == pytest.approx(4.0)


def test_or_opt_never_increases_cost():
    rng = np.random.default_rng(8)
    for _ in range(30):
        inst = _random_instance(rng)
        vcluster = np.array([v.cluster for v in inst.vertices])
        route = [0] + [int(rng.choice(members)) for members in inst.clusters[1:]]
        route = [0] + [route[i] for i in rng.permutation(len(route) - 1) + 1]
        moved = or_opt(inst.matrix(), inst.clusters, vcluster, route)
        assert _is_feasible(inst, moved)
        assert inst.path_cost(moved) <= inst.path_cost(route) + 1e-9


@pytest.mark.slow
def test_search_on_medium_instances_against_exact():
    rng = np.random.default_rng(31)
    budget = SolverBudget(exact_clusters=0)
    for seed in range(10):
        clusters = [[rng.uniform(-15, 15, size=3) for _ in range(2)] for _ in range(11)]
        inst = _instance(rng.uniform(-15, 15, size=3), clusters)
        opt = held_karp(inst)
        tour = solve(inst, budget, seed=seed)
        assert _is_feasible(inst, tour.vertices)
        assert tour.total_cost <= 1.05 * opt.total_cost


def test_scaling_positions_scales_cost_and_keeps_order():
    rng = np.random.default_rng(7)
    clusters = [[rng.uniform(-10, 10, size=3) for _ in range(3)] for _ in range(6)]
    start = rng.uniform(-10, 10, size=3)
    a = solve(_instance(start, clusters), BUDGET, seed=3)
    b = solve(_instance(start * 2, [[p * 2 for p in c] for c in clusters]), BUDGET, seed=3)
    assert b.vertices == a.vertices
    assert b.total_cost == pytest.approx(2 * a.total_cost)


def test_same_seed_same_tour():
    rng = np.random.default_rng(1)
    clusters = [[rng.uniform(-10, 10, size=3) for _ in range(2)] for _ in range(9)]
    inst = _instance((0, 0, 0), clusters)
    assert solve(inst, BUDGET, seed=9).vertices == solve(inst, BUDGET, seed=9).vertices


def test_override_changes_cost_and_same_key_is_free():
    inst = _instance((0, 0, 0), [[(3, 0, 0)], [(0, 4, 0)]])
    assert inst.cost(0, 1) == pytest.approx(3.0)
    inst.set_override(0, 1, 12.0)
    assert inst.cost(0, 1) == 12.0
    assert inst.matrix()[1, 0] == 12.0
    tour = solve(inst, BUDGET)
    # 0 -> (0,4,0) -> (3,0,0) = 4 + 5 beats 12 + 5
    assert tour.vertices == [0, 2, 1]

    shared = GtspInstance(
        [GtspVertex((0.0, 0.0, 0.0), 0, START_KEY), GtspVertex((3.0, 0.0, 0.0), 1, (3, 0, 0)),
         GtspVertex((3.0, 0.0, 0.0), 2, (3, 0, 0))],
        [[0], [1], [2]],
        [None, (9, 0, 0), (9, 1, 0)],
    )
    assert shared.cost(1, 2) == 0.0
    assert solve(shared, BUDGET).total_cost == pytest.approx(3.0)


def test_empty_cluster_is_infeasible():
    inst = _instance((0, 0, 0), [[(1, 0, 0)], []])
    with pytest.raises(InfeasibleInstanceError):
        solve(inst)
    with pytest.raises(InfeasibleInstanceError):
        brute_force(inst)


def test_brute_force_refuses_large_instances():
    clusters = [[(i, j, 0) for j in range(4)] for i in range(10)]
    with pytest.raises(InstanceTooLargeError):
        brute_force(_instance((0, 0, 0), clusters))


def test_build_instance_clusters_by_bridge_voxel():
    grid = SemanticOccupancyGrid(1.0, Bounds((-12, -12, -12), (13, 13, 13)))
    grid.state[:] = FREE
    for v in ((0, 0, 0), (0, 0, 5)):
        grid.state[grid.bounds.local(v)] = BN
    cands = generate_viewpoints(grid, ViewSpec())
    inst = build_instance(cands, (-8.5, 0.5, 0.5))
    inst.validate()
    assert inst.vertices[0].is_start and inst.vertices[0].key == START_KEY
    assert inst.cluster_targets == [None, (0, 0, 0), (0, 0, 5)]
    assert len(inst) == 1 + len(cands)
    for ci in (1, 2):
        assert {inst.vertices[v].candidate.bridge_voxel for v in inst.clusters[ci]} == {inst.cluster_targets[ci]}


def test_gtsplib_round_trip():
    rng = np.random.default_rng(5)
    inst = _random_instance(rng)
    inst.set_override(0, 1, 42.5)
    again = load_instance(dump_instance(inst, name="rt"))
    assert again.clusters == inst.clusters
    assert np.array_equal(again.matrix(), inst.matrix())
    assert brute_force(again).total_cost == pytest.approx(brute_force(inst).total_cost)


def test_gtsplib_text_layout():
    inst = _instance((0, 0, 0), [[(1, 0, 0), (2, 0, 0)]])
    text = dump_instance(inst)
    lines = text.splitlines()
    assert lines[:5] == ["NAME : gatsbi", "TYPE : GTSP", "DIMENSION : 3", "GTSP_SETS : 2", "EDGE_WEIGHT_TYPE : EUC_3D"]
    assert "1 1 -1" in lines and "2 2 3 -1" in lines
    assert lines[-1] == "EOF"


@pytest.mark.parametrize(
    "text, message",
    [
        ("NAME : x\nTYPE : TSP\nNODE_COORD_SECTION\n1 0 0 0\nGTSP_SET_SECTION\n1 1 -1\nEOF\n", "TYPE"),
        ("NAME : x\nTYPE : GTSP\nNODE_COORD_SECTION\n1 0 0 0\n2 1 0 0\nGTSP_SET_SECTION\n1 1 2 -1\nEOF\n", "START"),
        ("NAME : x\nTYPE : GTSP\nNODE_COORD_SECTION\n1 0 0\nEOF\n", "coordinates"),
        ("TYPE : GTSP\nBOGUS_SECTION\nEOF\n", "unknown section"),
    ],
)
def test_gtsplib_errors(text, message):
    with pytest.raises(GtspFormatError, match=message):
        load_instance(text)


def test_solver_time_stays_small():
    rng = np.random.default_rng(11)
    clusters = [[rng.uniform(-20, 20, size=3) for _ in range(4)] for _ in range(30)]
    tour = solve(_instance((0, 0, 0), clusters), SolverBudget(max_iterations=300, max_stagnation=100, trials=1))
    assert len(tour.vertices) == 31
    assert math.isfinite(tour.total_cost)
