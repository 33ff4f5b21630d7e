"""Graph search: A* vs a reference Dijkstra, grid planning, plan segmentation."""

import heapq
import math

import numpy as np
import pytest
from scipy import ndimage

from morphnav.costmodel import CostModel
from morphnav.env import Aabb, Environment, OccupancyGrid
from morphnav.errors import InvalidStartError, NoPathError
from morphnav.planner import (
    GridPath,
    SegmentKind,
    astar_multimodal,
    dijkstra_all_costs,
    dijkstra_oracle,
    grid_plan,
    path_to_waypoints,
)
from morphnav.rng import SplitMix64
from morphnav.roadmap import (
    EdgeKind,
    NodeMode,
    PrmParams,
    Roadmap,
    build_roadmap,
    insert_query_nodes,
)

CM = CostModel()

_ZERO_H = lambda p, g: 0.0  # noqa: E731 - handy for fake-cost graphs


def _line_graph(costs):
    """Ground nodes at x = 0, 1, 2, ... with explicit edge costs
    {(a, b): cost}; lengths are set to the node distance."""
    n = 1 + max(max(a, b) for a, b in costs)
    roadmap = Roadmap(radius=100.0)
    for i in range(n):
        roadmap.add_node((float(i), 0.0, 0.0), NodeMode.GROUND)
    for (a, b), cost in costs.items():
        roadmap.add_edge(a, b, EdgeKind.GROUND, float(abs(b - a)), cost)
    return roadmap


# -- basic search -------------------------------------------------------------


def test_astar_picks_cheapest_route_on_manual_graph():
    roadmap = _line_graph({(0, 1): 1.0, (1, 2): 2.0, (0, 2): 10.0})
    plan = astar_multimodal(roadmap, 0, 2, CM, heuristic=_ZERO_H)
    assert plan.node_ids == (0, 1, 2)
    assert plan.total_cost == 3.0
    assert plan.n_transitions == 0
    assert len(plan.edges) == 2
    oracle = dijkstra_oracle(roadmap, 0, 2, CM)
    assert oracle.node_ids == plan.node_ids
    assert oracle.total_cost == plan.total_cost


def test_start_equals_goal():
    roadmap = _line_graph({(0, 1): 1.0})
    for search in (astar_multimodal, dijkstra_oracle):
        plan = search(roadmap, 1, 1, CM)
        assert plan.node_ids == (1,)
        assert plan.edges == ()
        assert plan.total_cost == 0.0


def test_two_node_ground_plan_costs_drive_energy():
    roadmap = Roadmap(radius=10.0)
    roadmap.add_node((0.0, 0.0, 0.0), NodeMode.GROUND)
    roadmap.add_node((3.0, 0.0, 0.0), NodeMode.GROUND)
    roadmap.add_edge(0, 1, EdgeKind.GROUND, 3.0, CM.ground_edge_cost(3.0))
    plan = astar_multimodal(roadmap, 0, 1, CM)
    assert plan.total_cost == 360.0
    assert plan.cost_ground == 360.0
    assert plan.cost_flight == 0.0 and plan.cost_transition == 0.0
    assert plan.expanded >= 1


def test_no_path_reports_explored_count():
    roadmap = _line_graph({(0, 1): 1.0})
    roadmap.add_node((50.0, 0.0, 0.0), NodeMode.GROUND)  # disconnected
    with pytest.raises(NoPathError) as info:
        astar_multimodal(roadmap, 0, 2, CM, heuristic=_ZERO_H)
    assert info.value.explored == 2
    with pytest.raises(NoPathError):
        dijkstra_oracle(roadmap, 0, 2, CM)
    with pytest.raises(ValueError):
        astar_multimodal(roadmap, 0, 99, CM)


def test_inconsistent_heuristic_trips_the_guard():
    # 0-2-1-3 is optimal (12), but an inflated h at node 2 makes the search
    # close node 1 early at cost 10. With the consistency guard on, the
    # later improvement of a closed node must raise; with it off, the
    # search keeps the inflated route and reports 20.
    roadmap = _line_graph({(0, 1): 10.0, (0, 2): 1.0, (1, 2): 1.0, (1, 3): 10.0})
    bad_h = lambda p, g: {0.0: 0.0, 1.0: 0.0, 2.0: 15.0, 3.0: 0.0}[p[0]]  # noqa: E731
    with pytest.raises(AssertionError):
        astar_multimodal(roadmap, 0, 3, CM, heuristic=bad_h, assume_consistent=True)
    plan = astar_multimodal(roadmap, 0, 3, CM, heuristic=bad_h)
    assert plan.total_cost == 20.0
    assert dijkstra_oracle(roadmap, 0, 3, CM).total_cost == 12.0


# -- randomized cross-check -----------------------------------------------------


def _walled_env():
    return Environment(
        Aabb((0.0, 0.0, 0.0), (12.0, 6.0, 3.0)),
        obstacles=(Aabb((4.9, 0.0, 0.0), (5.1, 6.0, 1.0)),),
    )


def test_astar_matches_dijkstra_on_seeded_roadmaps():
    env = _walled_env()
    pair_rng = SplitMix64(99)
    for seed in range(10):
        roadmap = build_roadmap(
            env, CM, PrmParams(n_ground=70, n_air=70, radius=2.0, seed=seed)
        )
        n = len(roadmap.nodes)
        for _ in range(5):
            a, b = pair_rng.randint(n), pair_rng.randint(n)
            try:
                fast = astar_multimodal(roadmap, a, b, CM)
            except NoPathError:
                with pytest.raises(NoPathError):
                    dijkstra_oracle(roadmap, a, b, CM)
                continue
            ref = dijkstra_oracle(roadmap, a, b, CM)
            assert fast.total_cost == pytest.approx(ref.total_cost, rel=1e-9)
            assert fast.expanded <= ref.expanded
            # The reported breakdown must reassemble into the total.
            parts = fast.cost_ground + fast.cost_flight + fast.cost_transition
            assert parts == pytest.approx(fast.total_cost, rel=1e-9)
            assert fast.cost_transition == pytest.approx(
                fast.n_transitions * CM.transition_cost(), rel=1e-12
            )
            recomputed = sum(e.cost for e in fast.edges)
            assert recomputed == pytest.approx(fast.total_cost, rel=1e-9)


def test_plan_path_is_edge_connected():
    env = _walled_env()
    params = PrmParams(n_ground=100, n_air=100, radius=2.0, seed=3)
    roadmap = build_roadmap(env, CM, params)
    roadmap, sid, gid = insert_query_nodes(
        roadmap, (1.0, 3.0, 0.0), (10.0, 3.0, 0.0), env, CM, params
    )
    plan = astar_multimodal(roadmap, sid, gid, CM)
    assert plan.node_ids[0] == sid and plan.node_ids[-1] == gid
    for i, edge in enumerate(plan.edges):
        assert {plan.node_ids[i], plan.node_ids[i + 1]} == {edge.a, edge.b}


def test_all_costs_agrees_with_single_queries():
    roadmap = build_roadmap(
        _walled_env(), CM, PrmParams(n_ground=60, n_air=60, radius=2.0, seed=7)
    )
    source = 5
    table = dijkstra_all_costs(roadmap, source)
    assert table[source] == 0.0
    rng = SplitMix64(17)
    for _ in range(15):
        target = rng.randint(len(roadmap.nodes))
        try:
            want = dijkstra_oracle(roadmap, source, target, CM).total_cost
        except NoPathError:
            want = math.inf
        assert table[target] == pytest.approx(want, rel=1e-12, abs=1e-12)


# -- grid planner ----------------------------------------------------------------


def _grid(cells, res=0.1):
    return OccupancyGrid(res, (0.0, 0.0), np.array(cells, dtype=bool))


def test_grid_plan_diagonal_and_straight():
    grid = _grid(np.zeros((10, 10)))
    path = grid_plan(grid, (0, 0), (9, 9))
    assert len(path.cells) == 10
    assert path.length == pytest.approx(9.0 * math.sqrt(2.0) * 0.1, rel=1e-12)
    path = grid_plan(grid, (0, 0), (0, 7))
    assert path.length == pytest.approx(0.7, rel=1e-12)
    trivial = grid_plan(grid, (4, 4), (4, 4))
    assert trivial.cells == ((4, 4),) and trivial.length == 0.0


def test_grid_plan_goal_failures_vs_start_errors():
    cells = np.zeros((6, 6))
    cells[2, 2] = 1
    grid = _grid(cells)
    assert grid_plan(grid, (0, 0), (2, 2)) is None  # occupied goal
    assert grid_plan(grid, (0, 0), (9, 9)) is None  # off-grid goal
    with pytest.raises(InvalidStartError):
        grid_plan(grid, (2, 2), (0, 0))
    with pytest.raises(InvalidStartError):
        grid_plan(grid, (-1, 0), (0, 0))


def test_grid_plan_routes_through_the_gap():
    cells = np.zeros((10, 10))
    cells[:, 5] = 1
    cells[8, 5] = 0
    grid = _grid(cells)
    path = grid_plan(grid, (0, 0), (0, 9))
    assert path is not None
    assert (8, 5) in path.cells
    for cell in path.cells:
        assert not grid.occupied(*cell)
    cells[8, 5] = 1
    assert grid_plan(_grid(cells), (0, 0), (0, 9)) is None


def _dijkstra_grid_length(grid, start, goal):
    """Independent shortest-path length over free cells, or None."""
    if grid.occupied(*goal):
        return None
    dist = {start: 0.0}
    heap = [(0.0, start)]
    done = set()
    while heap:
        d, cell = heapq.heappop(heap)
        if cell in done:
            continue
        if cell == goal:
            return d
        done.add(cell)
        r, c = cell
        for dr in (-1, 0, 1):
            for dc in (-1, 0, 1):
                if dr == dc == 0:
                    continue
                nxt = (r + dr, c + dc)
                if grid.occupied(*nxt) or nxt in done:
                    continue
                step = grid.resolution * (math.sqrt(2.0) if dr and dc else 1.0)
                nd = d + step
                if nd < dist.get(nxt, math.inf):
                    dist[nxt] = nd
                    heapq.heappush(heap, (nd, nxt))
    return None


def _path_is_valid(grid, path, start, goal):
    assert path.cells[0] == start and path.cells[-1] == goal
    length = 0.0
    for (r0, c0), (r1, c1) in zip(path.cells, path.cells[1:]):
        dr, dc = abs(r1 - r0), abs(c1 - c0)
        assert max(dr, dc) == 1  # 8-adjacent single step
        assert not grid.occupied(r1, c1)
        length += grid.resolution * (math.sqrt(2.0) if dr and dc else 1.0)
    assert not grid.occupied(*path.cells[0])
    assert length == pytest.approx(path.length, rel=1e-9, abs=1e-12)


def test_grid_plan_matches_flood_fill_and_is_optimal():
    eight = np.ones((3, 3), dtype=int)
    rng = SplitMix64(21)
    for _ in range(40):
        cells = np.zeros((25, 25), dtype=bool)
        for r in range(25):
            for c in range(25):
                cells[r, c] = rng.random() < 0.35
        grid = _grid(cells)
        free = np.argwhere(~cells)
        start = tuple(free[rng.randint(len(free))])
        goal = tuple(free[rng.randint(len(free))])
        labels, _ = ndimage.label(~cells, structure=eight)
        reachable = labels[start] == labels[goal]
        path = grid_plan(grid, start, goal)
        assert (path is not None) == reachable
        if path is not None:
            _path_is_valid(grid, path, start, goal)
            want = _dijkstra_grid_length(grid, start, goal)
            assert path.length == pytest.approx(want, rel=1e-9, abs=1e-12)


# -- segmentation -----------------------------------------------------------------


def test_segments_for_cross_wall_plan():
    env = _walled_env()
    params = PrmParams(
        n_ground=300, n_air=300, radius=2.0, seed=1, min_air_clearance=1.4
    )
    roadmap = build_roadmap(env, CM, params)
    roadmap, sid, gid = insert_query_nodes(
        roadmap, (1.0, 3.0, 0.0), (10.0, 3.0, 0.0), env, CM, params
    )
    plan = astar_multimodal(roadmap, sid, gid, CM)
    assert plan.n_transitions == 2
    segments = path_to_waypoints(plan, roadmap)
    kinds = [s.kind for s in segments]
    assert kinds.count(SegmentKind.MORPH_THEN_FLY) == 1
    assert kinds.count(SegmentKind.LAND_THEN_MORPH) == 1
    assert kinds.index(SegmentKind.MORPH_THEN_FLY) < kinds.index(
        SegmentKind.LAND_THEN_MORPH
    )
    # Consecutive segments share their boundary waypoint, and stitching
    # them back together reproduces the node path.
    for prev, nxt in zip(segments, segments[1:]):
        assert prev.waypoints[-1] == nxt.waypoints[0]
    stitched = list(segments[0].waypoints)
    for seg in segments[1:]:
        stitched.extend(seg.waypoints[1:])
    assert stitched == [roadmap.nodes[i].position for i in plan.node_ids]
    # Flight legs stay above the wall with margin.
    for seg in segments:
        if seg.kind is SegmentKind.FLY:
            assert all(w[2] > 1.35 for w in seg.waypoints)


def test_segments_empty_for_trivial_plan():
    roadmap = _line_graph({(0, 1): 1.0})
    plan = astar_multimodal(roadmap, 0, 0, CM)
    assert path_to_waypoints(plan, roadmap) == []
