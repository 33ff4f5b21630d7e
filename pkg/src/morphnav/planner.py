"""Search: energy-optimal roadmap planning and 8-connected grid planning.

The roadmap planner is A* with a consistent lower-bound heuristic and a
closed set (no reopening); an independent uniform-cost implementation,
dijkstra_oracle, exists purely to cross-check it and deliberately shares no
search code with it.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable

from .costmodel import CostModel
from .env import OccupancyGrid
from .errors import InvalidStartError, NoPathError
from .roadmap import EdgeKind, NodeMode, Roadmap, RoadmapEdge

SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class PlanResult:
    """A roadmap path with its energy breakdown.

    node_ids/edges describe the path; total_cost is the accumulated edge
    cost, split into driving, flying (including the flight share of
    transition edges), and n_transitions reconfigurations at fixed cost
    each. `expanded` counts search expansions, for diagnostics.
    """

    node_ids: tuple[int, ...]
    edges: tuple[RoadmapEdge, ...]
    total_cost: float
    cost_ground: float
    cost_flight: float
    cost_transition: float
    n_transitions: int
    expanded: int


def _assemble_result(
    roadmap: Roadmap,
    cm: CostModel,
    node_ids: list[int],
    edge_idxs: list[int],
    total: float,
    expanded: int,
) -> PlanResult:
    ground = 0.0
    flight = 0.0
    n_t = 0
    c_t = cm.transition_cost()
    edges = []
    for idx in edge_idxs:
        e = roadmap.edges[idx]
        edges.append(e)
        if e.kind is EdgeKind.GROUND:
            ground += e.cost
        elif e.kind is EdgeKind.FLIGHT:
            flight += e.cost
        else:
            n_t += 1
            flight += e.cost - c_t
    return PlanResult(
        node_ids=tuple(node_ids),
        edges=tuple(edges),
        total_cost=total,
        cost_ground=ground,
        cost_flight=flight,
        cost_transition=n_t * c_t,
        n_transitions=n_t,
        expanded=expanded,
    )


def astar_multimodal(
    roadmap: Roadmap,
    start_id: int,
    goal_id: int,
    cm: CostModel,
    heuristic: Callable[[tuple, tuple], float] | None = None,
    assume_consistent: bool | None = None,
) -> PlanResult:
    """Minimum-energy path between two roadmap nodes.

    Uses the cost model's lower-bound heuristic by default; a custom
    heuristic callable (position, goal_position) -> float may be supplied
    for comparison runs, in which case optimality is not guaranteed and the
    consistency guard is disabled unless requested.

    Raises NoPathError (carrying the count of explored nodes) when the goal
    is unreachable.
    """
    n = len(roadmap.nodes)
    if not (0 <= start_id < n and 0 <= goal_id < n):
        raise ValueError("start/goal id out of range")
    if assume_consistent is None:
        assume_consistent = heuristic is None
    if heuristic is None:
        heuristic = cm.heuristic
    goal_pos = roadmap.nodes[goal_id].position
    if start_id == goal_id:
        return _assemble_result(roadmap, cm, [start_id], [], 0.0, 0)

    g = [math.inf] * n
    parent_edge = [-1] * n
    closed = [False] * n
    g[start_id] = 0.0
    # Heap entries order by f, then lower g, then lower node id.
    heap: list[tuple[float, float, int]] = [
        (heuristic(roadmap.nodes[start_id].position, goal_pos), 0.0, start_id)
    ]
    expanded = 0
    while heap:
        f, gu, u = heapq.heappop(heap)
        if closed[u] or gu > g[u]:
            continue
        closed[u] = True
        expanded += 1
        if u == goal_id:
            node_ids = [u]
            edge_idxs = []
            cur = u
            while cur != start_id:
                idx = parent_edge[cur]
                edge_idxs.append(idx)
                cur = roadmap.other_end(idx, cur)
                node_ids.append(cur)
            node_ids.reverse()
            edge_idxs.reverse()
            return _assemble_result(roadmap, cm, node_ids, edge_idxs, g[goal_id], expanded)
        for idx in roadmap.adjacency[u]:
            v = roadmap.other_end(idx, u)
            new_g = gu + roadmap.edges[idx].cost
            if new_g < g[v]:
                if closed[v]:
                    # A consistent heuristic can never improve a closed node
                    # beyond float noise from summation order.
                    if assume_consistent and new_g < g[v] - 1e-9 * max(1.0, g[v]):
                        raise AssertionError(
                            f"closed node {v} key decreased; heuristic inconsistent"
                        )
                    continue
                g[v] = new_g
                parent_edge[v] = idx
                heapq.heappush(
                    heap, (new_g + heuristic(roadmap.nodes[v].position, goal_pos), new_g, v)
                )
    raise NoPathError(f"no path from node {start_id} to {goal_id}", explored=expanded)


def dijkstra_oracle(
    roadmap: Roadmap, start_id: int, goal_id: int, cm: CostModel
) -> PlanResult:
    """Uniform-cost reference search; same contract as astar_multimodal.

    Kept as a separate implementation so the two can cross-check each other.
    """
    n = len(roadmap.nodes)
    if not (0 <= start_id < n and 0 <= goal_id < n):
        raise ValueError("start/goal id out of range")
    if start_id == goal_id:
        return _assemble_result(roadmap, cm, [start_id], [], 0.0, 0)
    dist = {start_id: 0.0}
    parent_edge: dict[int, int] = {}
    done = set()
    heap: list[tuple[float, int]] = [(0.0, start_id)]
    expanded = 0
    while heap:
        du, u = heapq.heappop(heap)
        if u in done:
            continue
        done.add(u)
        expanded += 1
        if u == goal_id:
            node_ids = [u]
            edge_idxs = []
            cur = u
            while cur != start_id:
                idx = parent_edge[cur]
                edge_idxs.append(idx)
                cur = roadmap.other_end(idx, cur)
                node_ids.append(cur)
            node_ids.reverse()
            edge_idxs.reverse()
            return _assemble_result(roadmap, cm, node_ids, edge_idxs, dist[u], expanded)
        for idx in roadmap.adjacency[u]:
            v = roadmap.other_end(idx, u)
            if v in done:
                continue
            cand = du + roadmap.edges[idx].cost
            if cand < dist.get(v, math.inf):
                dist[v] = cand
                parent_edge[v] = idx
                heapq.heappush(heap, (cand, v))
    raise NoPathError(f"no path from node {start_id} to {goal_id}", explored=expanded)


def dijkstra_all_costs(roadmap: Roadmap, source_id: int) -> list[float]:
    """Optimal cost from source to every node (inf when unreachable).

    One-to-all variant used by verification sweeps to check the heuristic
    against true optimal costs.
    """
    n = len(roadmap.nodes)
    dist = [math.inf] * n
    dist[source_id] = 0.0
    done = [False] * n
    heap: list[tuple[float, int]] = [(0.0, source_id)]
    while heap:
        du, u = heapq.heappop(heap)
        if done[u]:
            continue
        done[u] = True
        for idx in roadmap.adjacency[u]:
            v = roadmap.other_end(idx, u)
            cand = du + roadmap.edges[idx].cost
            if cand < dist[v]:
                dist[v] = cand
                heapq.heappush(heap, (cand, v))
    return dist


# -- grid planning -----------------------------------------------------------


@dataclass(frozen=True)
class GridPath:
    """8-connected sequence of free cells with its metric length."""

    cells: tuple[tuple[int, int], ...]
    length: float


_NEIGHBOR_STEPS = (
    (-1, -1), (-1, 0), (-1, 1),
    (0, -1), (0, 1),
    (1, -1), (1, 0), (1, 1),
)


def grid_plan(
    grid: OccupancyGrid, start_cell: tuple[int, int], goal_cell: tuple[int, int]
) -> GridPath | None:
    """Shortest 8-connected path over free cells, or None when no path
    exists (including an occupied or off-grid goal).

    Diagonal steps cost sqrt(2) times the resolution. An occupied or
    off-grid start raises InvalidStartError: that is a caller bug or a
    vehicle inside an obstacle, not an absence of paths.
    """
    start = (int(start_cell[0]), int(start_cell[1]))
    goal = (int(goal_cell[0]), int(goal_cell[1]))
    if grid.occupied(*start):
        raise InvalidStartError(f"start cell {start} occupied or outside grid")
    if grid.occupied(*goal):
        return None
    res = grid.resolution
    cells = grid.cells

    def h(cell: tuple[int, int]) -> float:
        return math.hypot(cell[0] - goal[0], cell[1] - goal[1]) * res

    g: dict[tuple[int, int], float] = {start: 0.0}
    parent: dict[tuple[int, int], tuple[int, int]] = {}
    closed: set[tuple[int, int]] = set()
    heap: list[tuple[float, float, tuple[int, int]]] = [(h(start), 0.0, start)]
    while heap:
        f, gu, u = heapq.heappop(heap)
        if u in closed:
            continue
        closed.add(u)
        if u == goal:
            path = [u]
            while u != start:
                u = parent[u]
                path.append(u)
            path.reverse()
            return GridPath(tuple(path), gu)
        height, width = cells.shape
        for dr, dc in _NEIGHBOR_STEPS:
            r, c = u[0] + dr, u[1] + dc
            if not (0 <= r < height and 0 <= c < width) or cells[r, c]:
                continue
            v = (r, c)
            if v in closed:
                continue
            step = res if dr == 0 or dc == 0 else SQRT2 * res
            cand = gu + step
            if cand < g.get(v, math.inf):
                g[v] = cand
                parent[v] = u
                heapq.heappush(heap, (cand + h(v), cand, v))
    return None


# -- waypoint extraction -------------------------------------------------------


class SegmentKind(Enum):
    DRIVE = "Drive"
    MORPH_THEN_FLY = "MorphThenFly"
    FLY = "Fly"
    LAND_THEN_MORPH = "LandThenMorph"


@dataclass(frozen=True)
class PathSegment:
    """A maximal run of same-kind motion along a plan; waypoints include
    both boundary nodes, so consecutive segments share one position."""

    kind: SegmentKind
    waypoints: tuple[tuple[float, float, float], ...]


def _segment_kind(edge: RoadmapEdge, from_id: int, roadmap: Roadmap) -> SegmentKind:
    if edge.kind is EdgeKind.GROUND:
        return SegmentKind.DRIVE
    if edge.kind is EdgeKind.FLIGHT:
        return SegmentKind.FLY
    if roadmap.nodes[from_id].mode is NodeMode.GROUND:
        return SegmentKind.MORPH_THEN_FLY
    return SegmentKind.LAND_THEN_MORPH


def path_to_waypoints(plan: PlanResult, roadmap: Roadmap) -> list[PathSegment]:
    """Compress a plan into executable segments.

    Consecutive edges of the same motion kind merge into one segment; a
    transition edge becomes MorphThenFly when traversed ground-to-air and
    LandThenMorph when traversed air-to-ground. A plan with no edges yields
    no segments.
    """
    if not plan.edges:
        return []
    segments: list[PathSegment] = []
    cur_kind: SegmentKind | None = None
    cur_points: list[tuple[float, float, float]] = []
    for i, edge in enumerate(plan.edges):
        from_id = plan.node_ids[i]
        to_id = plan.node_ids[i + 1]
        kind = _segment_kind(edge, from_id, roadmap)
        if kind is not cur_kind:
            if cur_kind is not None:
                segments.append(PathSegment(cur_kind, tuple(cur_points)))
            cur_kind = kind
            cur_points = [roadmap.nodes[from_id].position]
        cur_points.append(roadmap.nodes[to_id].position)
    segments.append(PathSegment(cur_kind, tuple(cur_points)))
    return segments
