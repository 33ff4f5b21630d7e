"""Multi-modal probabilistic roadmap: driving nodes on the ground surface,
flying nodes in the free airspace, and edges for driving, flying, and
mode transitions.

Construction is fully deterministic: node positions come from a SplitMix64
stream seeded by the build parameters, ground nodes are sampled before
aerial ones, and each new node is connected to the already-inserted nodes in
ascending id order. Two builds from the same parameters are bit-identical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .costmodel import CostModel
from .env import Environment
from .errors import ConfigError, QueryNodeIsolatedError, SamplingError
from .rng import SplitMix64

SAMPLE_RETRY_BUDGET = 1000
GROUND_SURFACE_TOL = 1e-6
DUPLICATE_NODE_TOL = 1e-9


class NodeMode(Enum):
    GROUND = "Ground"
    AERIAL = "Aerial"


class EdgeKind(Enum):
    GROUND = "Ground"
    FLIGHT = "Flight"
    TRANSITION = "Transition"


@dataclass(frozen=True)
class RoadmapNode:
    id: int
    position: tuple[float, float, float]
    mode: NodeMode


@dataclass(frozen=True)
class RoadmapEdge:
    """Undirected edge; `a < b` by construction and `cost` is the stored
    traversal energy for the a-to-b orientation, used for both directions."""

    a: int
    b: int
    kind: EdgeKind
    length: float
    cost: float


@dataclass(frozen=True)
class PrmParams:
    """Roadmap build parameters.

    n_ground / n_air: node counts per mode.
    radius: connection radius in meters.
    seed: PRNG seed for the sample stream.
    clearance: collision-sphere radius for nodes and swept edges.
    min_air_clearance: minimum height of an aerial node above local ground.
    z_max: altitude cap for aerial sampling; None means the bounds ceiling.
    use_spatial_hash: neighbor lookup strategy; the linear fallback yields
        identical edge sets and exists to cross-check the hash.
    """

    n_ground: int = 200
    n_air: int = 200
    radius: float = 2.0
    seed: int = 0
    clearance: float = 0.35
    min_air_clearance: float = 0.3
    z_max: float | None = None
    use_spatial_hash: bool = True

    def __post_init__(self):
        if self.n_ground < 0 or self.n_air < 0:
            raise ConfigError("node counts must be non-negative")
        if self.radius <= 0.0:
            raise ConfigError("connection radius must be positive")
        if self.clearance < 0.0:
            raise ConfigError("clearance must be non-negative")
        if self.min_air_clearance < 0.0:
            raise ConfigError("min_air_clearance must be non-negative")


class _SpatialHash:
    """Uniform grid over 3-space; cell size equals the connection radius so
    a radius query only has to visit the adjacent cell shell."""

    def __init__(self, cell_size: float):
        self.cell = float(cell_size)
        self.table: dict[tuple[int, int, int], list[int]] = {}

    def _key(self, p) -> tuple[int, int, int]:
        c = self.cell
        return (
            int(math.floor(p[0] / c)),
            int(math.floor(p[1] / c)),
            int(math.floor(p[2] / c)),
        )

    def insert(self, nid: int, p) -> None:
        self.table.setdefault(self._key(p), []).append(nid)

    def query(self, p, radius: float) -> list[int]:
        """Ids of all nodes in cells overlapping the query sphere's bbox."""
        c = self.cell
        lo = [int(math.floor((p[i] - radius) / c)) for i in range(3)]
        hi = [int(math.floor((p[i] + radius) / c)) for i in range(3)]
        out: list[int] = []
        for ix in range(lo[0], hi[0] + 1):
            for iy in range(lo[1], hi[1] + 1):
                for iz in range(lo[2], hi[2] + 1):
                    bucket = self.table.get((ix, iy, iz))
                    if bucket:
                        out.extend(bucket)
        return out


class Roadmap:
    """Growable node/edge store with undirected adjacency."""

    def __init__(self, radius: float, use_spatial_hash: bool = True):
        self.radius = float(radius)
        self.nodes: list[RoadmapNode] = []
        self.edges: list[RoadmapEdge] = []
        self.adjacency: list[list[int]] = []
        self._use_hash = use_spatial_hash
        self._hash = _SpatialHash(self.radius) if use_spatial_hash else None

    def add_node(self, position, mode: NodeMode) -> RoadmapNode:
        node = RoadmapNode(len(self.nodes), tuple(float(v) for v in position), mode)
        self.nodes.append(node)
        self.adjacency.append([])
        if self._hash is not None:
            self._hash.insert(node.id, node.position)
        return node

    def add_edge(self, a: int, b: int, kind: EdgeKind, length: float, cost: float) -> RoadmapEdge:
        if a == b:
            raise ValueError("self-loop edges are not allowed")
        edge = RoadmapEdge(min(a, b), max(a, b), kind, length, cost)
        idx = len(self.edges)
        self.edges.append(edge)
        self.adjacency[a].append(idx)
        self.adjacency[b].append(idx)
        return edge

    def degree(self, nid: int) -> int:
        return len(self.adjacency[nid])

    def neighbors_within(self, position, radius: float) -> list[int]:
        """Node ids within `radius` of position, ascending. The spatial hash
        and the linear scan must agree; both filter on exact distance."""
        if self._hash is not None:
            candidates = self._hash.query(position, radius)
        else:
            candidates = range(len(self.nodes))
        p = tuple(position)
        out = [
            nid
            for nid in candidates
            if math.dist(self.nodes[nid].position, p) <= radius
        ]
        out.sort()
        return out

    def nearest_node(self, position) -> tuple[int, float] | None:
        """(id, distance) of the closest node, or None when empty."""
        if not self.nodes:
            return None
        p = tuple(position)
        best = min(
            ((math.dist(n.position, p), n.id) for n in self.nodes),
        )
        return best[1], best[0]

    def other_end(self, edge_idx: int, nid: int) -> int:
        e = self.edges[edge_idx]
        return e.b if e.a == nid else e.a


def edge_kind_for(mode_a: NodeMode, mode_b: NodeMode) -> EdgeKind:
    if mode_a is NodeMode.GROUND and mode_b is NodeMode.GROUND:
        return EdgeKind.GROUND
    if mode_a is NodeMode.AERIAL and mode_b is NodeMode.AERIAL:
        return EdgeKind.FLIGHT
    return EdgeKind.TRANSITION


def edge_cost_for(cm: CostModel, kind: EdgeKind, length: float, z_a: float, z_b: float) -> float:
    """Stored traversal cost for an edge in its a-to-b orientation.

    Transition edges morph at the ground endpoint and then fly the segment,
    so they pay one reconfiguration plus the flight cost of the edge.
    """
    if kind is EdgeKind.GROUND:
        return cm.ground_edge_cost(length)
    if kind is EdgeKind.FLIGHT:
        return cm.flight_edge_cost(length, z_a, z_b)
    return cm.transition_cost() + cm.flight_edge_cost(length, z_a, z_b)


# -- sampling ----------------------------------------------------------------


def sample_ground_node(env: Environment, params: PrmParams, rng: SplitMix64):
    """One collision-free position on the ground surface, or SamplingError
    after the retry budget."""
    lo, hi = env.bounds.min_corner, env.bounds.max_corner
    for _ in range(SAMPLE_RETRY_BUDGET):
        x = rng.uniform(lo[0], hi[0])
        y = rng.uniform(lo[1], hi[1])
        z = env.ground_height(x, y)
        if not env.point_in_collision((x, y, z), params.clearance):
            return (x, y, z)
    raise SamplingError(
        f"no collision-free ground sample in {SAMPLE_RETRY_BUDGET} attempts"
    )


def sample_air_node(env: Environment, params: PrmParams, rng: SplitMix64):
    """One collision-free position in the flyable airspace, uniform over
    {(x, y, z): ground(x, y) + min_air_clearance <= z <= z_max}."""
    lo, hi = env.bounds.min_corner, env.bounds.max_corner
    z_hi = hi[2] if params.z_max is None else min(params.z_max, hi[2])
    if z_hi <= lo[2]:
        raise SamplingError("aerial sampling band is empty (z_max at or below floor)")
    for _ in range(SAMPLE_RETRY_BUDGET):
        x = rng.uniform(lo[0], hi[0])
        y = rng.uniform(lo[1], hi[1])
        z = rng.uniform(lo[2], z_hi)
        if z < env.ground_height(x, y) + params.min_air_clearance:
            continue
        if not env.point_in_collision((x, y, z), params.clearance):
            return (x, y, z)
    raise SamplingError(
        f"no collision-free aerial sample in {SAMPLE_RETRY_BUDGET} attempts"
    )


# -- construction --------------------------------------------------------------


def connect_node(
    roadmap: Roadmap,
    node: RoadmapNode,
    env: Environment,
    cm: CostModel,
    params: PrmParams,
    radius: float | None = None,
) -> Roadmap:
    """Insert `node` and add every valid edge to nodes within the radius.

    An edge is valid when the straight segment is collision-free at the
    build clearance; driving edges additionally require every sample of the
    segment to lie on the ground surface (flat-ground traversal). Edges are
    stored with the lower node id first, so the stored cost orientation is
    from the older node toward the newer one.
    """
    if node.id != len(roadmap.nodes):
        raise ValueError("node id must be the next free id")
    roadmap.add_node(node.position, node.mode)
    _connect_edges(
        roadmap, node.id, env, cm, params, roadmap.radius if radius is None else radius
    )
    return roadmap


def build_roadmap(env: Environment, cm: CostModel, params: PrmParams) -> Roadmap:
    """Sample and connect a full roadmap: all ground nodes first, then all
    aerial nodes, each connected on insertion."""
    rng = SplitMix64(params.seed)
    roadmap = Roadmap(params.radius, params.use_spatial_hash)
    for _ in range(params.n_ground):
        pos = sample_ground_node(env, params, rng)
        connect_node(roadmap, RoadmapNode(len(roadmap.nodes), pos, NodeMode.GROUND), env, cm, params)
    for _ in range(params.n_air):
        pos = sample_air_node(env, params, rng)
        connect_node(roadmap, RoadmapNode(len(roadmap.nodes), pos, NodeMode.AERIAL), env, cm, params)
    return roadmap


def insert_query_nodes(
    roadmap: Roadmap,
    start,
    goal,
    env: Environment,
    cm: CostModel,
    params: PrmParams,
) -> tuple[Roadmap, int, int]:
    """Insert start and goal as ground nodes snapped to the surface.

    A query position within 1e-9 of an existing node reuses that node
    instead of inserting a duplicate. A query node that gains no edges at
    the build radius is retried once at double the radius; if it is still
    isolated, QueryNodeIsolatedError is raised.
    """
    ids = []
    for label, pos in (("start", start), ("goal", goal)):
        x, y = float(pos[0]), float(pos[1])
        lo, hi = env.bounds.min_corner, env.bounds.max_corner
        if not (lo[0] <= x <= hi[0] and lo[1] <= y <= hi[1]):
            raise ConfigError(f"{label} outside bounds footprint")
        snapped = (x, y, env.ground_height(x, y))
        if env.point_in_collision(snapped, params.clearance):
            raise ConfigError(f"{label} position is in collision")
        nearest = roadmap.nearest_node(snapped)
        if nearest is not None and nearest[1] <= DUPLICATE_NODE_TOL:
            ids.append(nearest[0])
            continue
        node = RoadmapNode(len(roadmap.nodes), snapped, NodeMode.GROUND)
        connect_node(roadmap, node, env, cm, params)
        if roadmap.degree(node.id) == 0:
            _connect_edges(roadmap, node.id, env, cm, params, 2.0 * roadmap.radius)
        if roadmap.degree(node.id) == 0:
            raise QueryNodeIsolatedError(f"query node '{label}' isolated")
        ids.append(node.id)
    return roadmap, ids[0], ids[1]


def _connect_edges(
    roadmap: Roadmap,
    nid: int,
    env: Environment,
    cm: CostModel,
    params: PrmParams,
    radius: float,
) -> None:
    """Add every valid edge between an inserted node and its neighbors."""
    node = roadmap.nodes[nid]
    for other_id in roadmap.neighbors_within(node.position, radius):
        if other_id == nid:
            continue
        other = roadmap.nodes[other_id]
        length = math.dist(node.position, other.position)
        if length <= DUPLICATE_NODE_TOL:
            continue
        kind = edge_kind_for(other.mode, node.mode)
        if kind is EdgeKind.GROUND and not env.segment_on_ground(
            other.position, node.position, GROUND_SURFACE_TOL
        ):
            continue
        if env.segment_in_collision(other.position, node.position, params.clearance):
            continue
        cost = edge_cost_for(cm, kind, length, other.position[2], node.position[2])
        roadmap.add_edge(other_id, nid, kind, length, cost)


# -- export -------------------------------------------------------------------


def roadmap_to_dict(roadmap: Roadmap) -> dict:
    """JSON-ready dict; nodes by id, edges sorted by (a, b)."""
    return {
        "nodes": [
            {"id": n.id, "position": list(n.position), "mode": n.mode.value}
            for n in roadmap.nodes
        ],
        "edges": [
            {
                "a": e.a,
                "b": e.b,
                "kind": e.kind.value,
                "length": e.length,
                "cost": e.cost,
            }
            for e in sorted(roadmap.edges, key=lambda e: (e.a, e.b))
        ],
    }
