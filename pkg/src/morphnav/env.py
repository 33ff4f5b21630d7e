"""World model: bounded arena, ground surface, box obstacles, occupancy grids.

The world is deliberately simple: an axis-aligned bounding volume, a ground
surface that is either flat or a bilinearly interpolated heightmap, and a set
of axis-aligned box obstacles. Collision queries treat the robot as a sphere
whose radius is the requested clearance; the clearance inflates obstacles
only, while the ground and the arena bounds are tested at the query point
itself (a ground vehicle sits exactly on the surface, so inflating the ground
would reject every legal pose).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

# Footprint inflation: half the 0.70 m vehicle length.
DEFAULT_INFLATION = 0.35
# Vertical band a driving robot sweeps above local ground.
DEFAULT_HEIGHT_BAND = (0.05, 0.60)
DEFAULT_GRID_RESOLUTION = 0.1


@dataclass(frozen=True)
class Aabb:
    """Axis-aligned box given by its two extreme corners, in meters."""

    min_corner: tuple[float, float, float]
    max_corner: tuple[float, float, float]
    name: str = ""

    def __post_init__(self):
        if len(self.min_corner) != 3 or len(self.max_corner) != 3:
            raise ConfigError("box corners must be 3-vectors")
        lo = tuple(float(v) for v in self.min_corner)
        hi = tuple(float(v) for v in self.max_corner)
        object.__setattr__(self, "min_corner", lo)
        object.__setattr__(self, "max_corner", hi)
        for axis in range(3):
            if not lo[axis] < hi[axis]:
                raise ConfigError(
                    f"box '{self.name}' degenerate on axis {axis}: "
                    f"{lo[axis]} >= {hi[axis]}"
                )

    def distance_to_point(self, p) -> float:
        """Euclidean distance from p to the box surface (0 inside)."""
        q = np.clip(np.asarray(p, dtype=float), self.min_corner, self.max_corner)
        return float(np.linalg.norm(np.asarray(p, dtype=float) - q))

    def overlaps(self, other: "Aabb") -> bool:
        """Closed-interval overlap test on all three axes."""
        for axis in range(3):
            if self.min_corner[axis] > other.max_corner[axis]:
                return False
            if self.max_corner[axis] < other.min_corner[axis]:
                return False
        return True

    def to_dict(self) -> dict:
        d = {"min": list(self.min_corner), "max": list(self.max_corner)}
        if self.name:
            d["name"] = self.name
        return d


class Heightmap:
    """Row-major grid of ground elevations sampled on a square lattice.

    Sample (i, j) sits at world position
    (origin_x + j * resolution, origin_y + i * resolution). Queries between
    samples are bilinearly interpolated; queries beyond the lattice clamp to
    the edge values.
    """

    def __init__(self, origin: tuple[float, float], resolution: float, data):
        self.origin = (float(origin[0]), float(origin[1]))
        self.resolution = float(resolution)
        if self.resolution <= 0.0:
            raise ConfigError("heightmap resolution must be positive")
        arr = np.asarray(data, dtype=float)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ConfigError("heightmap data must be a non-empty 2-D grid")
        arr = arr.copy()
        arr.flags.writeable = False
        self.data = arr

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    def elevations(self, x, y) -> np.ndarray:
        """Vectorized bilinear interpolation with edge clamping."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        u = (x - self.origin[0]) / self.resolution
        v = (y - self.origin[1]) / self.resolution
        j0 = np.clip(np.floor(u).astype(int), 0, max(self.cols - 2, 0))
        i0 = np.clip(np.floor(v).astype(int), 0, max(self.rows - 2, 0))
        j1 = np.minimum(j0 + 1, self.cols - 1)
        i1 = np.minimum(i0 + 1, self.rows - 1)
        fx = np.clip(u - j0, 0.0, 1.0)
        fy = np.clip(v - i0, 0.0, 1.0)
        z00 = self.data[i0, j0]
        z01 = self.data[i0, j1]
        z10 = self.data[i1, j0]
        z11 = self.data[i1, j1]
        top = z00 * (1.0 - fx) + z01 * fx
        bot = z10 * (1.0 - fx) + z11 * fx
        return top * (1.0 - fy) + bot * fy


class Environment:
    """Static world: bounds, ground surface, and axis-aligned obstacles."""

    def __init__(
        self,
        bounds: Aabb,
        obstacles=(),
        ground_const: float | None = 0.0,
        heightmap: Heightmap | None = None,
    ):
        if (ground_const is None) == (heightmap is None):
            raise ConfigError("exactly one of ground_const / heightmap required")
        self.bounds = bounds
        self.obstacles: tuple[Aabb, ...] = tuple(obstacles)
        self.ground_const = None if ground_const is None else float(ground_const)
        self.heightmap = heightmap
        self._validate()
        if self.obstacles:
            self._obs_min = np.array([o.min_corner for o in self.obstacles])
            self._obs_max = np.array([o.max_corner for o in self.obstacles])
        else:
            self._obs_min = np.zeros((0, 3))
            self._obs_max = np.zeros((0, 3))
        self._bmin = np.array(bounds.min_corner)
        self._bmax = np.array(bounds.max_corner)

    def _validate(self):
        lo, hi = self.bounds.min_corner, self.bounds.max_corner
        if self.ground_const is not None:
            if not (lo[2] <= self.ground_const <= hi[2]):
                raise ConfigError(
                    f"ground level {self.ground_const} outside bounds z range"
                )
        else:
            zmin = float(self.heightmap.data.min())
            zmax = float(self.heightmap.data.max())
            if zmin < lo[2] or zmax > hi[2]:
                raise ConfigError("heightmap elevations outside bounds z range")
        for obs in self.obstacles:
            if not obs.overlaps(self.bounds):
                raise ConfigError(f"obstacle '{obs.name}' lies outside bounds")

    # -- ground -----------------------------------------------------------

    def ground_height(self, x: float, y: float) -> float:
        """Ground elevation at (x, y). Raises ValueError outside the bounds
        footprint."""
        lo, hi = self.bounds.min_corner, self.bounds.max_corner
        if not (lo[0] <= x <= hi[0] and lo[1] <= y <= hi[1]):
            raise ValueError(f"({x}, {y}) outside bounds footprint")
        if self.ground_const is not None:
            return self.ground_const
        return float(self.heightmap.elevations(x, y))

    def ground_heights(self, x, y) -> np.ndarray:
        """Vectorized ground elevation; callers guarantee in-bounds points."""
        x = np.asarray(x, dtype=float)
        if self.ground_const is not None:
            return np.full(x.shape, self.ground_const)
        return self.heightmap.elevations(x, np.asarray(y, dtype=float))

    def is_flat(self) -> bool:
        return self.ground_const is not None

    # -- collision --------------------------------------------------------

    def points_in_collision(self, pts: np.ndarray, clearance: float) -> np.ndarray:
        """Vectorized collision test for an (N, 3) array of points.

        A point collides when the clearance sphere around it touches an
        obstacle (closed test: distance == clearance collides), when the
        point itself is below the local ground surface, or when the point
        leaves the arena bounds.
        """
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        out = (pts < self._bmin).any(axis=1) | (pts > self._bmax).any(axis=1)
        ground = self.ground_heights(pts[:, 0], pts[:, 1])
        below = pts[:, 2] < ground
        hit = out | below
        if len(self.obstacles):
            q = np.clip(pts[:, None, :], self._obs_min[None], self._obs_max[None])
            d2 = ((pts[:, None, :] - q) ** 2).sum(axis=2)
            hit |= (d2 <= clearance * clearance).any(axis=1)
        return hit

    def point_in_collision(self, p, clearance: float) -> bool:
        """Scalar form of points_in_collision; total over all of R^3."""
        return bool(self.points_in_collision(np.asarray(p, dtype=float), clearance)[0])

    def segment_in_collision(self, a, b, clearance: float) -> bool:
        """Swept test along segment a-b, sampled at a fixed spatial step.

        The step is min(0.05 m, clearance / 2) so thin obstacles larger than
        the step cannot slip between samples; both endpoints are always
        included. Degenerate segments reduce to a point test.
        """
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        length = float(np.linalg.norm(b - a))
        step = 0.05 if clearance <= 0.0 else min(0.05, clearance / 2.0)
        n = max(2, int(math.ceil(length / step)) + 1) if length > 0.0 else 1
        ts = np.linspace(0.0, 1.0, n)
        pts = a[None, :] + ts[:, None] * (b - a)[None, :]
        return bool(self.points_in_collision(pts, clearance).any())

    def segment_on_ground(self, a, b, tol: float = 1e-6) -> bool:
        """True when every sample along a-b lies on the ground surface."""
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        length = float(np.linalg.norm(b - a))
        n = max(2, int(math.ceil(length / 0.05)) + 1) if length > 0.0 else 1
        ts = np.linspace(0.0, 1.0, n)
        pts = a[None, :] + ts[:, None] * (b - a)[None, :]
        ground = self.ground_heights(pts[:, 0], pts[:, 1])
        return bool(np.all(np.abs(pts[:, 2] - ground) <= tol))

    def to_dict(self) -> dict:
        d = {
            "bounds": {
                "min": list(self.bounds.min_corner),
                "max": list(self.bounds.max_corner),
            },
            "obstacles": [o.to_dict() for o in self.obstacles],
        }
        if self.ground_const is not None:
            d["ground"] = {"const": self.ground_const}
        else:
            hm = self.heightmap
            d["ground"] = {
                "heightmap": {
                    "origin": list(hm.origin),
                    "resolution": hm.resolution,
                    "rows": hm.rows,
                    "cols": hm.cols,
                    "data": [float(v) for v in hm.data.ravel()],
                }
            }
        return d


class OccupancyGrid:
    """2.5-D occupancy raster over the arena footprint.

    Cell (row, col) covers the square
    [origin_x + col * res, origin_x + (col + 1) * res] x
    [origin_y + row * res, origin_y + (row + 1) * res].
    Cells are either free or occupied; the grid is immutable once built.
    """

    def __init__(self, resolution: float, origin: tuple[float, float], cells: np.ndarray):
        if resolution <= 0.0:
            raise ConfigError("grid resolution must be positive")
        self.resolution = float(resolution)
        self.origin = (float(origin[0]), float(origin[1]))
        arr = np.array(cells, dtype=bool)
        if arr.ndim != 2:
            raise ConfigError("grid cells must be 2-D")
        arr.flags.writeable = False
        self.cells = arr
        self._distance_cells: np.ndarray | None = None

    @property
    def height(self) -> int:
        """Number of rows (y direction)."""
        return self.cells.shape[0]

    @property
    def width(self) -> int:
        """Number of columns (x direction)."""
        return self.cells.shape[1]

    def in_grid(self, row: int, col: int) -> bool:
        return 0 <= row < self.height and 0 <= col < self.width

    def world_to_cell(self, x: float, y: float) -> tuple[int, int]:
        """Cell containing world point (x, y); points on a shared edge fall
        into the higher-index cell, except the outer boundary which maps
        inward so the whole footprint is covered."""
        col = int(math.floor((x - self.origin[0]) / self.resolution))
        row = int(math.floor((y - self.origin[1]) / self.resolution))
        if col == self.width and abs((x - self.origin[0]) - self.width * self.resolution) < 1e-9:
            col -= 1
        if row == self.height and abs((y - self.origin[1]) - self.height * self.resolution) < 1e-9:
            row -= 1
        return row, col

    def cell_center(self, row: int, col: int) -> tuple[float, float]:
        return (
            self.origin[0] + (col + 0.5) * self.resolution,
            self.origin[1] + (row + 0.5) * self.resolution,
        )

    def occupied(self, row: int, col: int) -> bool:
        """Occupancy at a cell; anything outside the raster counts occupied."""
        if not self.in_grid(row, col):
            return True
        return bool(self.cells[row, col])

    def occupied_at_world(self, x: float, y: float) -> bool:
        row, col = self.world_to_cell(x, y)
        return self.occupied(row, col)

    def distance_to_occupied(self, x: float, y: float) -> float:
        """Approximate clearance (m) from (x, y) to the nearest occupied
        cell, measured between cell centers. Infinite on an empty grid;
        zero inside occupied or off-grid cells."""
        row, col = self.world_to_cell(x, y)
        if not self.in_grid(row, col):
            return 0.0
        if not self.cells.any():
            return math.inf
        if self._distance_cells is None:
            from scipy import ndimage

            free = ~self.cells
            dist = ndimage.distance_transform_edt(free)
            dist.flags.writeable = False
            self._distance_cells = dist
        return float(self._distance_cells[row, col]) * self.resolution


def project_to_grid(
    env: Environment,
    resolution: float = DEFAULT_GRID_RESOLUTION,
    inflation: float = DEFAULT_INFLATION,
    height_band: tuple[float, float] = DEFAULT_HEIGHT_BAND,
) -> OccupancyGrid:
    """Rasterize the obstacles a driving robot must avoid.

    A cell is occupied when some obstacle both (a) vertically intersects
    [ground + band_low, ground + band_high], with ground evaluated at the
    cell center, and (b) horizontally overlaps the cell footprint after the
    obstacle is expanded by `inflation` on each side (square dilation, so
    boundary contact counts as overlap).

    Args:
        env: world to project.
        resolution: cell edge length in meters.
        inflation: footprint half-width added around every obstacle.
        height_band: (low, high) offsets above local ground that matter to a
            ground vehicle.

    Returns:
        OccupancyGrid covering the bounds footprint.

    Raises:
        ConfigError: non-positive resolution, resolution exceeding the
            bounds extent, negative inflation, or an inverted height band.
    """
    if resolution <= 0.0:
        raise ConfigError("grid resolution must be positive")
    if inflation < 0.0:
        raise ConfigError("inflation must be non-negative")
    low, high = height_band
    if low > high:
        raise ConfigError("height band must satisfy low <= high")
    lo, hi = env.bounds.min_corner, env.bounds.max_corner
    extent_x = hi[0] - lo[0]
    extent_y = hi[1] - lo[1]
    if resolution > extent_x or resolution > extent_y:
        raise ConfigError("grid resolution exceeds bounds extent")
    width = max(1, int(math.ceil(extent_x / resolution - 1e-9)))
    height = max(1, int(math.ceil(extent_y / resolution - 1e-9)))
    cells = np.zeros((height, width), dtype=bool)
    x0, y0 = lo[0], lo[1]

    for obs in env.obstacles:
        ex_lo = (obs.min_corner[0] - inflation, obs.min_corner[1] - inflation)
        ex_hi = (obs.max_corner[0] + inflation, obs.max_corner[1] + inflation)
        # Closed-interval overlap: cell [a, a+res] touches [lo, hi] iff
        # a <= hi and a+res >= lo.
        c0 = int(math.ceil((ex_lo[0] - x0) / resolution - 1.0 - 1e-9))
        c1 = int(math.floor((ex_hi[0] - x0) / resolution + 1e-9))
        r0 = int(math.ceil((ex_lo[1] - y0) / resolution - 1.0 - 1e-9))
        r1 = int(math.floor((ex_hi[1] - y0) / resolution + 1e-9))
        c0, c1 = max(c0, 0), min(c1, width - 1)
        r0, r1 = max(r0, 0), min(r1, height - 1)
        if c0 > c1 or r0 > r1:
            continue
        rows = np.arange(r0, r1 + 1)
        cols = np.arange(c0, c1 + 1)
        cy = y0 + (rows + 0.5) * resolution
        cx = x0 + (cols + 0.5) * resolution
        gx, gy = np.meshgrid(cx, cy)
        ground = env.ground_heights(gx.ravel(), gy.ravel()).reshape(gx.shape)
        band_ok = (obs.min_corner[2] <= ground + high) & (
            obs.max_corner[2] >= ground + low
        )
        block = cells[r0 : r1 + 1, c0 : c1 + 1]
        block |= band_ok
        cells[r0 : r1 + 1, c0 : c1 + 1] = block

    return OccupancyGrid(resolution, (x0, y0), cells)


# -- serialization ---------------------------------------------------------


def environment_from_dict(d: dict) -> Environment:
    """Build an Environment from the scenario JSON schema."""
    try:
        bounds = Aabb(tuple(d["bounds"]["min"]), tuple(d["bounds"]["max"]), "bounds")
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"invalid or missing bounds: {exc}") from exc
    ground = d.get("ground", {"const": 0.0})
    if isinstance(ground, (int, float)) and not isinstance(ground, bool):
        ground = {"const": float(ground)}
    if not isinstance(ground, dict):
        raise ConfigError("ground must be a number or an object")
    ground_const = None
    heightmap = None
    if "const" in ground:
        ground_const = float(ground["const"])
    elif "heightmap" in ground:
        hm = ground["heightmap"]
        try:
            rows, cols = int(hm["rows"]), int(hm["cols"])
            data = np.asarray(hm["data"], dtype=float)
            if data.size != rows * cols:
                raise ConfigError(
                    f"heightmap data length {data.size} != rows*cols {rows * cols}"
                )
            heightmap = Heightmap(
                tuple(hm["origin"]), float(hm["resolution"]), data.reshape(rows, cols)
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"invalid heightmap: {exc}") from exc
    else:
        raise ConfigError("ground must specify 'const' or 'heightmap'")
    obstacles = []
    for i, od in enumerate(d.get("obstacles", [])):
        try:
            obstacles.append(
                Aabb(tuple(od["min"]), tuple(od["max"]), od.get("name", f"obstacle{i}"))
            )
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"invalid obstacle {i}: {exc}") from exc
    return Environment(bounds, obstacles, ground_const, heightmap)


def load_environment(path) -> Environment:
    """Load an Environment from a JSON file."""
    try:
        with open(path) as fh:
            d = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read environment '{path}': {exc}") from exc
    if not isinstance(d, dict):
        raise ConfigError("environment file must hold a JSON object")
    return environment_from_dict(d)
