"""Energy cost model for driving, flying, and morphing between the two.

Driving and hovering are modeled as constant electrical power draws at a
constant commanded speed, so a traversal of length d costs power * d / speed.
Flight additionally pays the potential energy of any net climb and recovers
it on descent, floored at zero per edge. Morphing is a fixed-duration,
fixed-power maneuver.

Default power/speed numbers are calibration placeholders for a roughly
6 kg morphing robot; only the mass is a measured value. Calibrate the
rest against hardware before trusting absolute energy figures.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

from .errors import ConfigError

_COST_KEYS = (
    "ground_power",
    "ground_speed",
    "flight_power",
    "flight_speed",
    "morph_power",
    "morph_duration",
    "mass",
    "gravity",
)


@dataclass(frozen=True)
class CostModel:
    """Energy parameters, SI units throughout.

    ground_power: electrical draw while driving (W).
    ground_speed: commanded driving speed (m/s).
    flight_power: electrical draw while airborne (W).
    flight_speed: commanded flight speed (m/s).
    morph_power: draw during a reconfiguration (W).
    morph_duration: time one reconfiguration takes (s).
    mass: vehicle mass (kg).
    gravity: gravitational acceleration (m/s^2).
    """

    ground_power: float = 120.0
    ground_speed: float = 1.0
    flight_power: float = 600.0
    flight_speed: float = 1.0
    morph_power: float = 50.0
    morph_duration: float = 4.0
    mass: float = 6.0
    gravity: float = 9.81

    def __post_init__(self):
        for key in _COST_KEYS:
            if getattr(self, key) <= 0.0:
                raise ConfigError(f"cost parameter '{key}' must be positive")
        # The lower-bound heuristic charges horizontal travel at the ground
        # rate, which is only valid when flying a meter never beats driving it.
        if self.ground_power / self.ground_speed > self.flight_power / self.flight_speed:
            raise ConfigError(
                "ground energy per meter must not exceed flight energy per "
                "meter (ground_power/ground_speed <= flight_power/flight_speed)"
            )

    # -- per-edge costs -----------------------------------------------------

    def ground_edge_cost(self, length: float) -> float:
        """Energy (J) to drive `length` meters."""
        if length < 0.0:
            raise ValueError("length must be non-negative")
        return self.ground_power * length / self.ground_speed

    def flight_edge_cost(self, length: float, z_a: float, z_b: float) -> float:
        """Energy (J) to fly a straight segment from altitude z_a to z_b.

        Hover power for the traversal time plus the potential energy of the
        altitude change; descents recover potential but never below zero.
        """
        if length < 0.0:
            raise ValueError("length must be non-negative")
        if length + 1e-12 < abs(z_b - z_a):
            raise ValueError("segment length cannot be less than its altitude change")
        raw = self.flight_power * length / self.flight_speed + self.mass * self.gravity * (
            z_b - z_a
        )
        return max(0.0, raw)

    def transition_cost(self) -> float:
        """Energy (J) for one reconfiguration."""
        return self.morph_power * self.morph_duration

    # -- heuristics -----------------------------------------------------------

    def heuristic(self, position, goal) -> float:
        """Lower bound on remaining cost-to-goal.

        Horizontal distance is charged at the ground rate (never above the
        flight rate, by construction) and any net climb at pure potential
        energy. Keeps A* admissible and consistent on flat-ground worlds.
        """
        dx = goal[0] - position[0]
        dy = goal[1] - position[1]
        d_xy = math.hypot(dx, dy)
        climb = max(0.0, goal[2] - position[2])
        return (self.ground_power / self.ground_speed) * d_xy + self.mass * self.gravity * climb

    def prose_heuristic(self, position, goal) -> float:
        """Literal decomposition: walk the straight line, fly the altitude gap.

        Not a lower bound (vertical flight pays hover power both ways), so
        plans using it carry no optimality guarantee; kept for comparison.
        """
        dx = goal[0] - position[0]
        dy = goal[1] - position[1]
        d_xy = math.hypot(dx, dy)
        dz = goal[2] - position[2]
        walk = (self.ground_power / self.ground_speed) * d_xy
        if dz == 0.0:
            return walk
        return walk + self.flight_edge_cost(abs(dz), position[2], goal[2])

    def to_dict(self) -> dict:
        return {key: getattr(self, key) for key in _COST_KEYS}


def cost_model_from_dict(d: dict) -> CostModel:
    """Build a CostModel from a config dict; missing keys use defaults."""
    unknown = set(d) - set(_COST_KEYS)
    if unknown:
        raise ConfigError(f"unknown cost parameter(s): {sorted(unknown)}")
    try:
        kwargs = {key: float(d[key]) for key in _COST_KEYS if key in d}
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"cost parameters must be numbers: {exc}") from exc
    return CostModel(**kwargs)


def load_config_file(path) -> dict:
    """Read a JSON config file holding cost, heuristic, and local-nav blocks."""
    try:
        with open(path) as fh:
            d = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config '{path}': {exc}") from exc
    if not isinstance(d, dict):
        raise ConfigError("config file must hold a JSON object")
    return d


def load_cost_config(path) -> CostModel:
    """Load just the CostModel from a config file."""
    d = load_config_file(path)
    cost = {k: v for k, v in d.items() if k in _COST_KEYS}
    return cost_model_from_dict(cost)
