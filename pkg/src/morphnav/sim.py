"""Mission execution for a robot that drives, morphs, and flies.

The executor mirrors a simple field procedure: drive toward the active
waypoint with grid planning plus dynamic-window control; when no drivable
path exists, assume the waypoint is reachable by air, morph, fly a
takeoff / fixed-altitude cruise / vertical descent profile to it, morph
back, and continue driving.

Actuation latency is modeled as a FIFO delay line on all velocity commands:
the vehicle executes the command issued `latency` seconds ago, which is what
produces the altitude overshoot seen when a controller keeps commanding
descent until its (stale) effect catches up.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from enum import Enum

from .costmodel import CostModel
from .env import (
    DEFAULT_GRID_RESOLUTION,
    DEFAULT_HEIGHT_BAND,
    DEFAULT_INFLATION,
    Environment,
    OccupancyGrid,
    project_to_grid,
)
from .errors import ConfigError, InvalidStartError
from .localnav import DwaParams, VelocityCommand, dwa_step
from .planner import GridPath, grid_plan
from .rng import SplitMix64

# Carrot distance for tracking the grid path.
LOOKAHEAD_DIST = 1.2
# Horizontal arrival threshold ending the cruise phase.
CRUISE_ARRIVAL = 0.05
# Max commanded climb rate: a 1.5 thrust-to-weight vehicle has half a g of
# spare lift, which bounds sustained vertical speed commands we accept.
MAX_CLIMB_RATE = 4.9


class LocomotionMode(Enum):
    UGV = "UGV"
    UAS = "UAS"
    MORPHING = "Morphing"


class MissionPhase(Enum):
    GROUND_NAV = "GroundNav"
    MORPH_TO_UAS = "MorphToUas"
    TAKEOFF = "Takeoff"
    CRUISE = "Cruise"
    DESCEND = "Descend"
    MORPH_TO_UGV = "MorphToUgv"
    DONE = "Done"
    FAILED = "Failed"


LEGAL_PHASE_TRANSITIONS: dict[MissionPhase, frozenset[MissionPhase]] = {
    MissionPhase.GROUND_NAV: frozenset(
        {MissionPhase.MORPH_TO_UAS, MissionPhase.DONE, MissionPhase.FAILED}
    ),
    MissionPhase.MORPH_TO_UAS: frozenset({MissionPhase.TAKEOFF, MissionPhase.FAILED}),
    MissionPhase.TAKEOFF: frozenset({MissionPhase.CRUISE, MissionPhase.FAILED}),
    MissionPhase.CRUISE: frozenset({MissionPhase.DESCEND, MissionPhase.FAILED}),
    MissionPhase.DESCEND: frozenset({MissionPhase.MORPH_TO_UGV, MissionPhase.FAILED}),
    MissionPhase.MORPH_TO_UGV: frozenset(
        {MissionPhase.GROUND_NAV, MissionPhase.FAILED}
    ),
    MissionPhase.DONE: frozenset(),
    MissionPhase.FAILED: frozenset(),
}


@dataclass
class RobotState:
    """Pose plus applied velocities. While driving, z is pinned to the
    ground surface; while morphing, both velocities are zero."""

    x: float
    y: float
    z: float
    yaw: float
    v: float = 0.0
    omega: float = 0.0
    mode: LocomotionMode = LocomotionMode.UGV


@dataclass(frozen=True)
class SimConfig:
    """Executor parameters. Times in seconds, distances in meters."""

    dt: float = 0.1
    goal_tolerance: float = 0.2
    cruise_altitude: float = 1.5
    climb_rate: float = 1.0
    actuation_latency: float = 0.0
    max_mission_time: float = 300.0
    landing_tolerance: float = 0.05
    replan_interval: float = 1.0
    assume_flyable: bool = True
    pose_noise_sigma: float = 0.0

    def __post_init__(self):
        if self.dt <= 0.0:
            raise ConfigError("dt must be positive")
        for key in ("goal_tolerance", "cruise_altitude", "max_mission_time", "replan_interval"):
            if getattr(self, key) <= 0.0:
                raise ConfigError(f"sim parameter '{key}' must be positive")
        if not 0.0 < self.climb_rate <= MAX_CLIMB_RATE:
            raise ConfigError(f"climb_rate must be in (0, {MAX_CLIMB_RATE}] m/s")
        if self.actuation_latency < 0.0:
            raise ConfigError("actuation_latency must be non-negative")
        if self.landing_tolerance < 0.0:
            raise ConfigError("landing_tolerance must be non-negative")
        if self.pose_noise_sigma < 0.0:
            raise ConfigError("pose_noise_sigma must be non-negative")


@dataclass
class EnergyLedger:
    """Per-mode energy in joules; the total is the exact bucket sum."""

    ground: float = 0.0
    flight: float = 0.0
    transition: float = 0.0

    @property
    def total(self) -> float:
        return self.ground + self.flight + self.transition


def accumulate_energy(
    ledger: EnergyLedger, state: RobotState, cm: CostModel, dt: float, dz: float = 0.0
) -> None:
    """One tick of energy integration.

    A moving ground vehicle draws drive power; a stationary one draws
    nothing. An airborne vehicle draws hover power plus the potential
    energy of any climb during the tick (descent is not credited back).
    A morphing vehicle draws morph power.
    """
    if state.mode is LocomotionMode.UGV:
        if state.v > 0.0:
            ledger.ground += cm.ground_power * dt
    elif state.mode is LocomotionMode.UAS:
        ledger.flight += cm.flight_power * dt + cm.mass * cm.gravity * max(0.0, dz)
    else:
        ledger.transition += cm.morph_power * dt


@dataclass(frozen=True)
class TickRecord:
    t: float
    x: float
    y: float
    z: float
    yaw: float
    mode: str
    phase: str
    v: float
    omega: float
    e_ground: float
    e_flight: float
    e_transition: float
    e_total: float
    collided: bool


@dataclass
class MissionResult:
    outcome: str
    reason: str
    records: list[TickRecord]
    ledger: EnergyLedger
    timeline: list[tuple[str, float, float]]
    morph_count: int
    descend_overshoot: float
    waypoints_reached: int
    final_state: RobotState

    @property
    def duration(self) -> float:
        return self.records[-1].t if self.records else 0.0


# -- single-step vehicle models ------------------------------------------------


def step_ugv(state: RobotState, cmd: VelocityCommand, env: Environment, dt: float) -> RobotState:
    """Advance a driving robot one tick under a velocity command.

    Unicycle integration with the pre-step yaw; z stays pinned to the
    ground surface and the pose is clamped inside the arena footprint.
    """
    if state.mode is not LocomotionMode.UGV:
        raise ValueError("step_ugv requires UGV mode")
    lo, hi = env.bounds.min_corner, env.bounds.max_corner
    x = min(max(state.x + cmd.v * math.cos(state.yaw) * dt, lo[0]), hi[0])
    y = min(max(state.y + cmd.v * math.sin(state.yaw) * dt, lo[1]), hi[1])
    yaw = state.yaw + cmd.omega * dt
    return RobotState(
        x, y, env.ground_height(x, y), yaw, cmd.v, cmd.omega, LocomotionMode.UGV
    )


def _flight_velocity_toward(
    pos: tuple[float, float, float],
    target: tuple[float, float, float],
    h_speed: float,
    v_speed: float,
    dt: float,
) -> tuple[float, float, float]:
    """Velocity that moves toward target without overshooting in one tick,
    with separate horizontal and vertical speed caps."""
    dx = target[0] - pos[0]
    dy = target[1] - pos[1]
    dz = target[2] - pos[2]
    h_dist = math.hypot(dx, dy)
    if h_dist > 0.0 and h_speed > 0.0:
        scale = min(h_speed, h_dist / dt) / h_dist
        vx, vy = dx * scale, dy * scale
    else:
        vx, vy = 0.0, 0.0
    if dz != 0.0 and v_speed > 0.0:
        vz = math.copysign(min(v_speed, abs(dz) / dt), dz)
    else:
        vz = 0.0
    return vx, vy, vz


def _apply_flight_velocity(
    state: RobotState, vel: tuple[float, float, float], env: Environment, dt: float
) -> RobotState:
    """Integrate a flight velocity; altitude never penetrates the ground
    and the pose is clamped inside the arena."""
    lo, hi = env.bounds.min_corner, env.bounds.max_corner
    x = min(max(state.x + vel[0] * dt, lo[0]), hi[0])
    y = min(max(state.y + vel[1] * dt, lo[1]), hi[1])
    z = min(state.z + vel[2] * dt, hi[2])
    z = max(z, env.ground_height(x, y))
    speed = math.sqrt(vel[0] ** 2 + vel[1] ** 2 + vel[2] ** 2)
    return RobotState(x, y, z, state.yaw, speed, 0.0, LocomotionMode.UAS)


def step_uas(
    state: RobotState,
    waypoint: tuple[float, float, float],
    speed: float,
    env: Environment,
    dt: float,
) -> RobotState:
    """Advance a flying robot one tick straight toward a waypoint at up to
    `speed`, stopping exactly on it rather than overshooting."""
    if state.mode is not LocomotionMode.UAS:
        raise ValueError("step_uas requires UAS mode")
    pos = (state.x, state.y, state.z)
    dist = math.dist(pos, waypoint)
    if dist == 0.0:
        return RobotState(
            state.x, state.y, state.z, state.yaw, 0.0, 0.0, LocomotionMode.UAS
        )
    step = min(speed * dt, dist)
    f = step / dist
    vel = (
        (waypoint[0] - pos[0]) * f / dt,
        (waypoint[1] - pos[1]) * f / dt,
        (waypoint[2] - pos[2]) * f / dt,
    )
    return _apply_flight_velocity(state, vel, env, dt)


# -- mission executor -----------------------------------------------------------


# One actuation command: (v, omega) consumed while driving, (vx, vy, vz)
# while flying. Unused components are zero.
_ZERO_CMD = (0.0, 0.0, 0.0, 0.0, 0.0)


class Mission:
    """Stateful mission executor; run() drives it to Done or Failed."""

    def __init__(
        self,
        env: Environment,
        waypoints,
        cm: CostModel,
        dwa: DwaParams,
        cfg: SimConfig,
        seed: int = 0,
        start=None,
        start_yaw: float = 0.0,
        grid: OccupancyGrid | None = None,
    ):
        if not waypoints:
            raise ConfigError("waypoint list must not be empty")
        self.env = env
        self.cm = cm
        self.dwa = dwa
        self.cfg = cfg
        lo, hi = env.bounds.min_corner, env.bounds.max_corner
        self.waypoints: list[tuple[float, float, float]] = []
        for i, wp in enumerate(waypoints):
            x, y = float(wp[0]), float(wp[1])
            if not (lo[0] <= x <= hi[0] and lo[1] <= y <= hi[1]):
                raise ConfigError(f"waypoint {i} outside bounds footprint")
            self.waypoints.append((x, y, env.ground_height(x, y)))
        if not (lo[2] < cfg.cruise_altitude <= hi[2]):
            raise ConfigError("cruise_altitude outside bounds z range")
        if start is None:
            start = self.waypoints[0]
        sx, sy = float(start[0]), float(start[1])
        if not (lo[0] <= sx <= hi[0] and lo[1] <= sy <= hi[1]):
            raise ConfigError("start outside bounds footprint")
        self.grid = grid if grid is not None else project_to_grid(env)
        self.state = RobotState(
            sx, sy, env.ground_height(sx, sy), float(start_yaw)
        )
        self._rng = SplitMix64(seed)
        self._n_delay = int(round(cfg.actuation_latency / cfg.dt))
        self._queue: deque[tuple[float, float, float, float, float]] = deque()
        self.phase = MissionPhase.GROUND_NAV
        self.ledger = EnergyLedger()
        self.records: list[TickRecord] = []
        self.timeline: list[tuple[str, float, float]] = []
        self._phase_start_t = 0.0
        self.tick = 0
        self.wp_idx = 0
        self.waypoints_reached = 0
        self.morph_count = 0
        self.descend_overshoot = 0.0
        self.reason = ""
        self._path: GridPath | None = None
        self._last_replan_tick: int | None = None
        # Window reference for the local controller: its own last command,
        # not the delayed plant response, or latency destabilizes the loop.
        self._intent = VelocityCommand(0.0, 0.0)
        self._morph_ticks = 0
        self._morph_ticks_needed = max(1, int(math.ceil(cm.morph_duration / cfg.dt - 1e-9)))
        self._morph_target_mode = LocomotionMode.UAS
        self._flight_anchor: tuple[float, float] | None = None
        self._land_z = 0.0
        self._failure_pending = self._preflight_check()
        self._record()  # initial condition row at t = 0

    # -- setup helpers ---------------------------------------------------

    def _preflight_check(self) -> str:
        if self.env.point_in_collision((self.state.x, self.state.y, self.state.z), 0.0):
            return "start position is inside an obstacle"
        for i, wp in enumerate(self.waypoints):
            if self.env.point_in_collision(wp, 0.0):
                return f"waypoint {i} is inside an obstacle"
        return ""

    @property
    def t(self) -> float:
        return self.tick * self.cfg.dt

    def _view(self) -> tuple[float, float, float, float]:
        """Controller's pose estimate; optionally noisy, never fed back
        into the true state."""
        s = self.state
        sigma = self.cfg.pose_noise_sigma
        if sigma == 0.0:
            return s.x, s.y, s.z, s.yaw
        return (
            s.x + self._rng.normal(sigma),
            s.y + self._rng.normal(sigma),
            s.z + self._rng.normal(sigma),
            s.yaw + self._rng.normal(sigma),
        )

    def _set_phase(self, phase: MissionPhase) -> None:
        if phase not in LEGAL_PHASE_TRANSITIONS[self.phase]:
            raise AssertionError(f"illegal phase transition {self.phase} -> {phase}")
        self.timeline.append((self.phase.value, self._phase_start_t, self.t))
        self.phase = phase
        self._phase_start_t = self.t

    def _fail(self, reason: str) -> None:
        self.reason = reason
        self._set_phase(MissionPhase.FAILED)

    # -- per-phase control -------------------------------------------------

    def _enter_morph(self, target_mode: LocomotionMode) -> None:
        self._morph_target_mode = target_mode
        self._morph_ticks = 0
        self._intent = VelocityCommand(0.0, 0.0)
        self._set_phase(
            MissionPhase.MORPH_TO_UAS
            if target_mode is LocomotionMode.UAS
            else MissionPhase.MORPH_TO_UGV
        )

    def _control_ground_nav(self) -> tuple[float, float, float, float, float]:
        vx, vy, vz, vyaw = self._view()
        wp = self.waypoints[self.wp_idx]
        if math.hypot(wp[0] - vx, wp[1] - vy) <= self.cfg.goal_tolerance:
            self.waypoints_reached += 1
            self.wp_idx += 1
            self._path = None
            if self.wp_idx >= len(self.waypoints):
                self._set_phase(MissionPhase.DONE)
                return _ZERO_CMD
            wp = self.waypoints[self.wp_idx]
        replan_ticks = max(1, int(round(self.cfg.replan_interval / self.cfg.dt)))
        if (
            self._path is None
            or self._last_replan_tick is None
            or self.tick - self._last_replan_tick >= replan_ticks
        ):
            start_cell = self.grid.world_to_cell(vx, vy)
            goal_cell = self.grid.world_to_cell(wp[0], wp[1])
            try:
                self._path = grid_plan(self.grid, start_cell, goal_cell)
            except InvalidStartError:
                self._fail("vehicle inside the inflated obstacle region")
                return _ZERO_CMD
            self._last_replan_tick = self.tick
            if self._path is None:
                if not self.cfg.assume_flyable:
                    self._fail(
                        f"no drivable path to waypoint {self.wp_idx} and flight disabled"
                    )
                    return _ZERO_CMD
                self._enter_morph(LocomotionMode.UAS)
                self._flight_anchor = None
                return _ZERO_CMD
        carrot = self._carrot(wp, (vx, vy))
        cmd = dwa_step((vx, vy, vyaw), self._intent, carrot, self.grid, self.dwa)
        self._intent = cmd
        return (cmd.v, cmd.omega, 0.0, 0.0, 0.0)

    def _carrot(self, wp, view_xy) -> tuple[float, float]:
        """Point on the grid path roughly one lookahead ahead of the robot;
        the waypoint itself once it is close."""
        if math.hypot(wp[0] - view_xy[0], wp[1] - view_xy[1]) <= LOOKAHEAD_DIST:
            return (wp[0], wp[1])
        path = self._path
        if path is None or len(path.cells) < 2:
            return (wp[0], wp[1])
        best_i = 0
        best_d = math.inf
        for i, cell in enumerate(path.cells):
            cx, cy = self.grid.cell_center(*cell)
            d = math.hypot(cx - view_xy[0], cy - view_xy[1])
            if d < best_d:
                best_d = d
                best_i = i
        ahead = max(1, int(round(LOOKAHEAD_DIST / self.grid.resolution)))
        cell = path.cells[min(best_i + ahead, len(path.cells) - 1)]
        return self.grid.cell_center(*cell)

    def _control_morph(self) -> tuple[float, float, float, float, float]:
        if self.state.mode is not LocomotionMode.MORPHING:
            # Settle stage: wait for the delayed actuation to drain so the
            # vehicle is stationary before reconfiguration begins.
            settled = (
                abs(self.state.v) <= 1e-9 and abs(self.state.omega) <= 1e-9
            )
            if settled:
                self.state.mode = LocomotionMode.MORPHING
                self.state.v = 0.0
                self.state.omega = 0.0
            return _ZERO_CMD
        self._morph_ticks += 1
        if self._morph_ticks >= self._morph_ticks_needed:
            self.morph_count += 1
            # Snap the bucket so completed morphs cost exactly C_t each,
            # free of per-tick accumulation dust.
            self.ledger.transition = self.morph_count * self.cm.transition_cost()
            if self._morph_target_mode is LocomotionMode.UAS:
                self.state.mode = LocomotionMode.UAS
                self._flight_anchor = (self.state.x, self.state.y)
                self._set_phase(MissionPhase.TAKEOFF)
            else:
                self.state.mode = LocomotionMode.UGV
                self.state.z = self.env.ground_height(self.state.x, self.state.y)
                self._path = None
                self._last_replan_tick = None
                self._set_phase(MissionPhase.GROUND_NAV)
        return _ZERO_CMD

    def _control_takeoff(self) -> tuple[float, float, float, float, float]:
        vx_, vy_, vz_, _ = self._view()
        if vz_ >= self.cfg.cruise_altitude - 1e-9:
            self._set_phase(MissionPhase.CRUISE)
            return self._control_cruise()
        anchor = self._flight_anchor or (self.state.x, self.state.y)
        vel = _flight_velocity_toward(
            (vx_, vy_, vz_),
            (anchor[0], anchor[1], self.cfg.cruise_altitude),
            0.0,
            self.cfg.climb_rate,
            self.cfg.dt,
        )
        return (0.0, 0.0, *vel)

    def _control_cruise(self) -> tuple[float, float, float, float, float]:
        vx_, vy_, vz_, _ = self._view()
        wp = self.waypoints[self.wp_idx]
        if math.hypot(wp[0] - vx_, wp[1] - vy_) <= CRUISE_ARRIVAL:
            self._land_z = wp[2] + self.cfg.landing_tolerance
            self._set_phase(MissionPhase.DESCEND)
            return self._control_descend()
        vel = _flight_velocity_toward(
            (vx_, vy_, vz_),
            (wp[0], wp[1], self.cfg.cruise_altitude),
            self.cm.flight_speed,
            self.cfg.climb_rate,
            self.cfg.dt,
        )
        return (0.0, 0.0, *vel)

    def _control_descend(self) -> tuple[float, float, float, float, float]:
        vx_, vy_, vz_, _ = self._view()
        if vz_ <= self._land_z + 1e-9 and self.state.v <= 1e-9:
            # Touched down and the delayed actuation has drained.
            self._enter_morph(LocomotionMode.UGV)
            return _ZERO_CMD
        if vz_ <= self._land_z + 1e-9:
            return _ZERO_CMD
        vel = _flight_velocity_toward(
            (vx_, vy_, vz_),
            (vx_, vy_, self._land_z),
            0.0,
            self.cfg.climb_rate,
            self.cfg.dt,
        )
        return (0.0, 0.0, *vel)

    # -- tick loop -----------------------------------------------------------

    def _apply_latency(
        self, cmd: tuple[float, float, float, float, float]
    ) -> tuple[float, float, float, float, float]:
        if self._n_delay == 0:
            return cmd
        self._queue.append(cmd)
        if len(self._queue) > self._n_delay:
            return self._queue.popleft()
        return _ZERO_CMD

    def step(self) -> None:
        """Advance the mission by one control period."""
        if self.phase in (MissionPhase.DONE, MissionPhase.FAILED):
            return
        if self._failure_pending:
            self._fail(self._failure_pending)
            self._failure_pending = ""
            self.tick += 1
            self._record()
            return

        handler = {
            MissionPhase.GROUND_NAV: self._control_ground_nav,
            MissionPhase.MORPH_TO_UAS: self._control_morph,
            MissionPhase.MORPH_TO_UGV: self._control_morph,
            MissionPhase.TAKEOFF: self._control_takeoff,
            MissionPhase.CRUISE: self._control_cruise,
            MissionPhase.DESCEND: self._control_descend,
        }[self.phase]
        desired = handler()
        applied = self._apply_latency(desired)

        prev_z = self.state.z
        if self.state.mode is LocomotionMode.UGV:
            self.state = step_ugv(
                self.state, VelocityCommand(applied[0], applied[1]), self.env, self.cfg.dt
            )
        elif self.state.mode is LocomotionMode.UAS:
            self.state = _apply_flight_velocity(
                self.state, applied[2:], self.env, self.cfg.dt
            )
        # Morphing: stationary by definition.

        accumulate_energy(self.ledger, self.state, self.cm, self.cfg.dt, self.state.z - prev_z)
        self.tick += 1

        if self.phase is MissionPhase.DESCEND:
            self.descend_overshoot = max(
                self.descend_overshoot, self._land_z - self.state.z
            )
        if (
            self.t > self.cfg.max_mission_time
            and self.phase not in (MissionPhase.DONE, MissionPhase.FAILED)
        ):
            self._fail("mission time limit exceeded")
        self._record()

    def _record(self) -> None:
        s = self.state
        led = self.ledger
        self.records.append(
            TickRecord(
                self.t,
                s.x,
                s.y,
                s.z,
                s.yaw,
                s.mode.value,
                self.phase.value,
                s.v,
                s.omega,
                led.ground,
                led.flight,
                led.transition,
                led.total,
                self.env.point_in_collision((s.x, s.y, s.z), 0.0),
            )
        )

    def run(self) -> MissionResult:
        max_ticks = int(math.ceil(self.cfg.max_mission_time / self.cfg.dt)) + 2
        while self.phase not in (MissionPhase.DONE, MissionPhase.FAILED):
            if self.tick > max_ticks:
                self._fail("mission time limit exceeded")
                break
            self.step()
        self.timeline.append((self.phase.value, self._phase_start_t, self.t))
        return MissionResult(
            outcome="Done" if self.phase is MissionPhase.DONE else "Failed",
            reason=self.reason,
            records=self.records,
            ledger=self.ledger,
            timeline=self.timeline,
            morph_count=self.morph_count,
            descend_overshoot=max(0.0, self.descend_overshoot),
            waypoints_reached=self.waypoints_reached,
            final_state=self.state,
        )


def run_mission(
    env: Environment,
    waypoints,
    cm: CostModel,
    dwa: DwaParams,
    cfg: SimConfig,
    seed: int = 0,
    start=None,
    start_yaw: float = 0.0,
    grid: OccupancyGrid | None = None,
) -> MissionResult:
    """Execute a waypoint mission to completion; fully deterministic for a
    given argument set."""
    return Mission(env, waypoints, cm, dwa, cfg, seed, start, start_yaw, grid).run()


def trajectory_csv(records) -> str:
    """Render tick records as CSV with round-trip float formatting."""
    lines = [
        "t,x,y,z,yaw,mode,phase,v,omega,"
        "e_ground,e_flight,e_transition,e_total,collided"
    ]
    for r in records:
        lines.append(
            f"{r.t!r},{r.x!r},{r.y!r},{r.z!r},{r.yaw!r},{r.mode},{r.phase},"
            f"{r.v!r},{r.omega!r},{r.e_ground!r},{r.e_flight!r},"
            f"{r.e_transition!r},{r.e_total!r},{int(r.collided)}"
        )
    return "\n".join(lines) + "\n"
