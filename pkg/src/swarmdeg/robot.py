"""Robot platform model: differential drive, power budget, and degradation.

Degradation coefficients d_l, d_r, d_s in [0, 1] (1 = pristine, 0 = failed)
couple into motor power draw, achievable wheel velocity, and sensing range.
Each coefficient decrements stochastically by a fixed amount per simulated
second with a per-robot probability, so every robot occupies its own point
on a gradual degradation curve.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

V_MAX = 0.22                 # m/s, platform maximum linear velocity
R_MAX = 4.0                  # m, maximum sensing/localisation range
P0 = 1.0                     # unitless total power capacity
DP_MAX = P0 / 300.0          # maximum power draw per second
DP_MOTOR_MAX = 0.4 * DP_MAX  # per-motor maximum draw (left and right equal)
DP_SENSE = 0.2 * DP_MAX      # sensing + communication draw, constant while alive
WHEELBASE = 0.16             # m, distance between wheels
FOOTPRINT_RADIUS = 0.15      # m, collision disc radius
OMEGA_MAX = 2.84             # rad/s, normalisation constant for angular velocity
DT = 1.0 / 6.0               # s, control/sampling timestep (6 Hz)
DEGRADE_DECREMENT = 0.01     # per-event drop of a degradation coefficient


@dataclass(frozen=True)
class PowerConstants:
    """Power budget split; the three draws sum to dp_max."""

    p0: float = P0
    dp_max: float = DP_MAX
    dp_motor_max: float = DP_MOTOR_MAX
    dp_sense: float = DP_SENSE

    def __post_init__(self):
        total = 2.0 * self.dp_motor_max + self.dp_sense
        if abs(total - self.dp_max) > 1e-12:
            raise ValueError("motor and sensing draws must sum to dp_max")


@dataclass
class DegradationState:
    d_l: float = 1.0
    d_r: float = 1.0
    d_s: float = 1.0


@dataclass(frozen=True)
class DegradationProcess:
    """Per-second decrement probabilities, fixed per robot at spawn."""

    q_l: float = 0.0
    q_r: float = 0.0
    q_s: float = 0.0


class BehaviorMode(Enum):
    EXPLORE = "explore"
    APPROACH_NEST = "approach_nest"
    RETURN_TO_BASE = "return_to_base"
    AVOID = "avoid"
    WAIT = "wait"
    RETURN_FOR_SERVICE = "return_for_service"
    SHUTDOWN = "shutdown"


def velocity_cap(d: float) -> float:
    """Maximum achievable wheel velocity at degradation level d."""
    return V_MAX / (1.0 + math.exp(-5.0 * (2.0 * d - 1.0)))


def motor_power_draw(d: float) -> float:
    """Per-second power draw of one active motor at degradation level d.

    Pristine motors (d = 1) run at ~75% load; draw rises monotonically as the
    motor degrades and saturates near the per-motor maximum.
    """
    return DP_MOTOR_MAX / (1.0 + math.exp(-10.0 * ((1.0 - d) + 0.11)))


def sensor_range(d_s: float) -> float:
    """Sensing range at degradation level d_s (inverse-square law)."""
    return R_MAX * math.sqrt(d_s)


class Robot:
    """Mutable per-robot simulation state.

    ``lineage`` is stable across replacement: a spawned replacement inherits
    the lineage of the robot it replaces so per-robot metrics keep a fixed
    denominator. ``uid`` is unique per physical robot instance.
    """

    __slots__ = (
        "uid", "lineage", "x", "y", "theta",
        "cmd_l", "cmd_r", "power", "deg", "proc",
        "carrying", "mode", "alive", "afflicted",
        "explore_heading", "explore_until", "avoid_sign",
        "immobile_since", "service_pending",
        "last_v", "last_w", "last_dp",
    )

    def __init__(self, uid: int, lineage: int, x: float, y: float, theta: float,
                 proc: DegradationProcess, afflicted: bool = False):
        self.uid = uid
        self.lineage = lineage
        self.x = x
        self.y = y
        self.theta = theta
        self.cmd_l = 0.0
        self.cmd_r = 0.0
        self.power = P0
        self.deg = DegradationState()
        self.proc = proc
        self.carrying = False
        self.mode = BehaviorMode.EXPLORE
        self.alive = True
        self.afflicted = afflicted
        self.explore_heading = theta
        self.explore_until = -1.0   # forces a heading draw on first explore step
        self.avoid_sign = 0.0
        self.immobile_since = None  # sim seconds, for stranding detection
        self.service_pending = None # DetectionEvent being resolved, if any
        self.last_v = 0.0
        self.last_w = 0.0
        self.last_dp = 0.0

    def sensing_range(self) -> float:
        return R_MAX * math.sqrt(self.deg.d_s)

    def min_motor_deg(self) -> float:
        dl = self.deg.d_l
        dr = self.deg.d_r
        return dl if dl < dr else dr


def total_power_draw(robot: Robot) -> float:
    """Current power draw per second: sensing always, each motor when commanded."""
    draw = DP_SENSE
    if robot.cmd_l != 0.0:
        draw += motor_power_draw(robot.deg.d_l)
    if robot.cmd_r != 0.0:
        draw += motor_power_draw(robot.deg.d_r)
    return draw


def degrade_tick(robot: Robot, rng) -> None:
    """Apply one second of stochastic degradation (clamped at zero)."""
    deg = robot.deg
    proc = robot.proc
    if proc.q_l > 0.0 and rng.random() < proc.q_l:
        deg.d_l = max(0.0, deg.d_l - DEGRADE_DECREMENT)
    if proc.q_r > 0.0 and rng.random() < proc.q_r:
        deg.d_r = max(0.0, deg.d_r - DEGRADE_DECREMENT)
    if proc.q_s > 0.0 and rng.random() < proc.q_s:
        deg.d_s = max(0.0, deg.d_s - DEGRADE_DECREMENT)


TWO_PI = 2.0 * math.pi


def wrap_angle(a: float) -> float:
    """Wrap to (-pi, pi]."""
    a = math.fmod(a, TWO_PI)
    if a > math.pi:
        a -= TWO_PI
    elif a <= -math.pi:
        a += TWO_PI
    return a
