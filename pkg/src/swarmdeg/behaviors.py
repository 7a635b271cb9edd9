"""Foraging controllers and the ad-hoc localisation network.

Two controllers share the same priority cascade: avoid close objects, carry
resources home, collect at nests, approach sensed nests, otherwise explore
randomly. The globally-positioned variant always knows where it and the base
are; the locally-positioned variant may only move while an ad-hoc chain of
mutually-sensing robots connects it to the base, and waits in place
otherwise.

Controllers are decision functions over a per-step snapshot of the world;
they write wheel commands and mode onto the robot and foraging events onto
the ledger, and touch nothing else.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .geometry import BASE_Y, line_of_sight, _ray_disc_entry, _ray_rect_entry
from .robot import (
    FOOTPRINT_RADIUS,
    V_MAX,
    WHEELBASE,
    BehaviorMode,
    wrap_angle,
)

AVOID_TRIGGER = 0.5      # m, object distance that starts avoidance
AVOID_RELEASE = 0.75     # m, clearance that ends avoidance (hysteresis)
RAY_REACH = 0.9          # m, feeler ray length (just past the release radius)
FEELER_ANGLE = math.pi / 6.0
COLLECT_RANGE = 0.5      # m, to the nest edge
NETWORK_HOP_LIMIT = 3.0  # m, maximum chain hop regardless of sensing range
EXPLORE_MIN_S = 2.0
EXPLORE_MAX_S = 6.0
HEADING_GAIN = 4.0
OMEGA_AUTHORITY = 2.0 * V_MAX / WHEELBASE


@dataclass(frozen=True)
class NetworkStatus:
    networked: bool
    hop_parent: int | str | None  # robot index, "base", or None
    hop_distance: float


class ForagingLedger:
    """Per-lineage resource bookkeeping.

    delivered + lost + currently-carried always equals collected; nests are
    non-depleting so collection never conflicts between robots.
    """

    def __init__(self, lineages):
        self.collected = {lin: 0 for lin in lineages}
        self.delivered = {lin: 0 for lin in lineages}
        self.lost = {lin: 0 for lin in lineages}

    def ensure(self, lineage):
        if lineage not in self.collected:
            self.collected[lineage] = 0
            self.delivered[lineage] = 0
            self.lost[lineage] = 0

    def collect(self, lineage):
        self.collected[lineage] += 1

    def deposit(self, lineage):
        self.delivered[lineage] += 1

    def lose(self, lineage):
        self.lost[lineage] += 1


class WorldView:
    """Read-only snapshot of the world taken at the start of a step.

    Robot bodies (alive or shut down) are collision discs for rays; only
    shut-down bodies and walls occlude sensing.
    """

    __slots__ = ("arena", "walls", "size", "nests", "xs", "ys", "alive",
                 "ranges", "n", "dead_discs", "_near")

    def __init__(self, arena, robots, dead_discs):
        self.arena = arena
        self.walls = arena.walls
        self.size = arena.size
        self.nests = arena.nests
        self.xs = [r.x for r in robots]
        self.ys = [r.y for r in robots]
        self.alive = [r.alive for r in robots]
        self.ranges = [r.sensing_range() if r.alive else 0.0 for r in robots]
        self.n = len(robots)
        self.dead_discs = dead_discs  # ObstacleSet of shut-down bodies
        self._near = {}

    def nearby_bodies(self, idx, x, y, reach):
        """Indices of other robot bodies within reach of (x, y)."""
        limit = (reach + FOOTPRINT_RADIUS) ** 2
        xs = self.xs
        ys = self.ys
        out = []
        for j in range(self.n):
            if j == idx:
                continue
            dx = xs[j] - x
            dy = ys[j] - y
            if dx * dx + dy * dy <= limit:
                out.append(j)
        return out

    def nearby_cached(self, idx):
        """Memoised nearby-body list; the 1.05 m reach covers both the feeler
        rays and one step of collision motion."""
        got = self._near.get(idx)
        if got is None:
            got = self.nearby_bodies(idx, self.xs[idx], self.ys[idx], 1.05)
            self._near[idx] = got
        return got

    def ray(self, x, y, heading, max_range, bodies):
        """Distance to the first boundary/wall/body hit along heading."""
        dx = math.cos(heading)
        dy = math.sin(heading)
        best = max_range
        if dx > 0.0:
            t = (self.size - x) / dx
            if t < best:
                best = t
        elif dx < 0.0:
            t = -x / dx
            if t < best:
                best = t
        if dy > 0.0:
            t = (self.size - y) / dy
            if t < best:
                best = t
        elif dy < 0.0:
            t = -y / dy
            if t < best:
                best = t
        for wall in self.walls:
            if (x < wall.x_min - max_range or x > wall.x_max + max_range or
                    y < wall.y_min - max_range or y > wall.y_max + max_range):
                continue
            t = _ray_rect_entry(x, y, dx, dy, wall)
            if t < best:
                best = t
        xs = self.xs
        ys = self.ys
        for j in bodies:
            t = _ray_disc_entry(x, y, dx, dy, xs[j], ys[j], FOOTPRINT_RADIUS)
            if t < best:
                best = t
        return best

    def sensor_los(self, a, b):
        """Sensing visibility: blocked by walls and shut-down bodies only."""
        return line_of_sight(a, b, self.arena, self.dead_discs)


def steer_commands(heading_error, forward_scale=1.0):
    """Wheel commands that turn toward a desired heading while advancing."""
    w = HEADING_GAIN * heading_error
    if w > OMEGA_AUTHORITY:
        w = OMEGA_AUTHORITY
    elif w < -OMEGA_AUTHORITY:
        w = -OMEGA_AUTHORITY
    cos_e = math.cos(heading_error)
    v = V_MAX * forward_scale * cos_e if cos_e > 0.0 else 0.0
    half = 0.5 * WHEELBASE * w
    left = v - half
    right = v + half
    if left > V_MAX:
        left = V_MAX
    elif left < -V_MAX:
        left = -V_MAX
    if right > V_MAX:
        right = V_MAX
    elif right < -V_MAX:
        right = -V_MAX
    return left, right


def seek_commands(robot, tx, ty, forward_scale=1.0):
    desired = math.atan2(ty - robot.y, tx - robot.x)
    return steer_commands(wrap_angle(desired - robot.theta), forward_scale)


def random_explore_policy(robot, rng, t):
    """Straight-line motion at max command with periodic random re-heading."""
    if t >= robot.explore_until:
        robot.explore_heading = rng.random() * 2.0 * math.pi
        robot.explore_until = t + EXPLORE_MIN_S + rng.random() * (EXPLORE_MAX_S - EXPLORE_MIN_S)
    return steer_commands(wrap_angle(robot.explore_heading - robot.theta))


def _scan(robot, view, idx):
    """Forward feeler scan: (mid ray, left feeler, right feeler, seen_cap).

    Ray length is capped by the robot's sensing range; hits at the cap mean
    nothing was seen, not that an object sits there.
    """
    reach = robot.sensing_range()
    if reach > RAY_REACH:
        reach = RAY_REACH
    if reach <= 0.0:
        return RAY_REACH, RAY_REACH, RAY_REACH, 0.0
    x = robot.x
    y = robot.y
    bodies = view.nearby_cached(idx)
    mid = view.ray(x, y, robot.theta, reach, bodies)
    left = view.ray(x, y, robot.theta + FEELER_ANGLE, reach, bodies)
    right = view.ray(x, y, robot.theta - FEELER_ANGLE, reach, bodies)
    return mid, left, right, reach


def _avoid_commands(robot):
    """Turn away from the blocked side at full angular authority, half speed."""
    if robot.avoid_sign > 0.0:
        return 0.0, V_MAX   # turn left
    return V_MAX, 0.0       # turn right


def _avoidance_gate(robot, view, idx, rng, t):
    """Handle entry/exit of the avoid mode. Returns True when avoidance owns
    this step's commands (robot.cmd_* already set).

    On release the avoidance turn has physically re-oriented the robot, so
    exploration resumes along the cleared heading with a fresh leg timer."""
    mid, left, right, seen = _scan(robot, view, idx)
    seeing = seen > 0.0
    lo = mid if mid < left else left
    if right < lo:
        lo = right
    if robot.mode is BehaviorMode.AVOID:
        if not seeing or lo >= min(AVOID_RELEASE, seen - 1e-9):
            robot.mode = BehaviorMode.EXPLORE  # cascade re-derives the mode
            robot.explore_heading = robot.theta
            robot.explore_until = t + EXPLORE_MIN_S + rng.random() * (
                EXPLORE_MAX_S - EXPLORE_MIN_S)
            return False
        robot.cmd_l, robot.cmd_r = _avoid_commands(robot)
        return True
    if seeing and lo <= AVOID_TRIGGER and lo < seen - 1e-9:
        robot.mode = BehaviorMode.AVOID
        robot.avoid_sign = 1.0 if left > right else -1.0
        robot.cmd_l, robot.cmd_r = _avoid_commands(robot)
        return True
    return False


def _nest_status(robot, view):
    """(edge distance to nearest nest, nearest sensed nest center or None)."""
    sense = robot.sensing_range()
    best_edge = math.inf
    best_sensed = None
    best_sensed_edge = math.inf
    for nest in view.nests:
        cx, cy = nest.center
        edge = math.hypot(cx - robot.x, cy - robot.y) - nest.radius
        if edge < best_edge:
            best_edge = edge
        if edge <= sense and edge < best_sensed_edge:
            if view.sensor_los((robot.x, robot.y), (cx, cy)):
                best_sensed = nest.center
                best_sensed_edge = edge
    return best_edge, best_sensed


def gpf_step(robot, view, idx, ledger, rng, t):
    """One decision step of the globally-positioned forager."""
    if _avoidance_gate(robot, view, idx, rng, t):
        return
    if robot.carrying:
        if robot.y <= BASE_Y:
            ledger.deposit(robot.lineage)
            robot.carrying = False
            robot.mode = BehaviorMode.EXPLORE
            robot.explore_until = -1.0
        else:
            robot.mode = BehaviorMode.RETURN_TO_BASE
            robot.cmd_l, robot.cmd_r = seek_commands(robot, robot.x, 0.0)
            return
    edge, sensed = _nest_status(robot, view)
    if edge <= COLLECT_RANGE:
        ledger.collect(robot.lineage)
        robot.carrying = True
        robot.mode = BehaviorMode.RETURN_TO_BASE
        robot.cmd_l, robot.cmd_r = seek_commands(robot, robot.x, 0.0)
        return
    if sensed is not None:
        robot.mode = BehaviorMode.APPROACH_NEST
        robot.cmd_l, robot.cmd_r = seek_commands(robot, sensed[0], sensed[1])
        return
    robot.mode = BehaviorMode.EXPLORE
    robot.cmd_l, robot.cmd_r = random_explore_policy(robot, rng, t)


def lpf_step(robot, view, idx, ledger, rng, t, networked):
    """Locally-positioned forager: forage only while network-localised."""
    if not networked:
        robot.mode = BehaviorMode.WAIT
        robot.cmd_l = 0.0
        robot.cmd_r = 0.0
        return
    if robot.mode is BehaviorMode.WAIT:
        robot.mode = BehaviorMode.EXPLORE
    gpf_step(robot, view, idx, ledger, rng, t)


def service_step(robot, view, idx, rng, t):
    """Navigate home for service, ignoring any localisation gate."""
    robot.mode = BehaviorMode.RETURN_FOR_SERVICE
    if _avoidance_gate(robot, view, idx, rng, t):
        robot.mode = BehaviorMode.RETURN_FOR_SERVICE
        return
    robot.cmd_l, robot.cmd_r = seek_commands(robot, robot.x, 0.0)


def compute_network(view) -> list[NetworkStatus]:
    """Breadth-first chain membership from the base band.

    A robot joins through a parent node (or the base itself) when it sits
    within the parent's sensing range, within the hop limit, and in line of
    sight; base membership is unconditional for robots inside the band.
    """
    n = view.n
    xs = view.xs
    ys = view.ys
    status: list[NetworkStatus | None] = [None] * n
    queue = []
    for i in range(n):
        if not view.alive[i]:
            status[i] = NetworkStatus(False, None, math.inf)
            continue
        y = ys[i]
        if y <= BASE_Y:
            status[i] = NetworkStatus(True, "base", 0.0)
            queue.append(i)
        else:
            gap = y - BASE_Y
            if gap <= NETWORK_HOP_LIMIT and view.sensor_los(
                    (xs[i], y), (xs[i], BASE_Y)):
                status[i] = NetworkStatus(True, "base", gap)
                queue.append(i)
    head = 0
    while head < len(queue):
        k = queue[head]
        head += 1
        kx = xs[k]
        ky = ys[k]
        limit = view.ranges[k]
        if limit > NETWORK_HOP_LIMIT:
            limit = NETWORK_HOP_LIMIT
        if limit <= 0.0:
            continue
        limit2 = limit * limit
        for j in range(n):
            if status[j] is not None or not view.alive[j]:
                continue
            dx = xs[j] - kx
            dy = ys[j] - ky
            d2 = dx * dx + dy * dy
            if d2 <= limit2 and view.sensor_los((kx, ky), (xs[j], ys[j])):
                status[j] = NetworkStatus(True, k, math.sqrt(d2))
                queue.append(j)
    for i in range(n):
        if status[i] is None:
            status[i] = NetworkStatus(False, None, math.inf)
    return status
