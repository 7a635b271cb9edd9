"""Fault resolution policies and the ideal threshold detector.

Predictive resolution sends a detected robot home for instant service at the
base (or strands it as a permanent obstacle if it can no longer make the
trip). Reactive resolution shuts the robot down where it stands, turning it
into an obstacle unless it was already inside the base, and deploys a fresh
replacement either way.
"""

from __future__ import annotations

from dataclasses import dataclass

from .detection import MOTOR, SENSOR, DetectionEvent
from .geometry import BASE_Y
from .robot import BehaviorMode, P0, velocity_cap

PREDICTIVE = "predictive"
REACTIVE = "reactive"

# A robot whose best straight-line speed sits below this (or whose power is
# gone) for this many consecutive seconds will never reach the base.
STRANDED_SPEED_FLOOR = 0.005
STRANDED_GRACE_S = 10.0


@dataclass(frozen=True)
class ServiceEvent:
    """One resolution outcome for one detection event."""

    uid: int
    lineage: int
    detect_t: float
    policy: str
    outcome: str          # serviced | replaced | removed | stranded
    kind: str
    delta: float
    resolve_t: float

    def to_dict(self) -> dict:
        return {
            "uid": self.uid,
            "lineage": self.lineage,
            "detect_t": self.detect_t,
            "policy": self.policy,
            "outcome": self.outcome,
            "kind": self.kind,
            "delta": self.delta,
            "resolve_t": self.resolve_t,
        }


def ideal_detect_tick(robots, d0: float, t: float) -> list[tuple[object, DetectionEvent]]:
    """Oracle detector: flag each robot the first second any ground-truth
    coefficient sits below d0. One event per robot until re-armed by service."""
    out = []
    for robot in robots:
        if not robot.alive or robot.service_pending is not None:
            continue
        deg = robot.deg
        motor_min = deg.d_l if deg.d_l < deg.d_r else deg.d_r
        if motor_min < d0 or deg.d_s < d0:
            if motor_min <= deg.d_s:
                kind, delta = MOTOR, motor_min
            else:
                kind, delta = SENSOR, deg.d_s
            out.append((robot, DetectionEvent(
                uid=robot.uid, lineage=robot.lineage, kind=kind, t=t, delta=delta)))
    return out


def apply_predictive(sim, robot, event: DetectionEvent) -> None:
    """Order the robot home; it keeps any carried resource for deposit."""
    robot.service_pending = event
    robot.mode = BehaviorMode.RETURN_FOR_SERVICE
    robot.immobile_since = None


def service_at_base(sim, robot, t: float) -> None:
    """Instant maintenance: full reset and immediate redeploy."""
    event = robot.service_pending
    if robot.carrying:
        sim.ledger.deposit(robot.lineage)
        robot.carrying = False
    robot.deg.d_l = 1.0
    robot.deg.d_r = 1.0
    robot.deg.d_s = 1.0
    robot.power = P0
    robot.mode = BehaviorMode.EXPLORE
    robot.explore_until = -1.0
    robot.service_pending = None
    robot.immobile_since = None
    sim.reset_detector(robot, t)
    sim.service_log.append(ServiceEvent(
        uid=robot.uid, lineage=robot.lineage, detect_t=event.t,
        policy=PREDICTIVE, outcome="serviced", kind=event.kind,
        delta=event.delta, resolve_t=t))


def check_stranding(sim, robot, second: float) -> None:
    """Strand a homebound robot that has been immobile for the grace period."""
    event = robot.service_pending
    if event is None:
        return
    immobile = (robot.power <= 0.0 or
                velocity_cap(robot.min_motor_deg()) < STRANDED_SPEED_FLOOR)
    if not immobile:
        robot.immobile_since = None
        return
    if robot.immobile_since is None:
        robot.immobile_since = second
        return
    if second - robot.immobile_since < STRANDED_GRACE_S:
        return
    sim.kill(robot)
    robot.service_pending = None
    sim.strandings += 1
    sim.service_log.append(ServiceEvent(
        uid=robot.uid, lineage=robot.lineage, detect_t=event.t,
        policy=PREDICTIVE, outcome="stranded", kind=event.kind,
        delta=event.delta, resolve_t=second))


def apply_reactive(sim, robot, event: DetectionEvent, t: float) -> None:
    """Shut the robot down in place (or collect it inside the base) and
    spawn a replacement at the base."""
    if robot.y <= BASE_Y:
        sim.remove_robot(robot)
        outcome = "removed"
    else:
        sim.kill(robot)
        outcome = "replaced"
    sim.service_log.append(ServiceEvent(
        uid=robot.uid, lineage=robot.lineage, detect_t=event.t,
        policy=REACTIVE, outcome=outcome, kind=event.kind,
        delta=event.delta, resolve_t=t))
    sim.spawn_replacement(robot, t)
