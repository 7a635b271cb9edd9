"""Deterministic fixed-timestep simulation of one foraging run.

Step order: behaviour decisions over a start-of-step snapshot, kinematics and
power in robot order, behavioural sampling, then once per simulated second:
degradation, stranding checks, detector work, and resolution actions. All
randomness flows through a single generator seeded from (master_seed,
replicate), so identical configurations reproduce byte-identical results.
"""

from __future__ import annotations

import math

import numpy as np

from .behaviors import (
    ForagingLedger,
    WorldView,
    compute_network,
    gpf_step,
    lpf_step,
    service_step,
)
from .config import ExperimentConfig
from .detection import (
    DEFAULT_STAGES,
    MOTOR,
    SENSOR,
    SIG_LEN,
    SIGNATURE_PERIOD_S,
    UPDATE_PERIOD_S,
    DetectionEvent,
    RobotDetector,
    load_labelled,
    loads_labelled,
    try_insert,
    update_populations,
)
from .geometry import (
    BASE_Y,
    EMPTY_OBSTACLES,
    build_arena,
    circle_hits_wall,
    line_of_sight,
)
from .metrics import RunMetrics
from .resolution import (
    PREDICTIVE,
    REACTIVE,
    apply_predictive,
    apply_reactive,
    check_stranding,
    ideal_detect_tick,
    service_at_base,
)
from .robot import (
    DP_MAX,
    DP_SENSE,
    FOOTPRINT_RADIUS,
    OMEGA_MAX,
    R_MAX,
    V_MAX,
    WHEELBASE,
    BehaviorMode,
    DegradationProcess,
    Robot,
    degrade_tick,
    motor_power_draw,
    velocity_cap,
    wrap_angle,
)

SPAWN_ROW_Y = (1.2, 0.7)
REPLACEMENT_ANCHOR = (5.0, 1.0)


def default_repertoire_text(algorithm: str, environment: str, kind: str) -> str:
    from importlib.resources import files

    name = f"data/y_{algorithm}_{environment}_{kind}.json"
    resource = files("swarmdeg").joinpath(name)
    if not resource.is_file():
        raise FileNotFoundError(
            f"no packaged labelled repertoire {name}; run "
            f"`swarmdeg gen-repertoire --algo {algorithm} --env {environment}` first")
    return resource.read_text()


class Simulation:
    """One seeded foraging run."""

    def __init__(self, config: ExperimentConfig, replicate: int = 0):
        config.validate()
        if config.master_seed < 0:
            raise ValueError("master_seed must be non-negative")
        self.config = config
        self.replicate = replicate
        self.rng = np.random.default_rng(
            np.random.SeedSequence(entropy=[config.master_seed, replicate]))
        self.arena = build_arena(config.environment)
        self.dead_discs = EMPTY_OBSTACLES
        self.ledger = ForagingLedger(range(config.n_robots))
        self.service_log = []
        self.events: list[DetectionEvent] = []
        self.strandings = 0
        self.obstacles_created = 0
        self.removed_in_base = 0
        self.replacements = 0
        self.harvest = []
        self.telemetry = []
        self.next_uid = 0
        self._networked = None
        self._windows_cache = None
        self.sample_active = config.detector in ("aapd", "harvest")
        self.stages = DEFAULT_STAGES
        self.signed = config.signed_residuals
        self.y_motor = None
        self.y_sensor = None
        if config.detector == "aapd":
            self.y_motor = self._load_labelled(MOTOR, config.y_motor_path)
            self.y_sensor = self._load_labelled(SENSOR, config.y_sensor_path)
        self.robots: list[Robot] = []
        self.detectors: dict[int, RobotDetector] = {}
        self._spawn_initial()

    # -- setup ------------------------------------------------------------

    def _load_labelled(self, kind, path):
        if path is not None:
            return load_labelled(path)
        text = default_repertoire_text(
            self.config.algorithm, self.config.environment, kind)
        return loads_labelled(text)

    def _spawn_initial(self):
        n = self.config.n_robots
        procs, afflicted = self._assign_faults()
        for i in range(n):
            row, col = divmod(i, 10)
            per_row = min(n - row * 10, 10)
            x = (col + 0.5) * self.arena.size / per_row
            y = SPAWN_ROW_Y[row % len(SPAWN_ROW_Y)]
            robot = Robot(uid=self.next_uid, lineage=i, x=x, y=y,
                          theta=math.pi / 2.0, proc=procs[i],
                          afflicted=afflicted[i])
            self.next_uid += 1
            self.robots.append(robot)
            if self.sample_active:
                self.detectors[robot.uid] = RobotDetector(t0=0.0)

    def _assign_faults(self):
        fault = self.config.fault
        n = self.config.n_robots
        procs = [DegradationProcess()] * n
        afflicted = [False] * n
        if fault.mode == "afflicted":
            k = math.ceil(fault.afflicted_fraction * n)
            chosen = {int(i) for i in self.rng.permutation(n)[:k]}
            q = fault.q_afflicted
            for i in chosen:
                afflicted[i] = True
                if fault.hardware_class == "motor":
                    procs[i] = DegradationProcess(q_l=q, q_r=q)
                else:
                    procs[i] = DegradationProcess(q_s=q)
        elif fault.mode == "mtbf":
            for i in range(n):
                q_l, q_r, q_s = self.rng.uniform(fault.q_low, fault.q_high, 3)
                procs[i] = DegradationProcess(q_l, q_r, q_s)
        return procs, afflicted

    def _fresh_proc(self, was_afflicted: bool) -> DegradationProcess:
        fault = self.config.fault
        if fault.mode == "mtbf":
            q_l, q_r, q_s = self.rng.uniform(fault.q_low, fault.q_high, 3)
            return DegradationProcess(q_l, q_r, q_s)
        if fault.mode == "afflicted" and was_afflicted:
            q = fault.q_afflicted
            if fault.hardware_class == "motor":
                return DegradationProcess(q_l=q, q_r=q)
            return DegradationProcess(q_s=q)
        return DegradationProcess()

    # -- world mutation services used by the resolution policies ----------

    def kill(self, robot: Robot):
        """Permanent shutdown in place; the body stays as an obstacle."""
        if not robot.alive:
            return
        if robot.carrying:
            self.ledger.lose(robot.lineage)
            robot.carrying = False
        robot.alive = False
        robot.mode = BehaviorMode.SHUTDOWN
        robot.cmd_l = 0.0
        robot.cmd_r = 0.0
        robot.last_v = 0.0
        robot.last_w = 0.0
        robot.last_dp = 0.0
        self.dead_discs = self.dead_discs.add(robot.x, robot.y, FOOTPRINT_RADIUS)
        self.obstacles_created += 1

    def remove_robot(self, robot: Robot):
        """Collect a robot inside the base: no obstacle remains."""
        if robot.carrying:
            self.ledger.lose(robot.lineage)
            robot.carrying = False
        robot.alive = False
        robot.mode = BehaviorMode.SHUTDOWN
        self.robots.remove(robot)
        self.detectors.pop(robot.uid, None)
        self.removed_in_base += 1

    def spawn_replacement(self, old: Robot, t: float):
        x, y = self._find_spawn_slot()
        robot = Robot(uid=self.next_uid, lineage=old.lineage, x=x, y=y,
                      theta=math.pi / 2.0, proc=self._fresh_proc(old.afflicted),
                      afflicted=old.afflicted)
        self.next_uid += 1
        self.robots.append(robot)
        self.ledger.ensure(robot.lineage)
        if self.sample_active:
            self.detectors[robot.uid] = RobotDetector(t0=t)
        self.replacements += 1

    def _find_spawn_slot(self):
        ax, ay = REPLACEMENT_ANCHOR
        for dy in (0.0, 0.5, -0.5):
            y = ay + dy
            for k in range(0, 28):
                dx = 0.35 * ((k + 1) // 2) * (1 if k % 2 else -1)
                x = ax + dx
                if not FOOTPRINT_RADIUS <= x <= self.arena.size - FOOTPRINT_RADIUS:
                    continue
                if self._position_free(x, y, None, range(len(self.robots))):
                    return x, y
        return ax, ay  # arena saturated; overlap is tolerated at spawn

    def reset_detector(self, robot: Robot, t: float):
        if self.sample_active:
            self.detectors[robot.uid] = RobotDetector(t0=t)

    # -- physics -----------------------------------------------------------

    def _position_free(self, x, y, skip: Robot | None, candidates) -> bool:
        r = FOOTPRINT_RADIUS
        size = self.arena.size
        if not (r <= x <= size - r and r <= y <= size - r):
            return False
        for wall in self.arena.walls:
            if circle_hits_wall(x, y, r, wall):
                return False
        robots = self.robots
        min2 = (2.0 * r) ** 2
        for j in candidates:
            other = robots[j]
            if other is skip:
                continue
            dx = other.x - x
            dy = other.y - y
            if dx * dx + dy * dy < min2:
                return False
        return True

    def _move(self, idx: int, robot: Robot, view: WorldView, dt: float):
        deg = robot.deg
        cl = robot.cmd_l
        cr = robot.cmd_r
        if cl != 0.0 or cr != 0.0:
            cap = velocity_cap(deg.d_l)
            eff_l = cl if -cap <= cl <= cap else (cap if cl > 0.0 else -cap)
            cap = velocity_cap(deg.d_r)
            eff_r = cr if -cap <= cr <= cap else (cap if cr > 0.0 else -cap)
            v = 0.5 * (eff_l + eff_r)
            w = (eff_r - eff_l) / WHEELBASE
            if v != 0.0:
                nx = robot.x + v * math.cos(robot.theta) * dt
                ny = robot.y + v * math.sin(robot.theta) * dt
                near = view.nearby_cached(idx)
                if not self._position_free(nx, ny, robot, near):
                    if self._position_free(nx, robot.y, robot, near):
                        ny = robot.y
                    elif self._position_free(robot.x, ny, robot, near):
                        nx = robot.x
                    else:
                        nx = robot.x
                        ny = robot.y
                robot.x = nx
                robot.y = ny
            if w != 0.0:
                robot.theta = wrap_angle(robot.theta + w * dt)
            robot.last_v = v if v >= 0.0 else -v
            robot.last_w = w if w >= 0.0 else -w
        else:
            robot.last_v = 0.0
            robot.last_w = 0.0
        draw = DP_SENSE
        if cl != 0.0:
            draw += motor_power_draw(deg.d_l)
        if cr != 0.0:
            draw += motor_power_draw(deg.d_r)
        robot.last_dp = draw
        p = robot.power - draw * dt
        if p <= 0.0:
            robot.power = 0.0
            self.kill(robot)
        else:
            robot.power = p

    # -- behavioural sampling ----------------------------------------------

    def _sample(self):
        alive = [(r, r.x, r.y, r.sensing_range()) for r in self.robots if r.alive]
        arena = self.arena
        discs = self.dead_discs
        inv_v = 1.0 / V_MAX
        inv_w = 1.0 / OMEGA_MAX
        inv_dp = 1.0 / DP_MAX
        inv_r = 1.0 / R_MAX
        for robot, fx, fy, own_range in alive:
            if own_range >= R_MAX:
                gamma = R_MAX
            else:
                gamma = R_MAX
                for other, jx, jy, jr in alive:
                    if other is robot:
                        continue
                    dx = jx - fx
                    dy = jy - fy
                    d = math.sqrt(dx * dx + dy * dy)
                    if own_range < d <= jr and d < gamma:
                        if line_of_sight((fx, fy), (jx, jy), arena, discs):
                            gamma = d
            v = robot.last_v * inv_v
            w = robot.last_w * inv_w
            dp = robot.last_dp * inv_dp
            self.detectors[robot.uid].sample(
                (v if v < 1.0 else 1.0, w if w < 1.0 else 1.0,
                 dp if dp < 1.0 else 1.0),
                gamma * inv_r)

    # -- per-second machinery ------------------------------------------------

    def _gather_windows(self):
        if self._windows_cache is not None:
            return self._windows_cache
        windows = {}
        for robot in self.robots:
            if not robot.alive:
                continue
            det = self.detectors[robot.uid]
            wm = det.w_motor.ordered() if len(det.w_motor) >= SIG_LEN else None
            ws = det.w_sensor.ordered() if len(det.w_sensor) >= SIG_LEN else None
            windows[robot.uid] = (wm, ws)
        self._windows_cache = windows
        return windows

    def _free_to_move(self):
        """Census for the motor-stream gate of locally-positioned swarms."""
        if self.config.algorithm != "lpf":
            return None, 0
        net = self._networked
        free = []
        count = 0
        for i, robot in enumerate(self.robots):
            ok = robot.alive and (
                robot.service_pending is not None
                or (net is not None and i < len(net) and net[i]))
            free.append(ok)
            if ok:
                count += 1
        return free, count

    def _detector_tick(self, second: float):
        cfg = self.config
        harvesting = cfg.detector == "harvest"
        lpf = cfg.algorithm == "lpf"
        free, free_count = self._free_to_move()
        self._windows_cache = None
        pending_events: list[tuple[Robot, DetectionEvent]] = []
        for idx, robot in enumerate(self.robots):
            if not robot.alive or robot.service_pending is not None:
                continue
            det = self.detectors[robot.uid]
            motor_ok = (not lpf) or (free[idx] and free_count - 1 >= 4)
            if det.next_capture <= second:
                det.next_capture += SIGNATURE_PERIOD_S
                if len(det.w_sensor) >= SIG_LEN:
                    sig = det.capture(SENSOR)
                    if harvesting:
                        self.harvest.append((SENSOR, robot.deg.d_s, sig))
                    else:
                        try_insert(det.x_sensor, sig, self.stages[SENSOR], self.signed)
                if motor_ok and len(det.w_motor) >= SIG_LEN:
                    sig = det.capture(MOTOR)
                    if harvesting:
                        self.harvest.append((MOTOR, robot.min_motor_deg(), sig))
                    else:
                        try_insert(det.x_motor, sig, self.stages[MOTOR], self.signed)
            if harvesting or det.next_update > second:
                continue
            det.next_update += UPDATE_PERIOD_S
            windows = self._gather_windows()
            own_m, own_s = windows.get(robot.uid, (None, None))
            if motor_ok and det.x_motor.members and own_m is not None:
                others = [m for uid, (m, _) in windows.items()
                          if uid != robot.uid and m is not None]
                flagged = update_populations(
                    det.x_motor, own_m, others, self.y_motor,
                    self.stages[MOTOR], self.signed)
                if flagged and not det.flagged[MOTOR]:
                    det.flagged[MOTOR] = True
                    pending_events.append((robot, DetectionEvent(
                        uid=robot.uid, lineage=robot.lineage, kind=MOTOR,
                        t=second, delta=robot.min_motor_deg())))
            if det.x_sensor.members and own_s is not None:
                others = [s for uid, (_, s) in windows.items()
                          if uid != robot.uid and s is not None]
                flagged = update_populations(
                    det.x_sensor, own_s, others, self.y_sensor,
                    self.stages[SENSOR], self.signed)
                if flagged and not det.flagged[SENSOR]:
                    det.flagged[SENSOR] = True
                    pending_events.append((robot, DetectionEvent(
                        uid=robot.uid, lineage=robot.lineage, kind=SENSOR,
                        t=second, delta=robot.deg.d_s)))
        for robot, event in pending_events:
            self._record_and_resolve(robot, event, second)

    def _record_and_resolve(self, robot: Robot, event: DetectionEvent, t: float):
        self.events.append(event)
        resolution = self.config.resolution
        if resolution == PREDICTIVE:
            apply_predictive(self, robot, event)
        elif resolution == REACTIVE:
            apply_reactive(self, robot, event, t)
        else:
            # No resolution: block re-detection of this robot but leave its
            # behaviour untouched.
            robot.service_pending = event

    def _second_tick(self, second: float):
        cfg = self.config
        rng = self.rng
        for robot in self.robots:
            if robot.alive:
                degrade_tick(robot, rng)
        if cfg.resolution == PREDICTIVE:
            for robot in list(self.robots):
                if robot.service_pending is not None:
                    check_stranding(self, robot, second)
        if cfg.detector == "ideal":
            for robot, event in ideal_detect_tick(self.robots, cfg.d0, second):
                self._record_and_resolve(robot, event, second)
        elif self.sample_active:
            self._detector_tick(second)
        if cfg.telemetry:
            self.telemetry.append({
                "t": second,
                "alive": sum(1 for r in self.robots if r.alive),
                "delivered": sum(self.ledger.delivered.values()),
                "carried": sum(1 for r in self.robots if r.carrying),
                "obstacles": len(self.dead_discs.discs),
            })

    # -- main loop -----------------------------------------------------------

    def step(self, step_index: int) -> None:
        """Advance the world by one control timestep."""
        cfg = self.config
        dt = cfg.dt
        steps_per_second = max(1, int(round(1.0 / dt)))
        lpf = cfg.algorithm == "lpf"
        ledger = self.ledger
        rng = self.rng
        t = step_index * dt
        robots = self.robots
        view = WorldView(self.arena, robots, self.dead_discs)
        networked = None
        if lpf:
            statuses = compute_network(view)
            networked = [s.networked for s in statuses]
            self._networked = networked
        for idx in range(len(robots)):
            robot = robots[idx]
            if not robot.alive:
                continue
            if robot.mode is BehaviorMode.RETURN_FOR_SERVICE:
                if robot.y <= BASE_Y:
                    service_at_base(self, robot, t)
                else:
                    service_step(robot, view, idx, rng, t)
                    continue
            if lpf:
                lpf_step(robot, view, idx, ledger, rng, t, networked[idx])
            else:
                gpf_step(robot, view, idx, ledger, rng, t)
        for idx in range(len(robots)):
            robot = robots[idx]
            if robot.alive:
                self._move(idx, robot, view, dt)
        if self.sample_active:
            self._sample()
        if (step_index + 1) % steps_per_second == 0:
            self._second_tick(float((step_index + 1) // steps_per_second))

    def run(self) -> RunMetrics:
        steps = int(round(self.config.duration_s / self.config.dt))
        for step_index in range(steps):
            self.step(step_index)
        return self._finalize()

    def _finalize(self) -> RunMetrics:
        cfg = self.config
        carried = {lin: 0 for lin in self.ledger.collected}
        for robot in self.robots:
            if robot.carrying:
                carried[robot.lineage] += 1
        afflicted = {}
        for robot in self.robots:
            afflicted.setdefault(robot.lineage, robot.afflicted)
        for lin in self.ledger.collected:
            afflicted.setdefault(lin, False)
        return RunMetrics(
            environment=cfg.environment,
            algorithm=cfg.algorithm,
            n_robots=cfg.n_robots,
            replicate=self.replicate,
            master_seed=cfg.master_seed,
            duration_s=cfg.duration_s,
            collected=dict(self.ledger.collected),
            delivered=dict(self.ledger.delivered),
            lost=dict(self.ledger.lost),
            carried_at_end=carried,
            afflicted=afflicted,
            events=[{"uid": e.uid, "lineage": e.lineage, "kind": e.kind,
                     "t": e.t, "delta": e.delta} for e in self.events],
            service_log=[ev.to_dict() for ev in self.service_log],
            strandings=self.strandings,
            obstacles_created=self.obstacles_created,
            removed_in_base=self.removed_in_base,
            replacements=self.replacements,
            final_alive=sum(1 for r in self.robots if r.alive),
            telemetry=self.telemetry,
            harvest=self.harvest,
        )


def run_single(config: ExperimentConfig, replicate: int = 0) -> RunMetrics:
    """Run one deterministic replicate of the configured experiment."""
    return Simulation(config, replicate).run()
