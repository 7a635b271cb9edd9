"""Distributed immune-inspired fault detection.

Every robot fingerprints its own recent behaviour as short signatures
(30 samples at 6 Hz): motor signatures are 3-dimensional (linear velocity,
angular velocity, power draw, all normalised to [0, 1]) and sensor signatures
are 1-dimensional (the gamma localisation observable over the maximum range).
Signatures live in per-robot repertoires whose population scores are
stimulated by persistent self-behaviour and by similarity to a fixed
repertoire of a-priori faulty signatures, and suppressed by similarity to the
rest of the swarm's behaviour. A score crossing 1 raises a fault detection;
a score below 0 prunes the signature.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .geometry import line_of_sight
from .robot import R_MAX

MOTOR = "motor"
SENSOR = "sensor"
KINDS = (MOTOR, SENSOR)
DIMS = {MOTOR: 3, SENSOR: 1}

SIG_LEN = 30
WINDOW_LEN = 300
SIGNATURE_PERIOD_S = 5.0
UPDATE_PERIOD_S = 50.0
DETECT_THRESHOLD = 1.0
# With the absolute-residual form the specificity is bounded by s, so the
# duplicate threshold sits at 0.9 * s of the dedupe stage instead of the
# unattainable "m > s".
DEDUPE_THRESHOLD = 1.35
# LPF motor-stream gate: the robot plus at least 4 peers must be free to move.
MIN_FREE_TO_MOVE = 5

FORMAT_VERSION = 1


@dataclass(frozen=True)
class MatchParams:
    """Parameters of the convolutional specificity: residual cap s,
    convolution stride g, permissible index offset k."""

    s: float
    g: int
    k: int


@dataclass(frozen=True)
class PopulationParams:
    """Population dynamics weights: suppression k1, decay k2, stimulation k3."""

    k1: float
    k2: float
    k3: float


@dataclass(frozen=True)
class StageParams:
    """Per-kind parameter selections for the detection stages."""

    dedupe: MatchParams
    window: MatchParams
    labelled: MatchParams
    population: PopulationParams


DEFAULT_STAGES = {
    MOTOR: StageParams(
        dedupe=MatchParams(s=1.5, g=1, k=10),
        window=MatchParams(s=4.0, g=5, k=0),
        labelled=MatchParams(s=1.5, g=1, k=10),
        population=PopulationParams(k1=0.24, k2=0.3, k3=1.2),
    ),
    SENSOR: StageParams(
        dedupe=MatchParams(s=1.5, g=1, k=10),
        window=MatchParams(s=5.0, g=5, k=0),
        labelled=MatchParams(s=3.3, g=1, k=10),
        population=PopulationParams(k1=0.18, k2=0.3, k3=1.2),
    ),
}


def offsets(n_i: int, n_j: int, params: MatchParams) -> range:
    """Alignment offsets of the convolution, symmetric about full overlap."""
    start = -(params.k // 2)
    stop = (n_j - n_i) + (params.k + 1) // 2
    return range(start, stop + 1, params.g)


def _pair_scores(P: np.ndarray, Q: np.ndarray, params: MatchParams,
                 signed: bool) -> np.ndarray:
    """Specificity matrix between stacks of equal-length signatures.

    P: (M, n_i, D), Q: (K, n_j, D) -> (M, K). Residual sums per offset come
    from cumulative sums, so cost is O((M + K + M*K) * offsets * D).
    """
    m, n_i, dim = P.shape
    k_, n_j, dim_q = Q.shape
    if dim != dim_q:
        raise ValueError(f"dimension mismatch: {dim} vs {dim_q}")
    offs = offsets(n_i, n_j, params)
    cp = np.zeros((m, n_i + 1, dim))
    np.cumsum(P, axis=1, out=cp[:, 1:])
    cq = np.zeros((k_, n_j + 1, dim))
    np.cumsum(Q, axis=1, out=cq[:, 1:])
    s = params.s
    acc = np.zeros((m, k_, dim))
    for o in offs:
        lo = max(0, -o)
        hi = min(n_i, n_j - o)
        if hi <= lo:
            acc += s
            continue
        a = cp[:, hi] - cp[:, lo]          # (M, D)
        b = cq[:, hi + o] - cq[:, lo + o]  # (K, D)
        res = a[:, None, :] - b[None, :, :]
        if not signed:
            np.abs(res, out=res)
        np.maximum(s - res, 0.0, out=res)
        acc += res
    acc /= len(offs)
    return acc.mean(axis=2)


def _window_scores(P: np.ndarray, W: np.ndarray, params: MatchParams,
                   signed: bool) -> np.ndarray:
    """Specificity of each stacked signature against one behavioural window.

    P: (M, n_i, D), W: (L, D) -> (M,).
    """
    m, n_i, dim = P.shape
    n_j, dim_w = W.shape
    if dim != dim_w:
        raise ValueError(f"dimension mismatch: {dim} vs {dim_w}")
    offs = offsets(n_i, n_j, params)
    cp = np.zeros((m, n_i + 1, dim))
    np.cumsum(P, axis=1, out=cp[:, 1:])
    cw = np.zeros((n_j + 1, dim))
    np.cumsum(W, axis=0, out=cw[1:])
    s = params.s
    acc = np.zeros((m, dim))
    for o in offs:
        lo = max(0, -o)
        hi = min(n_i, n_j - o)
        if hi <= lo:
            acc += s
            continue
        res = (cp[:, hi] - cp[:, lo]) - (cw[hi + o] - cw[lo + o])
        if not signed:
            np.abs(res, out=res)
        np.maximum(s - res, 0.0, out=res)
        acc += res
    acc /= len(offs)
    return acc.mean(axis=1)


def match_specificity(p_i: np.ndarray, p_j: np.ndarray, params: MatchParams,
                      signed: bool = False) -> float:
    """Convolutional matching specificity between two signatures or a
    signature and a window.

    Both operands are (length, dim) arrays sharing the dimension. Residual
    sums are taken as absolute values by default so the result is bounded by
    params.s; set signed=True for the literal signed form.
    """
    p_i = np.asarray(p_i, dtype=float)
    p_j = np.asarray(p_j, dtype=float)
    if p_i.ndim == 1:
        p_i = p_i[:, None]
    if p_j.ndim == 1:
        p_j = p_j[:, None]
    if p_i.size == 0 or p_j.size == 0:
        raise ValueError("empty signature operand")
    return float(_window_scores(p_i[None, :, :], p_j, params, signed)[0])


@dataclass
class Signature:
    """A behavioural fingerprint with its immune population score."""

    samples: np.ndarray          # (SIG_LEN, dim), values in [0, 1]
    kind: str
    x: float = 0.0


class Repertoire:
    """A robot's evolving signature set for one hardware kind."""

    def __init__(self, kind: str):
        self.kind = kind
        self.members: list[Signature] = []

    def __len__(self) -> int:
        return len(self.members)

    def stacked(self) -> np.ndarray:
        return np.stack([sig.samples for sig in self.members])


@dataclass(frozen=True)
class LabelledRepertoire:
    """The fixed a-priori-faulty signature set shared by the whole swarm."""

    kind: str
    samples: np.ndarray          # (count, SIG_LEN, dim)

    def __len__(self) -> int:
        return self.samples.shape[0]


@dataclass(frozen=True)
class DetectionEvent:
    uid: int
    lineage: int
    kind: str
    t: float
    delta: float


def try_insert(rep: Repertoire, samples: np.ndarray, stage: StageParams,
               signed: bool = False) -> bool:
    """Add a captured signature unless the repertoire already holds a near
    duplicate (specificity above the dedupe threshold)."""
    if rep.members:
        scores = _pair_scores(samples[None, :, :], rep.stacked(),
                              stage.dedupe, signed)
        if float(scores.max()) > DEDUPE_THRESHOLD:
            return False
    rep.members.append(Signature(samples=samples, kind=rep.kind))
    return True


def update_populations(rep: Repertoire, own_window: np.ndarray,
                       other_windows: list[np.ndarray],
                       labelled: LabelledRepertoire | None,
                       stage: StageParams,
                       signed: bool = False) -> bool:
    """One population-dynamics step over every member of the repertoire.

    Members whose score drops below 0 are removed; returns True if any member
    score exceeds the detection threshold after the step.
    """
    if not rep.members:
        return False
    pop = stage.population
    stack = rep.stacked()
    m0 = _window_scores(stack, own_window, stage.window, signed)
    if labelled is not None and len(labelled):
        m_y = _pair_scores(stack, labelled.samples, stage.labelled, signed).max(axis=1)
    else:
        m_y = np.zeros(len(rep.members))
    supp = np.zeros(len(rep.members))
    for w in other_windows:
        supp += _window_scores(stack, w, stage.window, signed)
    xdot = m0 * (1.0 + pop.k3 * m_y) - pop.k1 * supp - pop.k2
    flagged = False
    survivors = []
    for sig, dx in zip(rep.members, xdot):
        sig.x += float(dx)
        if sig.x < 0.0:
            continue
        if sig.x > DETECT_THRESHOLD:
            flagged = True
        survivors.append(sig)
    rep.members = survivors
    return flagged


class SlidingWindow:
    """Ring buffer of the most recent per-step behavioural samples."""

    __slots__ = ("buf", "idx", "count")

    def __init__(self, dim: int):
        self.buf = np.zeros((WINDOW_LEN, dim))
        self.idx = 0
        self.count = 0

    def __len__(self) -> int:
        return self.count if self.count < WINDOW_LEN else WINDOW_LEN

    def append(self, values) -> None:
        self.buf[self.idx] = values
        self.idx += 1
        if self.idx == WINDOW_LEN:
            self.idx = 0
        self.count += 1

    def ordered(self) -> np.ndarray:
        """Chronological copy of the window contents."""
        if self.count < WINDOW_LEN:
            return self.buf[: self.count].copy()
        if self.idx == 0:
            return self.buf.copy()
        return np.concatenate((self.buf[self.idx:], self.buf[: self.idx]))

    def last(self, n: int) -> np.ndarray:
        """Chronological copy of the newest n samples."""
        if len(self) < n:
            raise ValueError("window holds fewer samples than requested")
        start = self.idx - n
        if start >= 0:
            return self.buf[start: self.idx].copy()
        return np.concatenate((self.buf[start:], self.buf[: self.idx]))


class RobotDetector:
    """Per-robot detection state machine: windows, repertoires, clocks."""

    __slots__ = ("w_motor", "w_sensor", "x_motor", "x_sensor",
                 "next_capture", "next_update", "flagged")

    def __init__(self, t0: float = 0.0):
        self.w_motor = SlidingWindow(DIMS[MOTOR])
        self.w_sensor = SlidingWindow(DIMS[SENSOR])
        self.x_motor = Repertoire(MOTOR)
        self.x_sensor = Repertoire(SENSOR)
        self.next_capture = t0 + SIGNATURE_PERIOD_S
        self.next_update = t0 + UPDATE_PERIOD_S
        self.flagged = {MOTOR: False, SENSOR: False}

    def sample(self, motor_values, sensor_value) -> None:
        self.w_motor.append(motor_values)
        self.w_sensor.append((sensor_value,))

    def window(self, kind: str) -> SlidingWindow:
        return self.w_motor if kind == MOTOR else self.w_sensor

    def repertoire(self, kind: str) -> Repertoire:
        return self.x_motor if kind == MOTOR else self.x_sensor

    def capture(self, kind: str) -> np.ndarray:
        return self.window(kind).last(SIG_LEN)


def gamma_value(fx: float, fy: float, own_range: float, neighbors,
                arena, obstacles) -> float:
    """Asymmetric-localisation observable for one robot.

    The closest distance at which some neighbour can localise this robot
    (within the neighbour's sensing range, with line of sight) while this
    robot cannot reciprocate (beyond its own range); r_max when every
    neighbour relationship is mutual or vacuous.

    neighbors: iterable of (x, y, sensing_range) over the other alive robots.
    """
    best = R_MAX
    pos = (fx, fy)
    for jx, jy, jr in neighbors:
        dx = jx - fx
        dy = jy - fy
        d = math.sqrt(dx * dx + dy * dy)
        if own_range < d <= jr and d < best:
            if line_of_sight(pos, (jx, jy), arena, obstacles):
                best = d
    return best


def save_labelled(path, rep: LabelledRepertoire) -> None:
    payload = {
        "format_version": FORMAT_VERSION,
        "kind": rep.kind,
        "count": int(rep.samples.shape[0]),
        "length": int(rep.samples.shape[1]),
        "dim": int(rep.samples.shape[2]),
        "signatures": rep.samples.tolist(),
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")


def loads_labelled(text: str) -> LabelledRepertoire:
    payload = json.loads(text)
    if payload.get("format_version") != FORMAT_VERSION:
        raise ValueError("unsupported labelled-repertoire format version")
    samples = np.asarray(payload["signatures"], dtype=float)
    expected = (payload["count"], payload["length"], payload["dim"])
    if samples.shape != expected:
        raise ValueError(f"repertoire shape {samples.shape} != header {expected}")
    return LabelledRepertoire(kind=payload["kind"], samples=samples)


def load_labelled(path) -> LabelledRepertoire:
    with open(path) as fh:
        return loads_labelled(fh.read())


def _select_most_distinct(cands: np.ndarray, target: int,
                          params: MatchParams) -> np.ndarray:
    """Greedy max-min selection: keep the subset whose members are most
    mutually distinct under the matching specificity."""
    h = cands.shape[0]
    sims = np.empty((h, h))
    block = 128
    for i in range(0, h, block):
        sims[i: i + block] = _pair_scores(cands[i: i + block], cands, params, False)
    totals = sims.sum(axis=1)
    first = int(np.argmin(totals))
    chosen = [first]
    cur_max = sims[:, first].copy()
    cur_max[first] = np.inf
    for _ in range(target - 1):
        nxt = int(np.argmin(cur_max))
        chosen.append(nxt)
        np.maximum(cur_max, sims[:, nxt], out=cur_max)
        cur_max[nxt] = np.inf
    return np.array(sorted(chosen))


# Harvest filters: a labelled-faulty signature must actually carry fault
# information. Sensor signatures need a visible share of asymmetric
# localisation samples (gamma below r_max); motor signatures need the motors
# to have been drawing power (the robot was trying to move, not idle).
SENSOR_HARVEST_MIN_WITNESSED = 0.2
MOTOR_HARVEST_MIN_MEAN_DP = 0.5


def harvest_filter(kind: str, samples: np.ndarray) -> bool:
    if kind == SENSOR:
        witnessed = float(np.mean(samples[:, 0] < 0.999))
        return witnessed >= SENSOR_HARVEST_MIN_WITNESSED
    return float(samples[:, 2].mean()) >= MOTOR_HARVEST_MIN_MEAN_DP


def generate_labelled_repertoire(algorithm: str, environment: str,
                                 fault_band: tuple[float, float] = (0.2, 0.6),
                                 counts: tuple[int, int] = (101, 93),
                                 seed: int = 0,
                                 training_replicates: int = 4,
                                 n_robots: int = 10,
                                 stages=None) -> dict[str, LabelledRepertoire]:
    """Harvest and distil the fixed faulty-signature repertoires.

    Runs one training fleet per hardware kind with a 60% afflicted
    subpopulation degrading at q = 0.33, keeps signatures captured while the
    afflicted robot's relevant coefficient sat inside fault_band, dedupes
    them, and greedily reduces to the target counts by mutual distinctness.

    Raises RuntimeError when the training runs yield fewer distinct faulty
    signatures than requested.
    """
    from .config import ExperimentConfig, FaultSpec
    from .simulate import run_single

    if stages is None:
        stages = DEFAULT_STAGES
    lo, hi = fault_band
    out = {}
    for kind, target in zip(KINDS, counts):
        harvested: list[np.ndarray] = []
        rep = Repertoire(kind)
        for i in range(training_replicates):
            cfg = ExperimentConfig(
                environment=environment,
                algorithm=algorithm,
                n_robots=n_robots,
                fault=FaultSpec(mode="afflicted", afflicted_fraction=0.6,
                                hardware_class=kind),
                detector="harvest",
                master_seed=seed,
            )
            metrics = run_single(cfg, replicate=i)
            for h_kind, d_rel, samples in metrics.harvest:
                if h_kind != kind or not (lo <= d_rel <= hi):
                    continue
                arr = np.asarray(samples)
                if not harvest_filter(kind, arr):
                    continue
                if try_insert(rep, arr, stages[kind]):
                    harvested.append(arr)
        if len(harvested) < target:
            raise RuntimeError(
                f"training runs yielded {len(harvested)} distinct faulty "
                f"{kind} signatures, fewer than the requested {target}")
        cands = np.stack(harvested)
        keep = _select_most_distinct(cands, target, stages[kind].dedupe)
        out[kind] = LabelledRepertoire(kind=kind, samples=cands[keep])
    return out
