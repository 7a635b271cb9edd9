"""Arena geometry: bounds, corridor walls, nests, base band, visibility and ray queries.

The arena is a 10 m x 10 m enclosed square. The open variant is empty apart
from three resource nests; the constrained variant blocks the mid-band
(3 <= y <= 8) except for three 2 m wide corridors whose mouths face the nests.
All queries here are pure and the specs are immutable, so one arena can be
shared by any number of concurrent simulations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

ARENA_SIZE = 10.0
NEST_RADIUS = 1.0
NEST_CENTERS = ((2.0, 8.0), (5.0, 8.0), (8.0, 8.0))
BASE_Y = 2.0
CORRIDOR_Y_MIN = 3.0
CORRIDOR_Y_MAX = 8.0
CORRIDOR_WIDTH = 2.0
# Corridor open spans on the x axis (centered on the nests at x = 2, 5, 8).
CORRIDOR_X_SPANS = ((1.0, 3.0), (4.0, 6.0), (7.0, 9.0))


@dataclass(frozen=True)
class NestSpec:
    """A non-depleting resource nest (disc)."""

    center: tuple[float, float]
    radius: float = NEST_RADIUS


@dataclass(frozen=True)
class BaseRegion:
    """The robot base: the band y <= y_max spanning the arena width."""

    y_max: float = BASE_Y

    def contains(self, x: float, y: float) -> bool:
        return y <= self.y_max

    def distance(self, x: float, y: float) -> float:
        """Euclidean distance from (x, y) to the band (0 inside)."""
        return max(0.0, y - self.y_max)

    def nearest_point(self, x: float, y: float) -> tuple[float, float]:
        return (x, min(y, self.y_max))


@dataclass(frozen=True)
class Wall:
    """Axis-aligned solid rectangle (a wall segment with thickness)."""

    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def contains(self, x: float, y: float) -> bool:
        return self.x_min <= x <= self.x_max and self.y_min <= y <= self.y_max


@dataclass(frozen=True)
class ArenaSpec:
    """Static arena description; immutable after construction."""

    variant: str
    size: float = ARENA_SIZE
    walls: tuple[Wall, ...] = ()
    nests: tuple[NestSpec, ...] = field(
        default_factory=lambda: tuple(NestSpec(c) for c in NEST_CENTERS)
    )
    base: BaseRegion = field(default_factory=BaseRegion)


@dataclass(frozen=True)
class ObstacleSet:
    """Static circular obstacles: one disc per shut-down robot (x, y, radius)."""

    discs: tuple[tuple[float, float, float], ...] = ()

    def add(self, x: float, y: float, r: float) -> "ObstacleSet":
        return ObstacleSet(self.discs + ((x, y, r),))


EMPTY_OBSTACLES = ObstacleSet()


def build_arena(variant: str) -> ArenaSpec:
    """Return the canonical arena for the given variant ('open' or 'constrained').

    The constrained mid-band is partitioned by four wall blocks so that the
    only passages between base and nests are three corridors, each 2 m wide
    and 5 m long, centered at x = 2, 5, 8 opposite the nests.
    """
    if variant == "open":
        return ArenaSpec(variant="open")
    if variant == "constrained":
        y0, y1 = CORRIDOR_Y_MIN, CORRIDOR_Y_MAX
        blocked = []
        prev = 0.0
        for lo, hi in CORRIDOR_X_SPANS:
            if lo > prev:
                blocked.append(Wall(prev, y0, lo, y1))
            prev = hi
        if prev < ARENA_SIZE:
            blocked.append(Wall(prev, y0, ARENA_SIZE, y1))
        return ArenaSpec(variant="constrained", walls=tuple(blocked))
    raise ValueError(f"unknown arena variant: {variant!r}")


def _segment_hits_rect(ax, ay, bx, by, wall: Wall) -> bool:
    """True iff segment a-b intersects the solid rectangle (slab clipping)."""
    dx = bx - ax
    dy = by - ay
    t0, t1 = 0.0, 1.0
    for p, q_lo, q_hi in ((dx, wall.x_min - ax, wall.x_max - ax),
                          (dy, wall.y_min - ay, wall.y_max - ay)):
        if p == 0.0:
            if q_lo > 0.0 or q_hi < 0.0:
                return False
            continue
        r_lo = q_lo / p
        r_hi = q_hi / p
        if r_lo > r_hi:
            r_lo, r_hi = r_hi, r_lo
        if r_lo > t0:
            t0 = r_lo
        if r_hi < t1:
            t1 = r_hi
        if t0 > t1:
            return False
    return True


def _segment_hits_disc(ax, ay, bx, by, cx, cy, r) -> bool:
    """True iff segment a-b comes within r of center (cx, cy)."""
    dx = bx - ax
    dy = by - ay
    fx = cx - ax
    fy = cy - ay
    seg2 = dx * dx + dy * dy
    if seg2 == 0.0:
        return fx * fx + fy * fy <= r * r
    t = (fx * dx + fy * dy) / seg2
    if t < 0.0:
        t = 0.0
    elif t > 1.0:
        t = 1.0
    ex = fx - t * dx
    ey = fy - t * dy
    return ex * ex + ey * ey <= r * r


def line_of_sight(a, b, arena: ArenaSpec, obstacles: ObstacleSet = EMPTY_OBSTACLES) -> bool:
    """True iff the open segment a-b crosses no wall and no obstacle disc."""
    ax, ay = a
    bx, by = b
    for wall in arena.walls:
        if _segment_hits_rect(ax, ay, bx, by, wall):
            return False
    for cx, cy, r in obstacles.discs:
        if _segment_hits_disc(ax, ay, bx, by, cx, cy, r):
            return False
    return True


def _ray_rect_entry(ox, oy, dx, dy, wall: Wall) -> float:
    """Entry distance of ray (o, d) into the rectangle, or inf if missed."""
    t0, t1 = 0.0, math.inf
    for p, lo, hi in ((dx, wall.x_min - ox, wall.x_max - ox),
                      (dy, wall.y_min - oy, wall.y_max - oy)):
        if p == 0.0:
            if lo > 0.0 or hi < 0.0:
                return math.inf
            continue
        r_lo = lo / p
        r_hi = hi / p
        if r_lo > r_hi:
            r_lo, r_hi = r_hi, r_lo
        if r_lo > t0:
            t0 = r_lo
        if r_hi < t1:
            t1 = r_hi
        if t0 > t1:
            return math.inf
    return t0


def _ray_disc_entry(ox, oy, dx, dy, cx, cy, r) -> float:
    """Entry distance of a unit-direction ray into the disc, or inf."""
    fx = cx - ox
    fy = cy - oy
    b = fx * dx + fy * dy
    c = fx * fx + fy * fy - r * r
    if c <= 0.0:
        return 0.0
    if b <= 0.0:
        return math.inf
    disc = b * b - c
    if disc < 0.0:
        return math.inf
    return b - math.sqrt(disc)


def raycast_distance(origin, heading: float, arena: ArenaSpec,
                     obstacles: ObstacleSet = EMPTY_OBSTACLES,
                     max_range: float = ARENA_SIZE) -> float:
    """Distance from origin along heading to the first wall/obstacle/boundary hit.

    Capped at max_range. The origin must lie inside the arena bounds.
    """
    ox, oy = origin
    dx = math.cos(heading)
    dy = math.sin(heading)
    best = max_range
    # Boundary exit distances (robot is inside, so these are positive).
    if dx > 0.0:
        t = (arena.size - ox) / dx
        if t < best:
            best = t
    elif dx < 0.0:
        t = -ox / dx
        if t < best:
            best = t
    if dy > 0.0:
        t = (arena.size - oy) / dy
        if t < best:
            best = t
    elif dy < 0.0:
        t = -oy / dy
        if t < best:
            best = t
    for wall in arena.walls:
        t = _ray_rect_entry(ox, oy, dx, dy, wall)
        if t < best:
            best = t
    for cx, cy, r in obstacles.discs:
        t = _ray_disc_entry(ox, oy, dx, dy, cx, cy, r)
        if t < best:
            best = t
    return best


def circle_hits_wall(x: float, y: float, r: float, wall: Wall) -> bool:
    """Disc-rectangle overlap test used for collision checks."""
    px = min(max(x, wall.x_min), wall.x_max)
    py = min(max(y, wall.y_min), wall.y_max)
    ex = x - px
    ey = y - py
    return ex * ex + ey * ey < r * r


def circle_in_bounds(x: float, y: float, r: float, size: float = ARENA_SIZE) -> bool:
    return r <= x <= size - r and r <= y <= size - r
