"""Random-waypoint motion and 3D cylinder blockage of line-of-sight links."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np

MOVING = "moving"
PAUSED = "paused"

TANGENT_TOL_M2 = 1e-9


@dataclass(frozen=True)
class MobilityConfig:
    bounds: tuple  # (x_min, x_max, y_min, y_max)
    speed_range: tuple = (2.0, 20.0)
    move_range: tuple = (2.0, 6.0)
    pause_range: tuple = (0.0, 1.0)

    def __post_init__(self):
        x0, x1, y0, y1 = self.bounds
        if not (x1 > x0 and y1 > y0):
            raise ValueError(f"degenerate area bounds {self.bounds}")
        for name in ("speed_range", "move_range", "pause_range"):
            lo, hi = getattr(self, name)
            if lo < 0 or hi < lo:
                raise ValueError(f"invalid {name}: {(lo, hi)}")
        if self.move_range[1] <= 0:
            raise ValueError("move durations must allow positive motion time")


@dataclass(frozen=True)
class WaypointState:
    x: float
    y: float
    heading: float
    speed: float
    phase: str
    phase_remaining: float

    @property
    def pos(self):
        return (self.x, self.y)


@dataclass(frozen=True)
class Blocker:
    motion: WaypointState
    radius_m: float = 2.5
    height_m: float = 2.0

    def __post_init__(self):
        if self.radius_m <= 0 or self.height_m <= 0:
            raise ValueError("blocker radius and height must be positive")


def _uniform(rng, lo, hi):
    return lo if hi == lo else float(rng.uniform(lo, hi))


def _new_move(state: WaypointState, cfg: MobilityConfig, rng) -> WaypointState:
    # new direction is drawn relative to the current one, xi in [-pi, pi]
    xi = float(rng.uniform(-math.pi, math.pi))
    return replace(state,
                   heading=wrap_angle(state.heading + xi),
                   speed=_uniform(rng, *cfg.speed_range),
                   phase=MOVING,
                   phase_remaining=_uniform(rng, *cfg.move_range))


def initial_waypoint_state(cfg: MobilityConfig, rng) -> WaypointState:
    x0, x1, y0, y1 = cfg.bounds
    state = WaypointState(x=float(rng.uniform(x0, x1)), y=float(rng.uniform(y0, y1)),
                          heading=float(rng.uniform(-math.pi, math.pi)),
                          speed=0.0, phase=PAUSED, phase_remaining=0.0)
    return replace(state, speed=_uniform(rng, *cfg.speed_range), phase=MOVING,
                   phase_remaining=_uniform(rng, *cfg.move_range))


def reflect_into(value: float, lo: float, hi: float) -> tuple[float, bool]:
    """Fold ``value`` into [lo, hi] by mirror reflection.

    Returns the folded value and whether an odd number of reflections
    happened (the velocity component must then be negated).
    """
    span = hi - lo
    u = (value - lo) % (2.0 * span)
    if u <= span:
        flips = math.floor((value - lo) / span)
        return lo + u, bool(flips % 2)
    return hi - (u - span), True


def waypoint_step(state: WaypointState, dt: float, cfg: MobilityConfig, rng) -> WaypointState:
    if not dt > 0:
        raise ValueError("dt must be positive")
    if state.phase == MOVING:
        travel = min(dt, state.phase_remaining)
        x = state.x + state.speed * travel * math.cos(state.heading)
        y = state.y + state.speed * travel * math.sin(state.heading)
        x0, x1, y0, y1 = cfg.bounds
        heading = state.heading
        if not (x0 <= x <= x1):
            x, flip = reflect_into(x, x0, x1)
            if flip:
                heading = math.pi - heading
        if not (y0 <= y <= y1):
            y, flip = reflect_into(y, y0, y1)
            if flip:
                heading = -heading
        state = replace(state, x=x, y=y, heading=wrap_angle(heading))
    remaining = state.phase_remaining - dt
    if remaining > 0:
        return replace(state, phase_remaining=remaining)
    if state.phase == MOVING:
        pause = _uniform(rng, *cfg.pause_range)
        if pause > 0:
            return replace(state, phase=PAUSED, phase_remaining=pause)
    return _new_move(state, cfg, rng)


def wrap_angle(a: float) -> float:
    """Normalise to (-pi, pi]."""
    a = math.remainder(a, 2.0 * math.pi)
    return math.pi if a == -math.pi else a


def los_blocked(tx: Sequence[float], rx: Sequence[float], blocker: Blocker) -> bool:
    cx, cy = blocker.motion.x, blocker.motion.y
    return bool(blocked_by_any(tx, rx, np.array([[cx, cy]]),
                               np.array([blocker.radius_m]), np.array([blocker.height_m])))


def _chord_params(tx, rx, centers, radii):
    """Segment parameters where the ground projection enters/leaves each circle.

    Returns (hit, t_in, t_out) arrays. ``hit`` is False for Case I
    (no contact); tangency within TANGENT_TOL_M2 gives t_in == t_out.
    """
    tx = np.asarray(tx, dtype=float)
    rx = np.asarray(rx, dtype=float)
    dx, dy = rx[0] - tx[0], rx[1] - tx[1]
    a = dx * dx + dy * dy
    ox = tx[0] - centers[:, 0]
    oy = tx[1] - centers[:, 1]
    r2 = radii * radii
    if a == 0.0:
        inside = ox * ox + oy * oy <= r2
        return inside, np.zeros_like(r2), np.ones_like(r2)
    t_mid = -(ox * dx + oy * dy) / a
    px = ox + t_mid * dx
    py = oy + t_mid * dy
    # r^2 minus squared distance from circle centre to the infinite line
    margin = r2 - (px * px + py * py)
    tangent = np.abs(margin) <= TANGENT_TOL_M2
    half = np.sqrt(np.where(margin > 0, margin, 0.0) / a)
    half = np.where(tangent, 0.0, half)
    t_in = t_mid - half
    t_out = t_mid + half
    hit = (margin >= -TANGENT_TOL_M2) & (t_out >= 0.0) & (t_in <= 1.0)
    return hit, t_in, t_out


def blocked_by_any(tx, rx, centers: np.ndarray, radii: np.ndarray, heights: np.ndarray) -> np.ndarray:
    """Per-blocker LOS blockage flags for the link ``tx`` -> ``rx``.

    ``tx`` and ``rx`` are (x, y, z); the blockers are cylinders standing on
    the ground with the given centres, radii and heights.
    """
    centers = np.asarray(centers, dtype=float).reshape(-1, 2)
    if len(centers) == 0:
        return np.zeros(0, dtype=bool)
    radii = np.asarray(radii, dtype=float)
    heights = np.asarray(heights, dtype=float)
    hit, t_in, t_out = _chord_params(tx, rx, centers, radii)
    t_in = np.clip(t_in, 0.0, 1.0)
    t_out = np.clip(t_out, 0.0, 1.0)
    z0, z1 = float(tx[2]), float(rx[2])
    h_in = z0 + t_in * (z1 - z0)
    h_out = z0 + t_out * (z1 - z0)
    return hit & ((h_in <= heights) | (h_out <= heights))


def access_link_blocked(tx, rx, blockers: Iterable[Blocker]) -> bool:
    blockers = list(blockers)
    if not blockers:
        return False
    centers = np.array([[b.motion.x, b.motion.y] for b in blockers])
    radii = np.array([b.radius_m for b in blockers])
    heights = np.array([b.height_m for b in blockers])
    return bool(np.any(blocked_by_any(tx, rx, centers, radii, heights)))
