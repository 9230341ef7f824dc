"""Ground-truth trajectory generation from a segment script.

Horizontal speed is held per segment; yaw integrates the turn rate exactly;
climb segments add a vertical rate that is eased in and out with a raised
cosine so that specific force stays bounded. Position is propagated on the
ellipsoid with RK4 on ``d(lat, lon, alt)/dt = D(lat, alt) @ v``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numba import njit

from .csvio import read_table, write_table
from .earth import WGS84, EarthModel, GeodeticPosition, _radii, lla_to_enu_array, wrap_angle
from .rotations import euler_to_dcm

#: Duration over which a change of segment speed is blended, s.
SPEED_BLEND = 10.0
#: Ease-in/out time of the vertical rate in a climb, s.
CLIMB_EASE = 5.0

TRAJECTORY_HEADER = ["t", "lat_rad", "lon_rad", "alt_m", "ve_mps", "vn_mps", "vu_mps",
                     "roll_rad", "pitch_rad", "yaw_rad"]


class SegmentError(ValueError):
    def __init__(self, index: int, message: str):
        super().__init__(f"segment {index}: {message}")
        self.index = index


@dataclass(frozen=True)
class SegmentSpec:
    kind: str
    duration: float
    speed: float
    turn_rate: float = 0.0
    climb_rate: float = 0.0

    def validate(self, index: int = 0) -> None:
        if self.kind not in ("straight", "turn", "climb"):
            raise SegmentError(index, f"unknown kind {self.kind!r}")
        if not self.duration > 0:
            raise SegmentError(index, "duration must be positive")
        if not self.speed >= 0:
            raise SegmentError(index, "speed must be non-negative")
        if self.kind == "turn" and self.turn_rate == 0:
            raise SegmentError(index, "turn segment needs a nonzero turn_rate")
        if not all(math.isfinite(x) for x in (self.duration, self.speed, self.turn_rate, self.climb_rate)):
            raise SegmentError(index, "non-finite field")


@dataclass(frozen=True)
class TrajectorySample:
    t: float
    position: GeodeticPosition
    velocity: np.ndarray
    attitude: tuple[float, float, float]


@dataclass
class TrajectorySeries:
    """Uniformly sampled reference trajectory, stored column-wise.

    ``lla`` is (n, 3) lat/lon/alt, ``vel`` (n, 3) ENU velocity and ``att``
    (n, 3) roll/pitch/yaw.
    """

    dt: float
    origin: GeodeticPosition
    t: np.ndarray
    lla: np.ndarray
    vel: np.ndarray
    att: np.ndarray
    earth: EarthModel = field(default=WGS84, repr=False)

    def __len__(self):
        return len(self.t)

    def __getitem__(self, i) -> TrajectorySample:
        return TrajectorySample(float(self.t[i]), GeodeticPosition.from_array(self.lla[i]),
                                self.vel[i].copy(), tuple(float(a) for a in self.att[i]))

    @property
    def samples(self) -> list[TrajectorySample]:
        return [self[i] for i in range(len(self))]

    def enu(self) -> np.ndarray:
        """Positions as ENU meters relative to `origin`."""
        return lla_to_enu_array(self.lla, self.origin, self.earth)

    def dcm(self) -> np.ndarray:
        return euler_to_dcm(self.att[:, 0], self.att[:, 1], self.att[:, 2])

    def to_csv(self, path) -> None:
        write_table(path, TRAJECTORY_HEADER,
                    [self.t, *self.lla.T, *self.vel.T, *self.att.T])

    @classmethod
    def from_csv(cls, path, earth: EarthModel = WGS84) -> "TrajectorySeries":
        cols = read_table(path, TRAJECTORY_HEADER)
        t = cols["t"]
        lla = np.column_stack([cols["lat_rad"], cols["lon_rad"], cols["alt_m"]])
        dt = float(t[1] - t[0]) if len(t) > 1 else 0.0
        return cls(dt, GeodeticPosition.from_array(lla[0]), t, lla,
                   np.column_stack([cols["ve_mps"], cols["vn_mps"], cols["vu_mps"]]),
                   np.column_stack([cols["roll_rad"], cols["pitch_rad"], cols["yaw_rad"]]),
                   earth)


def _ease(x):
    """Raised-cosine step from 0 (x<=0) to 1 (x>=1)."""
    x = np.clip(x, 0.0, 1.0)
    return 0.5 - 0.5 * np.cos(np.pi * x)


class _Profile:
    """Piecewise-analytic horizontal speed, yaw and vertical rate."""

    def __init__(self, segments: Sequence[SegmentSpec], initial_yaw: float):
        self.segments = list(segments)
        durations = np.array([s.duration for s in self.segments], dtype=float)
        self.starts = np.concatenate([[0.0], np.cumsum(durations)])
        self.total = float(self.starts[-1])
        yaw0 = [initial_yaw]
        for s in self.segments:
            turn = s.turn_rate * s.duration if s.kind == "turn" else 0.0
            yaw0.append(yaw0[-1] + turn)
        self.yaw0 = np.array(yaw0)
        speeds = [s.speed for s in self.segments]
        self.prev_speed = np.array(speeds[:1] + speeds[:-1], dtype=float)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if not self.segments:
            z = np.zeros_like(t)
            return z, np.full_like(t, self.yaw0[0]), z
        j = np.clip(np.searchsorted(self.starts, t, side="right") - 1, 0, len(self.segments) - 1)
        tau = t - self.starts[j]
        speed = np.empty_like(t)
        yaw = np.empty_like(t)
        vu = np.zeros_like(t)
        for k, seg in enumerate(self.segments):
            m = j == k
            if not np.any(m):
                continue
            tk = tau[m]
            blend = min(SPEED_BLEND, 0.5 * seg.duration)
            s0 = self.prev_speed[k]
            speed[m] = s0 + (seg.speed - s0) * _ease(tk / blend)
            rate = seg.turn_rate if seg.kind == "turn" else 0.0
            yaw[m] = self.yaw0[k] + rate * tk
            if seg.kind == "climb":
                ease = min(CLIMB_EASE, 0.25 * seg.duration)
                vu[m] = seg.climb_rate * _ease(tk / ease) * _ease((seg.duration - tk) / ease)
        return speed, yaw, vu


@njit(cache=True)
def _rk4_positions(lla0, v_knots, v_mid, dt, a, e2):
    n = v_knots.shape[0]
    out = np.empty((n, 3))
    out[0] = lla0
    for i in range(n - 1):
        p = out[i].copy()
        k1 = _pos_rate(p, v_knots[i], a, e2)
        k2 = _pos_rate(p + 0.5 * dt * k1, v_mid[i], a, e2)
        k3 = _pos_rate(p + 0.5 * dt * k2, v_mid[i], a, e2)
        k4 = _pos_rate(p + dt * k3, v_knots[i + 1], a, e2)
        out[i + 1] = p + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return out


@njit(cache=True)
def _pos_rate(p, v, a, e2):
    rm, rn = _radii(p[0], a, e2)
    r = np.empty(3)
    r[0] = v[1] / (rm + p[2])
    r[1] = v[0] / ((rn + p[2]) * math.cos(p[0]))
    r[2] = v[2]
    return r


def _enu_velocity(speed, yaw, vu):
    return np.column_stack([speed * np.sin(yaw), speed * np.cos(yaw), vu])


def generate(origin: GeodeticPosition, initial_yaw: float, segments: Sequence[SegmentSpec],
             dt: float, earth: EarthModel = WGS84) -> TrajectorySeries:
    """Sample the scripted trajectory every `dt` seconds from t = 0.

    The vehicle starts already moving at the first segment's speed; an empty
    script yields one stationary sample at `origin`.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    for i, seg in enumerate(segments):
        seg.validate(i)
    prof = _Profile(segments, initial_yaw)
    n = int(math.floor(prof.total / dt + 1e-9)) + 1
    t = np.arange(n) * dt
    speed, yaw, vu = prof(t)
    vel = _enu_velocity(speed, yaw, vu)
    vel_mid = _enu_velocity(*prof(t[:-1] + 0.5 * dt))
    lla = _rk4_positions(origin.as_array(), vel, vel_mid, dt,
                         earth.semi_major_a, earth.eccentricity_sq)
    if np.any(np.abs(lla[:, 0]) >= math.pi / 2):
        raise ValueError("trajectory reaches a pole")
    lla[:, 1] = wrap_angle(lla[:, 1])
    pitch = np.arctan2(vu, speed)
    att = np.column_stack([np.zeros(n), pitch, wrap_angle(yaw)])
    return TrajectorySeries(dt, origin, t, lla, vel, att, earth)


def decimate(series: TrajectorySeries, factor: int) -> TrajectorySeries:
    """Keep every `factor`-th sample starting at index 0."""
    if int(factor) != factor or factor < 1:
        raise ValueError("decimation factor must be a positive integer")
    s = slice(None, None, int(factor))
    return TrajectorySeries(series.dt * factor, series.origin, series.t[s].copy(),
                            series.lla[s].copy(), series.vel[s].copy(), series.att[s].copy(),
                            series.earth)


def default_segments(total: float = 3000.0, speed: float = 15.0) -> list[SegmentSpec]:
    """Alternating straights and +/-3 deg/s turns with one climb, `total` s long."""
    r = math.radians(3.0)
    script = [
        SegmentSpec("straight", 240.0, speed),
        SegmentSpec("turn", 30.0, speed, turn_rate=r),
        SegmentSpec("straight", 300.0, speed),
        SegmentSpec("turn", 60.0, speed, turn_rate=-r),
        SegmentSpec("climb", 180.0, speed, climb_rate=1.0),
        SegmentSpec("straight", 210.0, speed),
        SegmentSpec("turn", 30.0, speed, turn_rate=r),
        SegmentSpec("straight", 270.0, speed),
        SegmentSpec("turn", 45.0, speed, turn_rate=-r),
        SegmentSpec("straight", 255.0, speed),
        SegmentSpec("turn", 30.0, speed, turn_rate=r),
        SegmentSpec("straight", 150.0, speed),
        SegmentSpec("straight", 300.0, speed),
        SegmentSpec("turn", 60.0, speed, turn_rate=r),
        SegmentSpec("straight", 240.0, speed),
        SegmentSpec("turn", 30.0, speed, turn_rate=-r),
    ]
    used = sum(s.duration for s in script)
    if total <= used:
        raise ValueError(f"default script needs total > {used:g} s")
    script.append(SegmentSpec("straight", total - used, speed))
    return script
