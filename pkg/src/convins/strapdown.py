"""Forward strapdown mechanization in the local-level ENU frame.

Per step of length ``dt`` between IMU samples ``k`` and ``k+1``:

* attitude: ``C' = exp(-S(w_in^n dt)) C exp(S(w_ib^b dt))`` with the gyro
  rate averaged over the step and the nav-frame rate (Earth + transport)
  taken at the step midpoint. This is the quaternion exponential of
  ``w_nb^b = w_ib^b - C_n^b w_in^n`` split into body and navigation parts.
* velocity: trapezoidal average of ``C f`` across the step, Coriolis and
  gravity at the midpoint.
* position: midpoint velocity through the D matrix at the midpoint.

Midpoint quantities come from one predictor pass, giving a second-order
scheme. Coning and sculling terms are not modelled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .csvio import read_table, write_table
from .earth import (WGS84, EarthModel, GeodesyError, GeodeticPosition, _gravity, _radii,
                    lla_to_enu_array, wrap_angle)
from .imu import ImuSample, ImuSeries
from .rotations import dcm_to_quat, euler_to_dcm, quat_mul, quat_to_dcm, rotvec_to_quat

NAV_HEADER = ["t", "lat_rad", "lon_rad", "alt_m", "east_m", "north_m", "up_m",
              "ve_mps", "vn_mps", "vu_mps"]

_OK, _POLE, _NONFINITE = 0, 1, 2
_POLE_MARGIN = 1e-9


class MechanizationError(RuntimeError):
    def __init__(self, message: str, index: int | None = None):
        if index is not None:
            message = f"sample {index}: {message}"
        super().__init__(message)
        self.index = index


@dataclass(frozen=True)
class NavState:
    position: GeodeticPosition
    velocity: np.ndarray
    quaternion: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.quaternion, dtype=float)
        object.__setattr__(self, "quaternion", q / np.linalg.norm(q))
        object.__setattr__(self, "velocity", np.asarray(self.velocity, dtype=float).copy())

    @property
    def dcm(self) -> np.ndarray:
        """Body-to-ENU rotation matrix C_b^n."""
        return quat_to_dcm(self.quaternion)

    @classmethod
    def from_euler(cls, position: GeodeticPosition, velocity, roll, pitch, yaw) -> "NavState":
        return cls(position, velocity, dcm_to_quat(euler_to_dcm(roll, pitch, yaw)))

    @classmethod
    def from_trajectory(cls, traj, index: int = 0) -> "NavState":
        """Perfectly aligned state taken from a reference trajectory sample."""
        return cls.from_euler(GeodeticPosition.from_array(traj.lla[index]), traj.vel[index],
                              *traj.att[index])


@dataclass
class NavSeries:
    dt: float
    origin: GeodeticPosition
    t: np.ndarray
    lla: np.ndarray
    vel: np.ndarray
    quat: np.ndarray | None = None
    earth: EarthModel = field(default=WGS84, repr=False)

    def __len__(self):
        return len(self.t)

    @property
    def states(self) -> list[tuple[float, NavState]]:
        if self.quat is None:
            raise ValueError("attitude not available (series loaded from CSV)")
        return [(float(self.t[i]), NavState(GeodeticPosition.from_array(self.lla[i]),
                                            self.vel[i], self.quat[i]))
                for i in range(len(self))]

    def enu(self) -> np.ndarray:
        """ENU offsets from `origin`; unchecked, since free-inertial drift is large."""
        return lla_to_enu_array(self.lla, self.origin, self.earth, check=False)

    def decimate(self, factor: int) -> "NavSeries":
        if int(factor) != factor or factor < 1:
            raise ValueError("decimation factor must be a positive integer")
        s = slice(None, None, int(factor))
        quat = None if self.quat is None else self.quat[s].copy()
        return NavSeries(self.dt * factor, self.origin, self.t[s].copy(), self.lla[s].copy(),
                         self.vel[s].copy(), quat, self.earth)

    def to_csv(self, path) -> None:
        write_table(path, NAV_HEADER, [self.t, *self.lla.T, *self.enu().T, *self.vel.T])

    @classmethod
    def from_csv(cls, path, origin: GeodeticPosition | None = None,
                 earth: EarthModel = WGS84) -> "NavSeries":
        c = read_table(path, NAV_HEADER)
        t = c["t"]
        lla = np.column_stack([c["lat_rad"], c["lon_rad"], c["alt_m"]])
        dt = float(t[1] - t[0]) if len(t) > 1 else 0.0
        origin = origin or GeodeticPosition.from_array(lla[0])
        return cls(dt, origin, t, lla,
                   np.column_stack([c["ve_mps"], c["vn_mps"], c["vu_mps"]]), None, earth)


@njit(cache=True)
def _nav_rate(lat, alt, v, a, e2, we):
    """Return (w_ie^n, w_en^n, Rm, Rn)."""
    rm, rn = _radii(lat, a, e2)
    w_ie = np.empty(3)
    w_ie[0] = 0.0
    w_ie[1] = we * math.cos(lat)
    w_ie[2] = we * math.sin(lat)
    w_en = np.empty(3)
    w_en[0] = -v[1] / (rm + alt)
    w_en[1] = v[0] / (rn + alt)
    w_en[2] = v[0] * math.tan(lat) / (rn + alt)
    return w_ie, w_en, rm, rn


@njit(cache=True)
def _cross(a, b):
    out = np.empty(3)
    out[0] = a[1] * b[2] - a[2] * b[1]
    out[1] = a[2] * b[0] - a[0] * b[2]
    out[2] = a[0] * b[1] - a[1] * b[0]
    return out


@njit(cache=True)
def _step_kernel(pos, vel, q, f0, w0, f1, w1, dt, a, e2, we, ge, k):
    for i in range(3):
        if not (math.isfinite(f0[i]) and math.isfinite(w0[i])
                and math.isfinite(f1[i]) and math.isfinite(w1[i])):
            return pos, vel, q, _NONFINITE
    c0 = quat_to_dcm(q)
    qb = rotvec_to_quat(0.5 * (w0 + w1) * dt)
    fn0 = c0 @ f0
    pos_m = pos.copy()
    vel_m = vel.copy()
    pos1 = pos
    vel1 = vel
    q1 = q
    for _ in range(2):
        if abs(pos_m[0]) >= 0.5 * math.pi - _POLE_MARGIN:
            return pos, vel, q, _POLE
        w_ie, w_en, rm, rn = _nav_rate(pos_m[0], pos_m[2], vel_m, a, e2, we)
        qn = rotvec_to_quat(-(w_ie + w_en) * dt)
        q1 = quat_mul(quat_mul(qn, q), qb)
        q1 = q1 / math.sqrt(q1[0] ** 2 + q1[1] ** 2 + q1[2] ** 2 + q1[3] ** 2)
        fn1 = quat_to_dcm(q1) @ f1
        acc = 0.5 * (fn0 + fn1) - _cross(2.0 * w_ie + w_en, vel_m)
        acc[2] -= _gravity(pos_m[0], pos_m[2], a, e2, ge, k)
        vel1 = vel + acc * dt
        vm = 0.5 * (vel + vel1)
        pos1 = np.empty(3)
        pos1[0] = pos[0] + dt * vm[1] / (rm + pos_m[2])
        pos1[1] = pos[1] + dt * vm[0] / ((rn + pos_m[2]) * math.cos(pos_m[0]))
        pos1[2] = pos[2] + dt * vm[2]
        pos_m = 0.5 * (pos + pos1)
        vel_m = vm
    if abs(pos1[0]) >= 0.5 * math.pi - _POLE_MARGIN:
        return pos, vel, q, _POLE
    return pos1, vel1, q1, _OK


@njit(cache=True)
def _run_kernel(pos0, vel0, q0, f, w, dt, a, e2, we, ge, k):
    n = f.shape[0]
    pos = np.empty((n, 3))
    vel = np.empty((n, 3))
    quat = np.empty((n, 4))
    pos[0] = pos0
    vel[0] = vel0
    quat[0] = q0
    for i in range(n - 1):
        p, v, q, status = _step_kernel(pos[i], vel[i], quat[i], f[i], w[i], f[i + 1], w[i + 1],
                                       dt, a, e2, we, ge, k)
        if status != _OK:
            return pos, vel, quat, status, i + 1
        pos[i + 1] = p
        vel[i + 1] = v
        quat[i + 1] = q
    return pos, vel, quat, _OK, -1


def _raise_status(status, index=None):
    if status == _POLE:
        raise GeodesyError(f"sample {index}: polar singularity" if index is not None
                           else "polar singularity")
    if status == _NONFINITE:
        raise MechanizationError("non-finite IMU input", index)


def step(state: NavState, imu: ImuSample, dt: float, earth: EarthModel = WGS84,
         prev: ImuSample | None = None) -> NavState:
    """Advance `state` by `dt`.

    `imu` is the sample at the end of the step and `prev` the one at its
    start; without `prev` the end sample is used for both ends.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    start = imu if prev is None else prev
    pos, vel, q, status = _step_kernel(
        state.position.as_array(), np.asarray(state.velocity, float), state.quaternion,
        np.asarray(start.specific_force_b, float), np.asarray(start.angular_rate_b, float),
        np.asarray(imu.specific_force_b, float), np.asarray(imu.angular_rate_b, float),
        float(dt), *earth.kernel_args())
    _raise_status(status)
    return NavState(GeodeticPosition.from_array(pos), vel, q)


def run(imu: ImuSeries, init: NavState, earth: EarthModel = WGS84,
        origin: GeodeticPosition | None = None) -> NavSeries:
    """Dead-reckon through the whole series, one state per IMU sample."""
    if len(imu) == 0:
        raise ValueError("empty IMU series")
    if len(imu) > 1 and not imu.dt > 0:
        raise ValueError("dt must be positive")
    pos, vel, quat, status, idx = _run_kernel(
        init.position.as_array(), np.asarray(init.velocity, float), init.quaternion,
        np.ascontiguousarray(imu.specific_force, dtype=float),
        np.ascontiguousarray(imu.angular_rate, dtype=float),
        float(imu.dt), *earth.kernel_args())
    if status != _OK:
        _raise_status(status, idx)
    pos[:, 1] = wrap_angle(pos[:, 1])
    return NavSeries(imu.dt, origin or init.position, imu.t.copy(), pos, vel, quat, earth)
