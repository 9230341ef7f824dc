"""Ideal IMU synthesis by inverse mechanization, and sensor corruption.

Sensor model, per axis and sample::

    measured = (1 + scale_factor) * true + bias + noise

with white Gaussian noise of standard deviation ``density * sqrt(rate)``.
During the warm-up interval the bias ramps linearly from zero to its full
value; samples inside it carry ``warmup=True``.

Noise is drawn from numpy's PCG64 generator seeded with the given integer;
the gyro block ``(n, 3)`` is drawn first, then the accelerometer block.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .csvio import read_table, write_table
from .earth import G0, WGS84, EarthModel, gravity_array
from .rotations import dcm_to_rotvec
from .trajectory import TrajectorySeries

IMU_HEADER = ["t", "fx_mps2", "fy_mps2", "fz_mps2", "wx_radps", "wy_radps", "wz_radps", "warmup"]

DEG = math.pi / 180.0


@dataclass(frozen=True)
class ImuSample:
    t: float
    specific_force_b: np.ndarray
    angular_rate_b: np.ndarray
    warmup: bool = False


@dataclass
class ImuSeries:
    dt: float
    t: np.ndarray
    specific_force: np.ndarray
    angular_rate: np.ndarray
    warmup_time: float = 0.0
    warmup: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.warmup is None:
            self.warmup = self.t < self.warmup_time

    def __len__(self):
        return len(self.t)

    def __getitem__(self, i) -> ImuSample:
        return ImuSample(float(self.t[i]), self.specific_force[i].copy(),
                         self.angular_rate[i].copy(), bool(self.warmup[i]))

    @property
    def samples(self) -> list[ImuSample]:
        return [self[i] for i in range(len(self))]

    def to_csv(self, path) -> None:
        write_table(path, IMU_HEADER, [self.t, *self.specific_force.T, *self.angular_rate.T,
                                       self.warmup.astype(int)])

    @classmethod
    def from_csv(cls, path) -> "ImuSeries":
        c = read_table(path, IMU_HEADER)
        t = c["t"]
        warm = c["warmup"].astype(bool)
        dt = float(t[1] - t[0]) if len(t) > 1 else 0.0
        warmup_time = float(t[warm].max() + dt) if warm.any() else 0.0
        return cls(dt, t,
                   np.column_stack([c["fx_mps2"], c["fy_mps2"], c["fz_mps2"]]),
                   np.column_stack([c["wx_radps"], c["wy_radps"], c["wz_radps"]]),
                   warmup_time, warm)


@dataclass(frozen=True)
class TriadErrorModel:
    """Bias and scale factor per axis, white-noise density, sample rate."""

    bias: np.ndarray
    scale_factor: np.ndarray
    noise_density: float
    sample_rate: float

    def __post_init__(self):
        object.__setattr__(self, "bias", np.broadcast_to(np.asarray(self.bias, float), (3,)).copy())
        object.__setattr__(self, "scale_factor",
                           np.broadcast_to(np.asarray(self.scale_factor, float), (3,)).copy())
        if not self.sample_rate > 0:
            raise ValueError("sample_rate must be positive")
        if not self.noise_density >= 0:
            raise ValueError("noise_density must be non-negative")
        if np.any(self.scale_factor <= -1):
            raise ValueError("scale_factor components must exceed -1")

    @property
    def sigma(self) -> float:
        return noise_sigma(self.noise_density, self.sample_rate)


def mems_gyro(rate: float = 100.0) -> TriadErrorModel:
    """5 % scale factor, 100 deg/h bias, 0.1 deg/s/sqrt(Hz) noise."""
    return TriadErrorModel(100.0 * DEG / 3600.0, 0.05, 0.1 * DEG, rate)


def mems_accel(rate: float = 100.0) -> TriadErrorModel:
    """1 % scale factor, 1000 micro-g bias, 500 micro-g/sqrt(Hz) noise."""
    return TriadErrorModel(1000e-6 * G0, 0.01, 500e-6 * G0, rate)


def ideal_model(rate: float = 100.0) -> TriadErrorModel:
    return TriadErrorModel(0.0, 0.0, 0.0, rate)


def noise_sigma(density: float, sample_rate: float) -> float:
    if density < 0 or sample_rate < 0:
        raise ValueError("density and sample_rate must be non-negative")
    return density * math.sqrt(sample_rate)


def _body_rates_from_attitude(c: np.ndarray, dt: float) -> np.ndarray:
    """omega_nb^b from a sampled C_b^n sequence by central rotation differences."""
    n = len(c)
    ct = np.swapaxes(c, -1, -2)
    w = np.empty((n, 3))
    w[1:-1] = dcm_to_rotvec(ct[:-2] @ c[2:]) / (2.0 * dt)
    half = dcm_to_rotvec(ct[:2] @ c[1:3]) / dt          # at t0+dt/2, t1+dt/2
    w[0] = 2.0 * half[0] - w[1] if n > 3 else half[0]
    half_end = dcm_to_rotvec(ct[-2:-1] @ c[-1:])[0] / dt
    w[-1] = 2.0 * half_end - w[-2] if n > 3 else half_end
    return w


def nav_rates(lla: np.ndarray, vel: np.ndarray, earth: EarthModel = WGS84):
    """Earth rate and transport rate in ENU, vectorised over (n, 3)."""
    lat, alt = lla[:, 0], lla[:, 2]
    s = np.sin(lat)
    x = 1.0 - earth.eccentricity_sq * s * s
    rn = earth.semi_major_a / np.sqrt(x)
    rm = rn * (1.0 - earth.eccentricity_sq) / x
    w_ie = earth.earth_rate * np.column_stack([np.zeros_like(lat), np.cos(lat), s])
    w_en = np.column_stack([-vel[:, 1] / (rm + alt), vel[:, 0] / (rn + alt),
                            vel[:, 0] * np.tan(lat) / (rn + alt)])
    return w_ie, w_en


def derive_ideal(traj: TrajectorySeries, earth: EarthModel = WGS84,
                 warmup_time: float = 0.0) -> ImuSeries:
    """Error-free specific force and angular rate that reproduce `traj`."""
    n = len(traj)
    if n < 3:
        raise ValueError(f"trajectory too short for derivatives: {n} samples, need 3")
    dt = traj.dt
    vdot = np.gradient(traj.vel, dt, axis=0, edge_order=2)
    w_ie, w_en = nav_rates(traj.lla, traj.vel, earth)
    g = gravity_array(traj.lla[:, 0], traj.lla[:, 2], earth)
    f_n = vdot + np.cross(2.0 * w_ie + w_en, traj.vel)
    f_n[:, 2] += g
    c = traj.dcm()
    ct = np.swapaxes(c, -1, -2)
    f_b = np.einsum("nij,nj->ni", ct, f_n)
    w_nb = _body_rates_from_attitude(c, dt)
    w_ib = np.einsum("nij,nj->ni", ct, w_ie + w_en) + w_nb
    return ImuSeries(dt, traj.t.copy(), f_b, w_ib, warmup_time)


def corrupt(series: ImuSeries, gyro: TriadErrorModel, accel: TriadErrorModel, seed: int,
            warmup_time: float | None = None) -> ImuSeries:
    """Apply scale factor, (warm-up ramped) bias and white noise to both triads."""
    for name, model in (("gyro", gyro), ("accel", accel)):
        if abs(model.sample_rate * series.dt - 1.0) > 1e-9:
            raise ValueError(f"{name} sample_rate {model.sample_rate} Hz does not match "
                             f"series rate {1.0 / series.dt} Hz")
    warm = series.warmup_time if warmup_time is None else warmup_time
    rng = np.random.Generator(np.random.PCG64(seed))
    n = len(series)
    eta_g = rng.standard_normal((n, 3)) * gyro.sigma
    eta_a = rng.standard_normal((n, 3)) * accel.sigma
    ramp = np.clip(series.t / warm, 0.0, 1.0)[:, None] if warm > 0 else 1.0
    w = (1.0 + gyro.scale_factor) * series.angular_rate + ramp * gyro.bias + eta_g
    f = (1.0 + accel.scale_factor) * series.specific_force + ramp * accel.bias + eta_a
    return ImuSeries(series.dt, series.t.copy(), f, w, warm)
