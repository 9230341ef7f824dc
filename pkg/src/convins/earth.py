"""Earth ellipsoid, gravity and local-frame helpers.

All angles are radians, lengths meters. The navigation frame is local-level
East-North-Up (ENU). Constants default to WGS-84.

The scalar kernels prefixed with an underscore are compiled with numba so the
strapdown integrator and the trajectory generator can call them from their
own compiled loops.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

#: Standard gravity used for the micro-g unit.
G0 = 9.80665
#: Free-air gravity gradient, (m/s^2)/m.
FREE_AIR = 3.086e-6


class GeodesyError(ValueError):
    """Raised on a geodetic domain violation (pole, out-of-range latitude...)."""


@dataclass(frozen=True)
class EarthModel:
    semi_major_a: float = 6378137.0
    flattening_inv: float = 298.257223563
    earth_rate: float = 7.292115e-5
    gravity_equator: float = 9.7803253359
    gravity_pole: float = 9.8321849378

    def __post_init__(self):
        if self.flattening_inv <= 1.0:
            raise GeodesyError("flattening_inv must exceed 1")
        if self.earth_rate <= 0:
            raise GeodesyError("earth_rate must be positive")

    @classmethod
    def sphere(cls, radius: float = 6378137.0, **kw) -> "EarthModel":
        return cls(semi_major_a=radius, flattening_inv=math.inf, **kw)

    @property
    def flattening(self) -> float:
        return 0.0 if math.isinf(self.flattening_inv) else 1.0 / self.flattening_inv

    @property
    def semi_minor_b(self) -> float:
        return self.semi_major_a * (1.0 - self.flattening)

    @property
    def eccentricity_sq(self) -> float:
        f = self.flattening
        return f * (2.0 - f)

    @property
    def somigliana_k(self) -> float:
        # k = (b*gp - a*ge) / (a*ge)
        return (1.0 - self.flattening) * self.gravity_pole / self.gravity_equator - 1.0

    def kernel_args(self) -> tuple[float, float, float, float, float]:
        """Flat tuple consumed by the compiled kernels."""
        return (self.semi_major_a, self.eccentricity_sq, self.earth_rate,
                self.gravity_equator, self.somigliana_k)


WGS84 = EarthModel()


@dataclass(frozen=True)
class GeodeticPosition:
    latitude: float
    longitude: float
    altitude: float = 0.0

    def __post_init__(self):
        if not abs(self.latitude) <= math.pi / 2:
            raise GeodesyError(f"latitude {self.latitude!r} outside [-pi/2, pi/2]")
        object.__setattr__(self, "longitude", wrap_angle(self.longitude))

    def as_array(self) -> np.ndarray:
        return np.array([self.latitude, self.longitude, self.altitude])

    @classmethod
    def from_array(cls, lla) -> "GeodeticPosition":
        return cls(float(lla[0]), float(lla[1]), float(lla[2]))

    @classmethod
    def from_degrees(cls, lat_deg: float, lon_deg: float, alt: float = 0.0):
        return cls(math.radians(lat_deg), math.radians(lon_deg), alt)


@dataclass(frozen=True)
class EnuVector:
    east: float
    north: float
    up: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.east, self.north, self.up)):
            raise ValueError("EnuVector components must be finite")

    def as_array(self) -> np.ndarray:
        return np.array([self.east, self.north, self.up])


def wrap_angle(angle):
    """Wrap to (-pi, pi]; values already in range are returned bit-for-bit."""
    a = np.asarray(angle, dtype=float)
    wrapped = -np.remainder(-a + np.pi, 2 * np.pi) + np.pi
    wrapped = np.where((a > -np.pi) & (a <= np.pi), a, wrapped)
    return float(wrapped) if np.ndim(wrapped) == 0 else wrapped


@njit(cache=True)
def _radii(lat, a, e2):
    s = math.sin(lat)
    x = 1.0 - e2 * s * s
    rn = a / math.sqrt(x)
    rm = rn * (1.0 - e2) / x
    return rm, rn


@njit(cache=True)
def _gravity(lat, alt, a, e2, ge, k):
    s2 = math.sin(lat) ** 2
    return ge * (1.0 + k * s2) / math.sqrt(1.0 - e2 * s2) - FREE_AIR * alt


def _check_lat(lat):
    if not abs(lat) <= math.pi / 2:
        raise GeodesyError(f"latitude {lat!r} outside [-pi/2, pi/2]")


def curvature_radii(lat: float, earth: EarthModel = WGS84) -> tuple[float, float]:
    """Meridian (R_m) and prime-vertical (R_n) radii of curvature at `lat`."""
    _check_lat(lat)
    return _radii(float(lat), earth.semi_major_a, earth.eccentricity_sq)


def normal_gravity(lat: float, alt: float, earth: EarthModel = WGS84) -> float:
    """Somigliana normal gravity with a linear free-air correction.

    Returns the magnitude; the ENU gravity vector is ``(0, 0, -g)``.
    """
    _check_lat(lat)
    if not alt > -10_000.0:
        raise GeodesyError(f"altitude {alt!r} below -10 km")
    a, e2, _, ge, k = earth.kernel_args()
    return _gravity(float(lat), float(alt), a, e2, ge, k)


def gravity_array(lat, alt, earth: EarthModel = WGS84) -> np.ndarray:
    """Vectorised `normal_gravity` without domain checks."""
    s2 = np.sin(lat) ** 2
    return (earth.gravity_equator * (1.0 + earth.somigliana_k * s2)
            / np.sqrt(1.0 - earth.eccentricity_sq * s2) - FREE_AIR * np.asarray(alt))


def d_matrix(lat: float, alt: float, earth: EarthModel = WGS84) -> np.ndarray:
    """Map from ENU velocity to (lat, lon, alt) rates."""
    _check_lat(lat)
    c = math.cos(lat)
    if abs(lat) >= math.pi / 2 or c == 0.0:
        raise GeodesyError("D matrix is singular at the poles")
    rm, rn = curvature_radii(lat, earth)
    return np.array([
        [0.0, 1.0 / (rm + alt), 0.0],
        [1.0 / ((rn + alt) * c), 0.0, 0.0],
        [0.0, 0.0, 1.0],
    ])


def skew(v) -> np.ndarray:
    """Skew-symmetric matrix with ``skew(v) @ u == cross(v, u)``."""
    x, y, z = v
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]], dtype=float)


def earth_rate_enu(lat: float, earth: EarthModel = WGS84) -> np.ndarray:
    return earth.earth_rate * np.array([0.0, math.cos(lat), math.sin(lat)])


def transport_rate_enu(lat: float, alt: float, vel, earth: EarthModel = WGS84) -> np.ndarray:
    """Rotation rate of the ENU frame relative to the Earth, from velocity."""
    rm, rn = curvature_radii(lat, earth)
    ve, vn, _ = vel
    return np.array([-vn / (rm + alt), ve / (rn + alt), ve * math.tan(lat) / (rn + alt)])


_MAX_LOCAL = 0.1


def lla_to_enu(p: GeodeticPosition, origin: GeodeticPosition,
               earth: EarthModel = WGS84) -> EnuVector:
    """Local-tangent ENU offset of `p` from `origin` (small-offset approximation)."""
    east, north, up = lla_to_enu_array(p.as_array(), origin, earth)
    return EnuVector(float(east), float(north), float(up))


def enu_to_lla(v: EnuVector, origin: GeodeticPosition,
               earth: EarthModel = WGS84) -> GeodeticPosition:
    return GeodeticPosition.from_array(enu_to_lla_array(v.as_array(), origin, earth))


def lla_to_enu_array(lla, origin: GeodeticPosition, earth: EarthModel = WGS84,
                     check: bool = True) -> np.ndarray:
    """Vectorised `lla_to_enu` over an ``(..., 3)`` array of lat/lon/alt.

    With ``check=False`` the same linear map is applied at any offset; the
    result is then scaled geodetic offsets rather than true tangent-plane
    coordinates. Used for free-inertial solutions that drift hundreds of km.
    """
    lla = np.asarray(lla, dtype=float)
    dlat = lla[..., 0] - origin.latitude
    dlon = wrap_angle(lla[..., 1] - origin.longitude)
    if check and (np.any(np.abs(dlat) >= _MAX_LOCAL) or np.any(np.abs(dlon) >= _MAX_LOCAL)):
        raise GeodesyError("offset too large for the local-tangent approximation")
    rm, rn = curvature_radii(origin.latitude, earth)
    h0 = origin.altitude
    return np.stack([
        dlon * (rn + h0) * math.cos(origin.latitude),
        dlat * (rm + h0),
        lla[..., 2] - h0,
    ], axis=-1)


def enu_to_lla_array(enu, origin: GeodeticPosition, earth: EarthModel = WGS84,
                     check: bool = True) -> np.ndarray:
    enu = np.asarray(enu, dtype=float)
    rm, rn = curvature_radii(origin.latitude, earth)
    h0 = origin.altitude
    lat = origin.latitude + enu[..., 1] / (rm + h0)
    lon = origin.longitude + enu[..., 0] / ((rn + h0) * math.cos(origin.latitude))
    if check and (np.any(np.abs(lat - origin.latitude) >= _MAX_LOCAL)
                  or np.any(np.abs(lon - origin.longitude) >= _MAX_LOCAL)):
        raise GeodesyError("offset too large for the local-tangent approximation")
    return np.stack([lat, wrap_angle(lon), enu[..., 2] + h0], axis=-1)
