"""WGS-84 geodetic/ECEF conversions and look angles.

Angles are degrees at the API boundary and radians internally.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInput

WGS84_A = 6378137.0
WGS84_F = 1.0 / 298.257223563
WGS84_B = WGS84_A * (1.0 - WGS84_F)
WGS84_E2 = WGS84_F * (2.0 - WGS84_F)
_EP2 = WGS84_E2 / (1.0 - WGS84_E2)


@dataclass(frozen=True)
class GeodeticPosition:
    lat: float
    lon: float
    alt: float = 0.0

    def __post_init__(self):
        if not -90.0 <= self.lat <= 90.0:
            raise ValueError(f"latitude {self.lat} out of range")
        if not -180.0 <= self.lon <= 180.0:
            raise ValueError(f"longitude {self.lon} out of range")
        if not math.isfinite(self.alt):
            raise ValueError("altitude must be finite")

    @classmethod
    def parse(cls, text: str) -> "GeodeticPosition":
        """Parse ``"lat,lon,alt"`` (alt optional)."""
        parts = [p.strip() for p in text.split(",")]
        if len(parts) not in (2, 3):
            raise ValueError(f"expected LAT,LON[,ALT], got {text!r}")
        vals = [float(p) for p in parts]
        return cls(*vals)


@dataclass(frozen=True)
class EcefPosition:
    x: float
    y: float
    z: float

    def __array__(self, dtype=None, copy=None):
        return np.array([self.x, self.y, self.z], dtype=dtype)

    @classmethod
    def of(cls, xyz) -> "EcefPosition":
        x, y, z = (float(v) for v in xyz)
        return cls(x, y, z)

    def norm(self) -> float:
        return math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z)


@dataclass(frozen=True)
class LookAngles:
    elevation: float
    azimuth: float
    range: float


def llh_to_xyz(lat_deg, lon_deg, alt):
    """Array form of :func:`geodetic_to_ecef`; broadcasts over inputs."""
    lat = np.radians(lat_deg)
    lon = np.radians(lon_deg)
    slat, clat = np.sin(lat), np.cos(lat)
    n = WGS84_A / np.sqrt(1.0 - WGS84_E2 * slat * slat)
    x = (n + alt) * clat * np.cos(lon)
    y = (n + alt) * clat * np.sin(lon)
    z = (n * (1.0 - WGS84_E2) + alt) * slat
    return x, y, z


def xyz_to_llh(x, y, z, iterations: int = 5):
    """Array form of :func:`ecef_to_geodetic`.

    Bowring's parametric-latitude start followed by a fixed number of
    latitude refinements; height uses the projection form that stays
    well conditioned at the poles.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    z = np.asarray(z, dtype=float)
    p = np.hypot(x, y)
    beta = np.arctan2(z, (1.0 - WGS84_F) * p)
    lat = np.arctan2(z + _EP2 * WGS84_B * np.sin(beta) ** 3,
                     p - WGS84_E2 * WGS84_A * np.cos(beta) ** 3)
    for _ in range(iterations):
        slat = np.sin(lat)
        n = WGS84_A / np.sqrt(1.0 - WGS84_E2 * slat * slat)
        lat = np.arctan2(z + WGS84_E2 * n * slat, p)
    slat, clat = np.sin(lat), np.cos(lat)
    alt = p * clat + z * slat - WGS84_A * np.sqrt(1.0 - WGS84_E2 * slat * slat)
    lon = np.where(p > 0.0, np.arctan2(y, x), 0.0)
    return np.degrees(lat), np.degrees(lon), alt


def geodetic_to_ecef(g: GeodeticPosition) -> EcefPosition:
    x, y, z = llh_to_xyz(g.lat, g.lon, g.alt)
    return EcefPosition(float(x), float(y), float(z))


def ecef_to_geodetic(p: EcefPosition) -> GeodeticPosition:
    if p.norm() <= 1.0:
        raise DegenerateInput("position within 1 m of the geocenter")
    lat, lon, alt = xyz_to_llh(p.x, p.y, p.z)
    lon = float(lon)
    if lon == -180.0:
        lon = 180.0
    return GeodeticPosition(float(lat), lon, float(alt))


def enu_matrix(lat_deg: float, lon_deg: float) -> np.ndarray:
    """Rows are the local east, north and up unit vectors in ECEF."""
    lat, lon = math.radians(lat_deg), math.radians(lon_deg)
    sl, cl = math.sin(lat), math.cos(lat)
    so, co = math.sin(lon), math.cos(lon)
    return np.array([
        [-so, co, 0.0],
        [-sl * co, -sl * so, cl],
        [cl * co, cl * so, sl],
    ])


def look_angles(observer: EcefPosition, target: EcefPosition) -> LookAngles:
    """Elevation/azimuth of ``target`` in the observer's east-north-up frame.

    Azimuth is clockwise from north in [0, 360).
    """
    if observer.norm() <= 1.0:
        raise DegenerateInput("observer at the geocenter")
    o = np.asarray(observer)
    d = np.asarray(target) - o
    rng = float(np.linalg.norm(d))
    if rng == 0.0:
        raise DegenerateInput("observer and target coincide")
    g = ecef_to_geodetic(observer)
    e, n, u = enu_matrix(g.lat, g.lon) @ d
    el = math.degrees(math.atan2(u, math.hypot(e, n)))
    az = math.degrees(math.atan2(e, n)) % 360.0
    if az >= 360.0:
        az = 0.0
    return LookAngles(el, az, rng)
