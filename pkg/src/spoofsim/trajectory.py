"""Receiver motion scenarios at a fixed 10 Hz cadence.

Sources are a static position, an NMEA GGA stream, a user motion CSV
(``t,x,y,z`` in ECEF metres) or a waypoint polyline driven at a given
speed. Interpolation is linear in ECEF.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, List, Sequence

import numpy as np

from .errors import (BadChecksum, DegeneratePath, InsufficientFixes, MalformedField, MalformedRow,
                     NonMonotonicTime, NonUniformCadence, NotGga, TrajectoryError)
from .geodesy import EcefPosition, GeodeticPosition, geodetic_to_ecef, llh_to_xyz
from .gpstime import GpsTime

STEP = 0.1
RATE_HZ = 10
MAX_SPEED = 1000.0
_CADENCE_TOL = 1e-6


@dataclass(frozen=True)
class GgaFix:
    utc: float
    position: GeodeticPosition
    fix_quality: int
    num_sats: int
    hdop: float
    geoid_sep: float

    @property
    def ellipsoid_height(self) -> float:
        """GGA altitude is above mean sea level; add the sentence's geoid separation."""
        return self.position.alt + self.geoid_sep


@dataclass(frozen=True)
class TrajectorySample:
    t: float
    pos: EcefPosition


@dataclass
class Scenario:
    mode: str
    start: GpsTime
    times: np.ndarray
    positions: np.ndarray

    @property
    def duration(self) -> float:
        return float(self.times[-1])

    @property
    def samples(self) -> List[TrajectorySample]:
        return [TrajectorySample(float(t), EcefPosition.of(p)) for t, p in zip(self.times, self.positions)]

    def __len__(self):
        return len(self.times)

    def velocities(self) -> np.ndarray:
        """Per-step ECEF velocity; the last step's value is repeated at the end."""
        if len(self.times) < 2:
            return np.zeros_like(self.positions)
        v = np.diff(self.positions, axis=0) / STEP
        return np.vstack([v, v[-1:]])


def grid(n_steps: int) -> np.ndarray:
    """Cadence times k/10 for k = 0..n_steps (exact decimal representatives)."""
    return np.arange(n_steps + 1) / RATE_HZ


def check_trajectory(times: np.ndarray, positions: np.ndarray):
    if len(times) < 1:
        raise TrajectoryError("empty trajectory")
    if abs(times[0]) > _CADENCE_TOL:
        raise TrajectoryError("trajectory must start at t=0")
    if len(times) > 1:
        steps = np.diff(times)
        if np.any(np.abs(steps - STEP) > _CADENCE_TOL):
            raise TrajectoryError("trajectory cadence is not a uniform 0.1 s")
        speeds = np.linalg.norm(np.diff(positions, axis=0), axis=1) / STEP
        if np.any(speeds > MAX_SPEED):
            k = int(np.argmax(speeds))
            raise TrajectoryError(f"implied speed {speeds[k]:.1f} m/s exceeds {MAX_SPEED:.0f} m/s "
                                  f"at t={times[k]:.1f} s")


def nmea_checksum(body: str) -> int:
    c = 0
    for ch in body.encode("ascii", errors="replace"):
        c ^= ch
    return c


def _deg_min(text: str, hemi: str, pos_hemi: str, neg_hemi: str, deg_digits: int) -> float:
    if len(text) < deg_digits + 2:
        raise MalformedField(f"bad coordinate {text!r}")
    try:
        value = int(text[:deg_digits]) + float(text[deg_digits:]) / 60.0
    except ValueError:
        raise MalformedField(f"bad coordinate {text!r}") from None
    if hemi == neg_hemi:
        return -value
    if hemi != pos_hemi:
        raise MalformedField(f"bad hemisphere {hemi!r}")
    return value


def parse_nmea_gga(sentence: str) -> GgaFix:
    s = sentence.strip()
    if not s.startswith("$") or "*" not in s:
        raise MalformedField("not an NMEA sentence (missing '$' or '*')")
    body, _, check = s[1:].rpartition("*")
    try:
        expected = int(check[:2], 16)
    except ValueError:
        raise MalformedField(f"bad checksum field {check!r}") from None
    if nmea_checksum(body) != expected:
        raise BadChecksum(f"checksum {check[:2]} != {nmea_checksum(body):02X}")
    parts = body.split(",")
    if len(parts[0]) < 5 or parts[0][2:5] != "GGA":
        raise NotGga(f"{parts[0]} sentence")
    if len(parts) < 12:
        raise MalformedField(f"GGA has {len(parts)} fields, expected at least 12")
    utc_s = parts[1]
    try:
        utc = int(utc_s[0:2]) * 3600 + int(utc_s[2:4]) * 60 + float(utc_s[4:])
        lat = _deg_min(parts[2], parts[3], "N", "S", 2)
        lon = _deg_min(parts[4], parts[5], "E", "W", 3)
        quality = int(parts[6])
        nsat = int(parts[7]) if parts[7] else 0
        hdop = float(parts[8]) if parts[8] else float("nan")
        alt = float(parts[9])
        sep = float(parts[11]) if parts[11] else 0.0
    except (ValueError, IndexError) as exc:
        if isinstance(exc, MalformedField):
            raise
        raise MalformedField(f"unparseable GGA field: {exc}") from None
    if quality < 0 or nsat < 0:
        raise MalformedField("negative fix quality or satellite count")
    try:
        pos = GeodeticPosition(lat, lon, alt)
    except ValueError as exc:
        raise MalformedField(str(exc)) from None
    return GgaFix(utc, pos, quality, nsat, hdop, sep)


def read_gga_stream(lines: Iterable[str]) -> List[GgaFix]:
    """Collect GGA fixes from a mixed NMEA stream; other sentence types are skipped."""
    fixes = []
    for lineno, line in enumerate(lines, 1):
        if not line.strip():
            continue
        try:
            fixes.append(parse_nmea_gga(line))
        except NotGga:
            continue
        except (BadChecksum, MalformedField) as exc:
            raise type(exc)(exc.message, line=lineno) from None
    return fixes


def parse_motion_csv(text: str):
    """Rows of ``t,x,y,z`` at 0.1 s cadence starting at 0 -> list of (t, EcefPosition)."""
    out = []
    for rowno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        cols = line.split(",")
        if len(cols) != 4:
            raise MalformedRow(f"expected 4 columns, got {len(cols)}", line=rowno)
        try:
            t, x, y, z = (float(c) for c in cols)
        except ValueError:
            raise MalformedRow(f"non-numeric value in {line.strip()!r}", line=rowno) from None
        k = len(out)
        if abs(t - k * STEP) > _CADENCE_TOL:
            raise NonUniformCadence(f"t={t} where {k * STEP:.1f} expected", line=rowno)
        out.append((t, EcefPosition(x, y, z)))
    if not out:
        raise MalformedRow("no rows")
    return out


def densify_waypoints(waypoints: Sequence[GeodeticPosition], speed: float) -> List[TrajectorySample]:
    """Drive a waypoint polyline at ``speed`` and sample it at 10 Hz.

    Each leg takes a whole number of 0.1 s steps (its duration rounded up),
    so every waypoint lands on a sample and the sampled path length equals
    the polyline length.
    """
    if len(waypoints) < 2:
        raise DegeneratePath("need at least two waypoints")
    if not speed > 0:
        raise ValueError("speed must be positive")
    pts = np.array([np.asarray(geodetic_to_ecef(w)) for w in waypoints])
    legs = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    if legs.sum() == 0.0:
        raise DegeneratePath("waypoints enclose zero path length")
    positions = [pts[0]]
    for a, b, length in zip(pts[:-1], pts[1:], legs):
        if length == 0.0:
            continue
        n = max(1, math.ceil(length / (speed * STEP) - 1e-9))
        frac = np.arange(1, n + 1)[:, None] / n
        positions.extend(a + frac * (b - a))
    positions = np.array(positions)
    times = grid(len(positions) - 1)
    return [TrajectorySample(float(t), EcefPosition.of(p)) for t, p in zip(times, positions)]


def _from_samples(mode: str, start: GpsTime, samples) -> Scenario:
    times = np.array([s.t for s in samples], dtype=float)
    pos = np.array([np.asarray(s.pos) for s in samples], dtype=float)
    check_trajectory(times, pos)
    if len(times) < 2:
        raise TrajectoryError("scenario duration must be positive")
    return Scenario(mode, start, times, pos)


def static_scenario(pos: GeodeticPosition, start: GpsTime, duration: float) -> Scenario:
    if not duration > 0:
        raise ValueError("duration must be positive")
    n = math.ceil(round(duration * RATE_HZ, 6))
    times = grid(n)
    xyz = np.array(llh_to_xyz(pos.lat, pos.lon, pos.alt), dtype=float)
    return Scenario("static", start, times, np.tile(xyz, (len(times), 1)))


def waypoint_scenario(waypoints, speed: float, start: GpsTime) -> Scenario:
    return _from_samples("dynamic", start, densify_waypoints(waypoints, speed))


def csv_scenario(rows, start: GpsTime) -> Scenario:
    samples = [TrajectorySample(t, p) for t, p in rows]
    return _from_samples("dynamic", start, samples)


def scenario_from_gga(fixes: Sequence[GgaFix], start: GpsTime) -> Scenario:
    """Interpolate GGA fixes to 10 Hz; the first fix defines t=0."""
    if len(fixes) < 2:
        raise InsufficientFixes(f"need at least two GGA fixes, got {len(fixes)}")
    rel = []
    day = 0.0
    prev = fixes[0].utc
    for f in fixes:
        if f.utc < prev - 43200.0:  # midnight wrap
            day += 86400.0
        prev = f.utc
        rel.append(round(f.utc + day - fixes[0].utc, 6))
    rel = np.array(rel)
    if np.any(np.diff(rel) <= 0):
        raise NonMonotonicTime("GGA times must strictly increase")
    lat = np.array([f.position.lat for f in fixes])
    lon = np.array([f.position.lon for f in fixes])
    h = np.array([f.ellipsoid_height for f in fixes])
    xyz = np.column_stack(llh_to_xyz(lat, lon, h))
    n = int(math.floor(round(rel[-1] * RATE_HZ, 6)))
    if n < 1:
        raise InsufficientFixes("GGA fixes span less than one 0.1 s step")
    times = grid(n)
    pos = np.column_stack([np.interp(times, rel, xyz[:, k]) for k in range(3)])
    check_trajectory(times, pos)
    return Scenario("dynamic", start, times, pos)


def read_waypoints(text: str) -> List[GeodeticPosition]:
    """One ``lat,lon,alt`` per line; '#' starts a comment."""
    out = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            out.append(GeodeticPosition.parse(line))
        except ValueError as exc:
            raise MalformedRow(str(exc), line=lineno) from None
    return out
