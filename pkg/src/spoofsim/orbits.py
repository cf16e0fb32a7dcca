"""Broadcast-ephemeris orbit evaluation and signal propagation terms."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import BelowHorizon, MissingIono, NoConvergence, StaleEphemeris
from .geodesy import EcefPosition, GeodeticPosition, LookAngles, ecef_to_geodetic, look_angles
from .gpstime import SECONDS_PER_WEEK, as_seconds
from .rinex import VALIDITY_WINDOW, EphemerisRecord, IonoParameters

MU = 3.986005e14
OMEGA_E = 7.2921151467e-5
C = 299792458.0
F_REL = -4.442807633e-10
GPS_PI = 3.1415926535898
L1_FREQ = 1575.42e6
L1_WAVELENGTH = C / L1_FREQ

LIGHT_TIME_PASSES = 2
HORIZON_LIMIT = -5.0
TROPO_MIN_ELEVATION = 2.0
# transmit epochs precede a window-edge reception epoch by under 0.1 s
STALE_SLACK = 1.0


@dataclass(frozen=True)
class SatelliteState:
    pos: EcefPosition
    vel: tuple
    clock_bias: float
    clock_drift: float


@dataclass(frozen=True)
class PropagationDelays:
    """Pseudorange components for one satellite/receiver pair.

    ``geometric_range`` already includes the Earth-rotation correction
    (reported separately as ``sagnac``); ``tropo_delay`` is in metres,
    the remaining delays in seconds.
    """
    geometric_range: float
    iono_delay: float
    sat_clock: float
    tgd: float
    tropo_delay: float = 0.0
    sagnac: float = 0.0
    transit_time: float = 0.0
    elevation: float = 0.0
    azimuth: float = 0.0
    range_rate: float = 0.0
    clock_drift: float = 0.0

    @property
    def pseudorange(self) -> float:
        """L1 pseudorange in metres (single-frequency group delay applied)."""
        return (self.geometric_range + self.tropo_delay
                + C * (self.iono_delay - self.sat_clock + self.tgd))


def kepler_solve(m_anomaly, e, tol: float = 1e-14, max_iter: int = 30):
    """Solve E - e sin E = M for the eccentric anomaly (scalar or array)."""
    m = np.asarray(m_anomaly, dtype=float)
    e = np.asarray(e, dtype=float)
    big = m + e * np.sin(m)
    for _ in range(max_iter):
        f = big - e * np.sin(big) - m
        if np.all(np.abs(f) < tol):
            break
        big = big - f / (1.0 - e * np.cos(big))
    else:
        f = big - e * np.sin(big) - m
        if not np.all(np.abs(f) < tol):
            raise NoConvergence(f"Kepler iteration residual {np.max(np.abs(f)):.3e}")
    return float(big) if big.ndim == 0 else big


def sat_state(eph: EphemerisRecord, t) -> SatelliteState:
    """Satellite ECEF position/velocity and clock at GPS time ``t``."""
    ts = as_seconds(t)
    tk = ts - eph.toe_total
    if abs(tk) > VALIDITY_WINDOW + STALE_SLACK:
        raise StaleEphemeris(f"PRN {eph.prn}: |t - toe| = {abs(tk):.0f} s exceeds {VALIDITY_WINDOW:.0f} s")

    a = eph.sqrt_a ** 2
    n = math.sqrt(MU / a ** 3) + eph.delta_n
    mk = eph.m0 + n * tk
    ek = kepler_solve(mk, eph.e)
    sin_e, cos_e = math.sin(ek), math.cos(ek)
    ek_dot = n / (1.0 - eph.e * cos_e)
    root = math.sqrt(1.0 - eph.e ** 2)
    nu = math.atan2(root * sin_e, cos_e - eph.e)
    nu_dot = ek_dot * root / (1.0 - eph.e * cos_e)
    phi = nu + eph.omega
    s2, c2 = math.sin(2 * phi), math.cos(2 * phi)

    du = eph.cus * s2 + eph.cuc * c2
    dr = eph.crs * s2 + eph.crc * c2
    di = eph.cis * s2 + eph.cic * c2
    u = phi + du
    r = a * (1.0 - eph.e * cos_e) + dr
    inc = eph.i0 + di + eph.idot * tk

    u_dot = nu_dot * (1.0 + 2.0 * (eph.cus * c2 - eph.cuc * s2))
    r_dot = a * eph.e * sin_e * ek_dot + 2.0 * nu_dot * (eph.crs * c2 - eph.crc * s2)
    i_dot = eph.idot + 2.0 * nu_dot * (eph.cis * c2 - eph.cic * s2)

    xp, yp = r * math.cos(u), r * math.sin(u)
    xp_dot = r_dot * math.cos(u) - r * u_dot * math.sin(u)
    yp_dot = r_dot * math.sin(u) + r * u_dot * math.cos(u)

    omega_k = eph.omega0 + (eph.omega_dot - OMEGA_E) * tk - OMEGA_E * eph.toe
    om_dot = eph.omega_dot - OMEGA_E
    so, co = math.sin(omega_k), math.cos(omega_k)
    si, ci = math.sin(inc), math.cos(inc)

    x = xp * co - yp * ci * so
    y = xp * so + yp * ci * co
    z = yp * si
    vx = xp_dot * co - yp_dot * ci * so + yp * si * i_dot * so - y * om_dot
    vy = xp_dot * so + yp_dot * ci * co - yp * si * i_dot * co + x * om_dot
    vz = yp_dot * si + yp * ci * i_dot

    dt = ts - eph.toc.total
    rel = F_REL * eph.e * eph.sqrt_a * sin_e
    rel_dot = F_REL * eph.e * eph.sqrt_a * cos_e * ek_dot
    bias = eph.af0 + eph.af1 * dt + eph.af2 * dt * dt + rel
    drift = eph.af1 + 2.0 * eph.af2 * dt + rel_dot
    return SatelliteState(EcefPosition(x, y, z), (vx, vy, vz), bias, drift)


def klobuchar_delay(iono: Optional[IonoParameters], user: GeodeticPosition, look: LookAngles, t) -> float:
    """Single-frequency broadcast ionospheric delay at L1, in seconds."""
    if iono is None:
        raise MissingIono("no Klobuchar coefficients available")
    if look.elevation <= 0:
        raise BelowHorizon(f"elevation {look.elevation:.2f} deg")
    el = look.elevation / 180.0
    az = math.radians(look.azimuth)
    phi_u = user.lat / 180.0
    lam_u = user.lon / 180.0

    psi = 0.0137 / (el + 0.11) - 0.022
    phi_i = phi_u + psi * math.cos(az)
    phi_i = min(max(phi_i, -0.416), 0.416)
    lam_i = lam_u + psi * math.sin(az) / math.cos(phi_i * math.pi)
    phi_m = phi_i + 0.064 * math.cos((lam_i - 1.617) * math.pi)

    sod = as_seconds(t) % 86400.0
    t_local = (43200.0 * lam_i + sod) % 86400.0

    amp = sum(a * phi_m ** k for k, a in enumerate(iono.alpha))
    per = sum(b * phi_m ** k for k, b in enumerate(iono.beta))
    amp = max(amp, 0.0)
    per = max(per, 72000.0)
    x = 2.0 * math.pi * (t_local - 50400.0) / per
    obliquity = 1.0 + 16.0 * (0.53 - el) ** 3
    if abs(x) < 1.57:
        return obliquity * (5e-9 + amp * (1.0 - x * x / 2.0 + x ** 4 / 24.0))
    return obliquity * 5e-9


def tropo_delay(elevation_deg: float, height: float) -> float:
    """Zenith delay from a standard atmosphere scaled by a cosecant mapping, metres."""
    h = min(max(height, -500.0), 9000.0)
    zenith = 2.3 * math.exp(-0.116e-3 * h)
    el = max(elevation_deg, TROPO_MIN_ELEVATION)
    return zenith / math.sin(math.radians(el))


def _rotate_z(p, angle):
    c, s = math.cos(angle), math.sin(angle)
    return np.array([c * p[0] + s * p[1], -s * p[0] + c * p[1], p[2]])


def pseudorange(sat_eph: EphemerisRecord, user: EcefPosition, t_rx, iono: Optional[IonoParameters] = None,
                tropo: bool = True, user_vel=(0.0, 0.0, 0.0), check_horizon: bool = True) -> PropagationDelays:
    """Propagation terms for a signal received at ``t_rx`` by ``user``.

    Two light-time passes fix the transmit epoch; the satellite position
    is rotated into the ECEF frame of the reception epoch.
    """
    ts = as_seconds(t_rx)
    u = np.asarray(user, dtype=float)
    tau = 0.075
    for _ in range(LIGHT_TIME_PASSES):
        st = sat_state(sat_eph, ts - tau)
        p_sat = np.asarray(st.pos)
        p_rot = _rotate_z(p_sat, OMEGA_E * tau)
        rng = float(np.linalg.norm(p_rot - u))
        tau = rng / C
    sagnac = rng - float(np.linalg.norm(p_sat - u))

    look = look_angles(user, EcefPosition.of(p_rot))
    if check_horizon and look.elevation < HORIZON_LIMIT:
        raise BelowHorizon(f"PRN {sat_eph.prn} at {look.elevation:.1f} deg")
    los = (p_rot - u) / rng
    v_sat = _rotate_z(np.asarray(st.vel), OMEGA_E * tau)
    range_rate = float(los @ (v_sat - np.asarray(user_vel, dtype=float)))

    need_geo = iono is not None or tropo
    g = ecef_to_geodetic(user) if need_geo else None
    iono_s = 0.0
    if iono is not None and look.elevation > 0:
        iono_s = klobuchar_delay(iono, g, look, ts)
    tropo_m = tropo_delay(look.elevation, g.alt) if tropo else 0.0
    return PropagationDelays(
        geometric_range=rng, iono_delay=iono_s, sat_clock=st.clock_bias, tgd=sat_eph.tgd,
        tropo_delay=tropo_m, sagnac=sagnac, transit_time=tau, elevation=look.elevation,
        azimuth=look.azimuth, range_rate=range_rate, clock_drift=st.clock_drift)


def iono_or_warn(iono: Optional[IonoParameters], enabled: bool = True):
    """Return the coefficients to use, warning when they are unavailable."""
    if enabled and iono is None:
        warnings.warn("no ionospheric coefficients in the ephemeris header; iono delay disabled",
                      stacklevel=2)
    return iono if enabled else None


def visible(records, user: EcefPosition, t, mask_deg: float):
    """(record, PropagationDelays) for every PRN above ``mask_deg`` at ``t``, by elevation."""
    from .rinex import select_ephemeris
    from .errors import NoEphemeris

    out = []
    for prn in sorted({r.prn for r in records}):
        try:
            eph = select_ephemeris(records, prn, t)
        except NoEphemeris:
            continue
        d = pseudorange(eph, user, t, None, tropo=False, check_horizon=False)
        if d.elevation >= mask_deg:
            out.append((eph, d))
    out.sort(key=lambda pair: -pair[1].elevation)
    return out


__all__ = ["SatelliteState", "PropagationDelays", "kepler_solve", "sat_state", "klobuchar_delay",
           "tropo_delay", "pseudorange", "visible", "C", "L1_FREQ", "L1_WAVELENGTH", "OMEGA_E",
           "SECONDS_PER_WEEK"]
