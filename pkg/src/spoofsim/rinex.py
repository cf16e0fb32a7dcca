"""RINEX 2.10/2.11 GPS navigation files and broadcast-ephemeris naming."""
from __future__ import annotations

import datetime as _dt
import math
from dataclasses import dataclass, fields
from typing import Iterable, Optional

from .errors import MalformedHeader, MalformedRecord, NoEphemeris, Unhealthy, UnsupportedVersion
from .gpstime import SECONDS_PER_WEEK, GpsTime, as_seconds

VALIDITY_WINDOW = 7200.0

# Broadcast orbit lines 1..7, four 19-column fields each (line 7 has two).
ORBIT_FIELDS = (
    ("iode", "crs", "delta_n", "m0"),
    ("cuc", "e", "cus", "sqrt_a"),
    ("toe", "cic", "omega0", "cis"),
    ("i0", "crc", "omega", "omega_dot"),
    ("idot", "codes_l2", "week", "l2p_flag"),
    ("sv_accuracy", "health", "tgd", "iodc"),
    ("transmit_time", "fit_interval"),
)
_INT_FIELDS = {"iode", "iodc", "week", "health", "codes_l2", "l2p_flag"}


@dataclass(frozen=True)
class IonoParameters:
    alpha: tuple
    beta: tuple

    def __post_init__(self):
        if len(self.alpha) != 4 or len(self.beta) != 4:
            raise ValueError("Klobuchar model needs four alpha and four beta terms")
        if not all(math.isfinite(v) for v in (*self.alpha, *self.beta)):
            raise ValueError("non-finite Klobuchar coefficient")


@dataclass(frozen=True)
class EphemerisRecord:
    prn: int
    toc: GpsTime
    af0: float
    af1: float
    af2: float
    iode: int
    crs: float
    delta_n: float
    m0: float
    cuc: float
    e: float
    cus: float
    sqrt_a: float
    toe: float
    cic: float
    omega0: float
    cis: float
    i0: float
    crc: float
    omega: float
    omega_dot: float
    idot: float
    codes_l2: int
    week: int
    l2p_flag: int
    sv_accuracy: float
    health: int
    tgd: float
    iodc: int
    transmit_time: float
    fit_interval: float = 0.0

    @property
    def toe_total(self) -> float:
        """toe in continuous GPS seconds."""
        return self.week * SECONDS_PER_WEEK + self.toe

    @property
    def healthy(self) -> bool:
        return self.health == 0

    def check(self):
        """Raise ValueError if a field invariant is violated."""
        if not 1 <= self.prn <= 32:
            raise ValueError(f"prn {self.prn} outside 1..32")
        if not 0 <= self.e < 0.1:
            raise ValueError(f"eccentricity {self.e} outside [0, 0.1)")
        if not 5000 <= self.sqrt_a <= 5200:
            raise ValueError(f"sqrt_a {self.sqrt_a} outside the MEO band")
        if not 0 <= self.toe < SECONDS_PER_WEEK:
            raise ValueError(f"toe {self.toe} outside the week")


def _to_float(text: str, lineno: int, what: str) -> float:
    s = text.strip()
    if not s:
        raise MalformedRecord(f"blank numeric field ({what})", line=lineno)
    try:
        return float(s.replace("D", "E").replace("d", "e"))
    except ValueError:
        raise MalformedRecord(f"unparseable number {s!r} ({what})", line=lineno) from None


def _slice_fields(line: str, start: int, count: int):
    return [line[start + 19 * k:start + 19 * (k + 1)] for k in range(count)]


def _parse_header(lines):
    iono_alpha = iono_beta = None
    version = None
    for idx, line in enumerate(lines):
        label = line[60:].strip()
        if label == "RINEX VERSION / TYPE":
            try:
                version = float(line[:9])
            except ValueError:
                raise MalformedHeader("unreadable RINEX version", line=idx + 1) from None
            if not 2.0 <= version < 3.0:
                raise UnsupportedVersion(f"RINEX version {version} (only 2.10/2.11 supported)",
                                         line=idx + 1)
            ftype = line[20:21].upper()
            if ftype != "N":
                raise UnsupportedVersion(f"file type {ftype!r} is not GPS navigation",
                                         line=idx + 1)
        elif label in ("ION ALPHA", "ION BETA"):
            vals = tuple(_to_float(line[2 + 12 * k:14 + 12 * k], idx + 1, label) for k in range(4))
            if label == "ION ALPHA":
                iono_alpha = vals
            else:
                iono_beta = vals
        elif label == "END OF HEADER":
            if version is None:
                raise MalformedHeader("missing RINEX VERSION / TYPE", line=idx + 1)
            iono = None
            if iono_alpha is not None and iono_beta is not None:
                iono = IonoParameters(iono_alpha, iono_beta)
            return iono, idx + 1
    raise MalformedHeader("missing END OF HEADER")


def _parse_block(block, first_lineno: int) -> EphemerisRecord:
    head = block[0]
    try:
        prn = int(head[0:2])
        yy, month, day, hour, minute = (int(head[p:p + 3]) for p in (2, 5, 8, 11, 14))
        second = float(head[17:22])
    except ValueError:
        raise MalformedRecord("bad PRN/epoch", line=first_lineno) from None
    year = yy + (2000 if yy < 80 else 1900)
    try:
        epoch = _dt.datetime(year, month, day, hour, minute) + _dt.timedelta(seconds=second)
    except ValueError:
        raise MalformedRecord("invalid epoch", line=first_lineno) from None

    values = {}
    for name, text in zip(("af0", "af1", "af2"), _slice_fields(head, 22, 3)):
        values[name] = _to_float(text, first_lineno, name)
    for k, names in enumerate(ORBIT_FIELDS):
        lineno = first_lineno + k + 1
        line = block[k + 1]
        for name, text in zip(names, _slice_fields(line, 3, len(names))):
            if name == "fit_interval" and not text.strip():
                values[name] = 0.0  # optional in practice; 0 means the 4 h default
                continue
            values[name] = _to_float(text, lineno, name)

    for name in _INT_FIELDS:
        v = values[name]
        if v != int(v):
            raise MalformedRecord(f"{name} must be integral, got {v}", line=first_lineno)
        values[name] = int(v)
    rec = EphemerisRecord(prn=prn, toc=GpsTime.from_datetime(epoch), **values)
    try:
        rec.check()
    except ValueError as exc:
        raise MalformedRecord(str(exc), line=first_lineno) from None
    return rec


def parse_rinex_nav(text: str, source: Optional[str] = None):
    """Parse RINEX 2.x GPS navigation text.

    Returns ``(iono, records)`` where ``iono`` is None when the header carries
    no ION ALPHA/ION BETA lines. Records keep file order.
    """
    lines = text.splitlines()
    try:
        iono, body_start = _parse_header(lines)
        records = []
        i = body_start
        while i < len(lines):
            if not lines[i].strip():
                i += 1
                continue
            block = lines[i:i + 8]
            if len(block) < 8:
                raise MalformedRecord(f"truncated record ({len(block)} of 8 lines)", line=i + 1)
            records.append(_parse_block(block, i + 1))
            i += 8
    except (MalformedHeader, MalformedRecord, UnsupportedVersion) as exc:
        if source is not None and exc.source is None:
            raise type(exc)(exc.message, line=exc.line, source=source) from None
        raise
    return iono, records


def read_rinex_nav(path):
    with open(path, "r", encoding="ascii", errors="replace") as fh:
        return parse_rinex_nav(fh.read(), source=str(path))


def _fortran(x: float, digits: int = 12) -> str:
    """Fortran Dw.d field with a leading zero, e.g. ' 0.475200000000D+06'."""
    if x == 0:
        return " 0." + "0" * digits + "D+00"
    mant, exp = f"{x:.{digits - 1}E}".split("E")
    sign = "-" if mant.startswith("-") else " "
    body = mant.lstrip("-").replace(".", "")
    e = int(exp) + 1
    return f"{sign}0.{body}D{'+' if e >= 0 else '-'}{abs(e):02d}"


def format_record(rec: EphemerisRecord) -> str:
    """Serialize a record back to its 8-line RINEX 2.11 layout."""
    t = rec.toc.to_datetime()
    sec = t.second + t.microsecond * 1e-6
    head = (f"{rec.prn:2d} {t.year % 100:02d} {t.month:2d} {t.day:2d} {t.hour:2d} {t.minute:2d}"
            f"{sec:5.1f}" + "".join(_fortran(getattr(rec, n)) for n in ("af0", "af1", "af2")))
    out = [head]
    for names in ORBIT_FIELDS:
        out.append("   " + "".join(_fortran(float(getattr(rec, n))) for n in names))
    return "\n".join(out)


def format_rinex_nav(records: Iterable[EphemerisRecord], iono: Optional[IonoParameters] = None) -> str:
    def d124(x):
        return _fortran(x, 4)

    hdr = [f"{'2.11':>9}{'':11}{'N: GPS NAV DATA':<40}RINEX VERSION / TYPE"]
    if iono is not None:
        hdr.append("  " + "".join(d124(v).rjust(12) for v in iono.alpha) + " " * 10 + "ION ALPHA")
        hdr.append("  " + "".join(d124(v).rjust(12) for v in iono.beta) + " " * 10 + "ION BETA")
    hdr.append(f"{'':60}END OF HEADER")
    return "\n".join(hdr + [format_record(r) for r in records]) + "\n"


def brdc_filename(date: _dt.date) -> str:
    """Daily broadcast ephemeris product name, e.g. 2022-06-10 -> brdc1610.22n."""
    doy = date.timetuple().tm_yday
    return f"brdc{doy:03d}0.{date.year % 100:02d}n"


def select_ephemeris(records, prn: int, t) -> EphemerisRecord:
    """Healthy record for ``prn`` with toe nearest ``t`` inside +-7200 s.

    Ties go to the earlier toe. Raises Unhealthy when only unhealthy
    records cover ``t`` so callers can choose to override.
    """
    ts = as_seconds(t)
    best = None
    unhealthy_seen = False
    for rec in records:
        if rec.prn != prn:
            continue
        dt = abs(rec.toe_total - ts)
        if dt > VALIDITY_WINDOW:
            continue
        if not rec.healthy:
            unhealthy_seen = True
            continue
        key = (dt, rec.toe_total)
        if best is None or key < best[0]:
            best = (key, rec)
    if best is not None:
        return best[1]
    if unhealthy_seen:
        raise Unhealthy(f"PRN {prn}: only unhealthy ephemerides near t={ts:.0f}")
    raise NoEphemeris(f"PRN {prn}: no ephemeris within {VALIDITY_WINDOW:.0f} s of t={ts:.0f}")


def record_fields():
    """Names of the numeric fields carried by a record (excludes prn/toc)."""
    return [f.name for f in fields(EphemerisRecord) if f.name not in ("prn", "toc")]
