"""GPS time as (week, seconds-of-week) with a continuous-seconds view.

Calendar strings are interpreted as GPS time directly; no leap-second
table is applied anywhere in this package.
"""
from __future__ import annotations

import datetime as _dt
import math
from dataclasses import dataclass

SECONDS_PER_WEEK = 604800
GPS_EPOCH = _dt.datetime(1980, 1, 6, tzinfo=_dt.timezone.utc)


@dataclass(frozen=True, order=True)
class GpsTime:
    week: int
    sow: float

    def __post_init__(self):
        if not 0 <= self.sow < SECONDS_PER_WEEK:
            raise ValueError(f"seconds-of-week out of range: {self.sow}")

    @property
    def total(self) -> float:
        """Continuous seconds since the GPS epoch."""
        return self.week * SECONDS_PER_WEEK + self.sow

    @classmethod
    def from_total(cls, seconds: float) -> "GpsTime":
        week = int(math.floor(seconds / SECONDS_PER_WEEK))
        sow = seconds - week * SECONDS_PER_WEEK
        if sow >= SECONDS_PER_WEEK:  # float edge
            week, sow = week + 1, 0.0
        return cls(week, sow)

    @classmethod
    def from_datetime(cls, when: _dt.datetime) -> "GpsTime":
        if when.tzinfo is None:
            when = when.replace(tzinfo=_dt.timezone.utc)
        delta = when - GPS_EPOCH
        return cls.from_total(delta.days * 86400 + delta.seconds + delta.microseconds * 1e-6)

    @classmethod
    def parse(cls, text: str) -> "GpsTime":
        """Parse ``YYYY-MM-DDThh:mm:ssZ`` (trailing Z optional)."""
        s = text.strip()
        if s.endswith("Z"):
            s = s[:-1]
        try:
            when = _dt.datetime.fromisoformat(s)
        except ValueError as exc:
            raise ValueError(f"bad time {text!r}, expected YYYY-MM-DDThh:mm:ssZ") from exc
        return cls.from_datetime(when)

    def to_datetime(self) -> _dt.datetime:
        return GPS_EPOCH + _dt.timedelta(seconds=self.total)

    def __add__(self, seconds: float) -> "GpsTime":
        return GpsTime.from_total(self.total + seconds)

    def __sub__(self, other):
        if isinstance(other, GpsTime):
            return self.total - other.total
        return GpsTime.from_total(self.total - other)

    def isoformat(self) -> str:
        return self.to_datetime().strftime("%Y-%m-%dT%H:%M:%S") + "Z"


def as_seconds(t) -> float:
    """Accept a GpsTime or continuous seconds."""
    return t.total if isinstance(t, GpsTime) else float(t)
