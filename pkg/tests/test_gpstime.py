import datetime as dt

import pytest

from spoofsim.gpstime import GpsTime


def test_epoch_is_week_zero():
    assert GpsTime.parse("1980-01-06T00:00:00Z") == GpsTime(0, 0.0)


def test_parse_known_week():
    # 2021-03-19 is a Friday of GPS week 2149
    t = GpsTime.parse("2021-03-19T12:00:00Z")
    assert (t.week, t.sow) == (2149, 5 * 86400 + 12 * 3600)


def test_add_crosses_week():
    t = GpsTime(2149, 604799.0) + 2.0
    assert (t.week, t.sow) == (2150, 1.0)


def test_roundtrip_datetime():
    when = dt.datetime(2022, 6, 10, 7, 30, 15, tzinfo=dt.timezone.utc)
    assert GpsTime.from_datetime(when).to_datetime() == when


def test_bad_text():
    with pytest.raises(ValueError):
        GpsTime.parse("10/06/2022")
