"""Date string to Unix seconds, as used by the ``seconds`` built-in.

Formats are tried in this order; the first that matches the whole
(whitespace-trimmed) string wins:

1. ISO 8601 / RFC 3339: ``2024-12-13T17:52:22.647Z``, ``2024-12-13 17:52``,
   optional seconds, optional fraction, optional ``Z`` or ``+hh:mm``.
2. RFC 1123: ``Fri, 13 Dec 2024 17:52:22 GMT`` (weekday optional).
3. ``2024-12-13`` (midnight).
4. ``December 13, 2024`` or ``Dec 13 2024`` (midnight).

Times without a zone are UTC.  Fractional seconds are dropped.
"""

from __future__ import annotations

import calendar
import re
from datetime import datetime, timedelta

_MONTHS = {
    m.lower(): i
    for i, m in enumerate(
        "January February March April May June July August September October November December".split(),
        start=1,
    )
}
_MONTHS.update({k[:3]: v for k, v in list(_MONTHS.items())})
_MONTHS["sept"] = 9

_ISO = re.compile(
    r"(\d{4})-(\d{2})-(\d{2})[Tt ](\d{2}):(\d{2})(?::(\d{2})(?:[.,](\d+))?)?"
    r"\s*(?:([Zz])|([+-])(\d{2}):?(\d{2}))?"
)
_RFC1123 = re.compile(
    r"(?:[A-Za-z]{3,9},?\s+)?(\d{1,2})\s+([A-Za-z]{3,9})\s+(\d{4})\s+"
    r"(\d{2}):(\d{2})(?::(\d{2}))?\s*(GMT|UTC|UT|Z|[+-]\d{4})?",
    re.IGNORECASE,
)
_DATE = re.compile(r"(\d{4})-(\d{2})-(\d{2})")
_MONTH_DAY_YEAR = re.compile(r"([A-Za-z]{3,9})\.?\s+(\d{1,2}),?\s+(\d{4})")


def _epoch(y, mo, d, h=0, mi=0, s=0, offset_minutes=0) -> str:
    dt = datetime(int(y), int(mo), int(d), int(h), int(mi), int(s))
    dt -= timedelta(minutes=offset_minutes)
    return str(calendar.timegm(dt.timetuple()))


def _iso(m) -> str:
    y, mo, d, h, mi, s, _frac, z, sign, oh, om = m.groups()
    offset = 0
    if sign:
        offset = int(oh) * 60 + int(om)
        if sign == "-":
            offset = -offset
    return _epoch(y, mo, d, h, mi, s or 0, offset)


def _rfc1123(m) -> str:
    d, mon, y, h, mi, s, zone = m.groups()
    month = _MONTHS.get(mon.lower())
    if month is None:
        raise ValueError(mon)
    offset = 0
    if zone and zone[0] in "+-":
        offset = int(zone[1:3]) * 60 + int(zone[3:5])
        if zone[0] == "-":
            offset = -offset
    return _epoch(y, month, d, h, mi, s or 0, offset)


def _date(m) -> str:
    return _epoch(*m.groups())


def _month_day_year(m) -> str:
    mon, d, y = m.groups()
    month = _MONTHS.get(mon.lower())
    if month is None:
        raise ValueError(mon)
    return _epoch(y, month, d)


_FORMATS = [(_ISO, _iso), (_RFC1123, _rfc1123), (_DATE, _date), (_MONTH_DAY_YEAR, _month_day_year)]


def seconds(s: str) -> str:
    """Decimal Unix seconds for ``s``, or "" when no format applies."""
    s = s.strip()
    for pattern, convert in _FORMATS:
        m = pattern.fullmatch(s)
        if m:
            try:
                return convert(m)
            except (ValueError, OverflowError):
                return ""
    return ""
