"""UTC second timestamps and their on-disk ISO-8601 form.

All persisted timestamps are integer UTC seconds rendered as
``YYYY-MM-DDTHH:MM:SSZ``; 1-second granularity is the storage contract.
"""

from __future__ import annotations

import time
from datetime import datetime, timezone

_ISO_FMT = "%Y-%m-%dT%H:%M:%SZ"


def utc_now() -> int:
    return int(time.time())


def iso_z(ts: int) -> str:
    return datetime.fromtimestamp(ts, tz=timezone.utc).strftime(_ISO_FMT)


def parse_iso_z(text: str) -> int:
    dt = datetime.strptime(text, _ISO_FMT).replace(tzinfo=timezone.utc)
    return int(dt.timestamp())
