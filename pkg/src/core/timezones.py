"""
Piecewise-constant UTC offsets supplied per feed.

The engine works in integer UTC seconds; offsets are only consulted at
ingest and when rendering local times.
"""
import bisect
import datetime as dt
from dataclasses import dataclass, field
from typing import Dict, List, Tuple

from .errors import ValidationError


@dataclass(frozen=True)
class UtcOffsetSchedule:
    """Base UTC offset plus ordered (switch_utc, new_offset) changes"""
    base_offset_seconds: int = 0
    switches: Tuple[Tuple[int, int], ...] = field(default_factory=tuple)

    def __post_init__(self):
        times = [t for t, _ in self.switches]
        if times != sorted(times) or len(set(times)) != len(times):
            raise ValidationError("DST switch times must be strictly ascending")
        for _, offset in self.switches:
            if abs(offset) > 14 * 3600:
                raise ValidationError(f"UTC offset out of range: {offset}")

    def offset_at(self, utc_seconds: int) -> int:
        """Offset in force at a UTC instant"""
        if not self.switches:
            return self.base_offset_seconds
        index = bisect.bisect_right([t for t, _ in self.switches], utc_seconds) - 1
        if index < 0:
            return self.base_offset_seconds
        return self.switches[index][1]

    def local_to_utc(self, local_seconds: int) -> int:
        """Convert naive local epoch seconds to UTC"""
        offset = self.offset_at(local_seconds - self.base_offset_seconds)
        utc = local_seconds - offset
        second = self.offset_at(utc)
        if second != offset:
            utc = local_seconds - second
        return utc

    def utc_to_local(self, utc_seconds: int) -> int:
        return utc_seconds + self.offset_at(utc_seconds)

    def to_dict(self) -> Dict:
        return {'base_offset_seconds': self.base_offset_seconds,
                'switches': [list(s) for s in self.switches]}

    @classmethod
    def from_dict(cls, data: Dict) -> 'UtcOffsetSchedule':
        return cls(base_offset_seconds=int(data.get('base_offset_seconds', 0)),
                   switches=tuple((int(t), int(o)) for t, o in data.get('switches', [])))


UTC = UtcOffsetSchedule()


def local_midnight_epoch(day: dt.date) -> int:
    """Naive local epoch seconds of a calendar day's midnight"""
    return int(dt.datetime(day.year, day.month, day.day, tzinfo=dt.timezone.utc).timestamp())


def local_datetime(utc_seconds: int, schedule: UtcOffsetSchedule) -> dt.datetime:
    """Naive local datetime for rendering"""
    return dt.datetime.fromtimestamp(schedule.utc_to_local(utc_seconds), tz=dt.timezone.utc).replace(tzinfo=None)


def parse_utc(text: str) -> int:
    """Parse ISO-8601 (assumed UTC when no offset is given) or raw epoch seconds"""
    text = text.strip()
    if text.lstrip('-').isdigit():
        return int(text)
    try:
        moment = dt.datetime.fromisoformat(text.replace('Z', '+00:00'))
    except ValueError as e:
        raise ValidationError(f"Not an ISO-8601 time: {text}") from e
    if moment.tzinfo is None:
        moment = moment.replace(tzinfo=dt.timezone.utc)
    return int(moment.timestamp())


def format_utc(utc_seconds: int) -> str:
    return dt.datetime.fromtimestamp(utc_seconds, tz=dt.timezone.utc).strftime('%Y-%m-%dT%H:%M:%SZ')
