"""
Hop model: a directed edge carrying one service between two stations
"""
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Iterator, List, Optional

from ..errors import ContractViolation, ValidationError
from .departures import Block, DepartureList, Event


class Mode(Enum):
    """Transport modes; the letter is the compact trip-signature code"""
    BUS = 'B'
    TRAIN = 'T'
    PLANE = 'P'
    WALK = 'W'
    TAXI = 'X'
    BICYCLE = 'C'

    @property
    def letter(self) -> str:
        return self.value

    @property
    def label(self) -> str:
        return self.name.lower()

    @property
    def scheduled_by_default(self) -> bool:
        return self in (Mode.BUS, Mode.TRAIN, Mode.PLANE)

    @classmethod
    def from_label(cls, label: str) -> 'Mode':
        try:
            return cls[label.upper()]
        except KeyError:
            raise ValidationError(f"Unknown mode '{label}'")


UNSCHEDULED_MODES = (Mode.WALK, Mode.TAXI, Mode.BICYCLE)


@dataclass(frozen=True)
class Hop:
    """
    A directed connection between two stations.

    Scheduled hops carry departures; unscheduled ones (walk, taxi, bicycle)
    carry a fixed duration instead.
    """
    id: int
    from_station: int
    to_station: int
    route_id: int
    mode: Mode
    departures: Optional[DepartureList] = None
    fixed_duration_seconds: Optional[int] = None
    route_distance_m: float = 0.0
    route_name: str = ""
    agency: str = ""
    fare_estimate: Optional[float] = None

    def __post_init__(self):
        if self.from_station == self.to_station:
            raise ValidationError(f"Hop {self.id} starts and ends at station {self.from_station}")
        if (self.departures is None) == (self.fixed_duration_seconds is None):
            raise ValidationError(f"Hop {self.id} must have exactly one of departures or fixed duration")
        if self.fixed_duration_seconds is not None and self.fixed_duration_seconds <= 0:
            raise ValidationError(f"Hop {self.id} has non-positive duration")
        if self.route_distance_m < 0:
            raise ValidationError(f"Hop {self.id} has negative route distance")

    @property
    def scheduled(self) -> bool:
        return self.departures is not None

    def _require_scheduled(self):
        if self.departures is None:
            raise ContractViolation(f"Hop {self.id} ({self.mode.label}) has no schedule")

    def next_event_at_or_after(self, t: int) -> Optional[Event]:
        """Earliest event with dep >= t, or None past the last departure"""
        self._require_scheduled()
        for ordinal, dep, duration in self.departures.iter_from(t):
            return Event(dep, dep + duration, self.id, ordinal)
        return None

    def events_in_window(self, t0: int, t1: int) -> List[Event]:
        """All events with t0 <= dep < t1, ascending"""
        if t0 > t1:
            raise ValidationError(f"Window start {t0} after end {t1}")
        return list(self.iter_events(t0, t1))

    def iter_events(self, t0: int, t1: Optional[int] = None) -> Iterator[Event]:
        """Lazily yield events with dep >= t0 (and dep < t1 when given)"""
        self._require_scheduled()
        for ordinal, dep, duration in self.departures.iter_from(t0):
            if t1 is not None and dep >= t1:
                return
            yield Event(dep, dep + duration, self.id, ordinal)

    def event(self, ordinal: int) -> Event:
        self._require_scheduled()
        dep, duration = self.departures.event_at(ordinal)
        return Event(dep, dep + duration, self.id, ordinal)

    def min_duration(self) -> int:
        """Minimum duration over all events, or the fixed duration"""
        if self.departures is None:
            return self.fixed_duration_seconds
        if self.departures.total_count == 0:
            raise ValidationError(f"Scheduled hop {self.id} has no departures")
        return self.departures.min_duration()

    @property
    def label(self) -> str:
        parts = [self.mode.label, self.route_name, self.agency]
        return " ".join(p for p in parts if p)

    def to_dict(self) -> Dict:
        """Convert hop to dictionary representation"""
        return {
            'id': self.id,
            'from_station': self.from_station,
            'to_station': self.to_station,
            'route_id': self.route_id,
            'mode': self.mode.name,
            'blocks': [list(b) for b in self.departures.blocks] if self.departures is not None else None,
            'fixed_duration_seconds': self.fixed_duration_seconds,
            'route_distance_m': self.route_distance_m,
            'route_name': self.route_name,
            'agency': self.agency,
            'fare_estimate': self.fare_estimate,
        }

    @classmethod
    def from_dict(cls, data: Dict) -> 'Hop':
        """Create hop from dictionary representation"""
        blocks = data.get('blocks')
        return cls(
            id=int(data['id']),
            from_station=int(data['from_station']),
            to_station=int(data['to_station']),
            route_id=int(data['route_id']),
            mode=Mode[data['mode']],
            departures=DepartureList([Block(*b) for b in blocks]) if blocks is not None else None,
            fixed_duration_seconds=data.get('fixed_duration_seconds'),
            route_distance_m=float(data.get('route_distance_m', 0.0)),
            route_name=data.get('route_name', ''),
            agency=data.get('agency', ''),
            fare_estimate=data.get('fare_estimate'),
        )
