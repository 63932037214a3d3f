"""
Mutable network under construction.

Sources (GTFS feeds, the synthetic generator, edge synthesis) add stations
and events here; ``build`` compresses the departure lists and produces the
immutable Network. Output order is deterministic for identical input.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Set, Tuple

from ..core.errors import ValidationError
from ..core.geo import check_coordinates, great_circle_m
from ..core.models.departures import encode_departures
from ..core.models.hop import Hop, Mode
from ..core.models.network import Network
from ..core.models.station import Station
from ..core.timezones import UTC, UtcOffsetSchedule

logger = logging.getLogger(__name__)


@dataclass
class _StationDraft:
    name: str
    lat: float
    lon: float
    tz_index: int = 0
    code: str = ""


@dataclass
class _RouteDraft:
    name: str = ""
    agency: str = ""


@dataclass
class _HopDraft:
    from_station: int
    to_station: int
    route: int
    mode: Mode
    # dep_utc -> duration; duplicate departures keep the shortest duration
    events: Dict[int, int] = field(default_factory=dict)
    fixed_duration_seconds: Optional[int] = None
    route_distance_m: float = 0.0
    fare_estimate: Optional[float] = None

    @property
    def scheduled(self) -> bool:
        return self.fixed_duration_seconds is None


class NetworkBuilder:
    """Accumulates stations, routes and hops from one or more sources"""

    def __init__(self):
        self._stations: List[_StationDraft] = []
        self._station_keys: Dict[str, int] = {}
        self._routes: List[_RouteDraft] = []
        self._route_keys: Dict[str, int] = {}
        self._hops: Dict[Tuple[int, int, int, Mode], _HopDraft] = {}
        self._unscheduled: Set[Tuple[int, int, Mode]] = set()
        self._timezones: List[UtcOffsetSchedule] = [UTC]
        self.transfer_overrides: Dict[int, int] = {}
        self._horizon: Optional[Tuple[int, int]] = None
        self.error_count = 0

    # ------------------------------------------------------------------
    # Stations and routes
    # ------------------------------------------------------------------
    @property
    def station_count(self) -> int:
        return len(self._stations)

    @property
    def hop_count(self) -> int:
        return len(self._hops)

    def add_timezone(self, schedule: UtcOffsetSchedule) -> int:
        """Index of an offset schedule, registering it when new"""
        for index, existing in enumerate(self._timezones):
            if existing == schedule:
                return index
        self._timezones.append(schedule)
        return len(self._timezones) - 1

    def add_station(self, name: str, lat: float, lon: float, tz_index: int = 0,
                    code: str = "", key: Optional[str] = None) -> int:
        """Add a station and return its id; a known key returns the existing id"""
        if key is not None and key in self._station_keys:
            return self._station_keys[key]
        check_coordinates(lat, lon)
        if not 0 <= tz_index < len(self._timezones):
            raise ValidationError(f"Unknown offset schedule index {tz_index}")
        self._stations.append(_StationDraft(name, float(lat), float(lon), tz_index, code))
        station_id = len(self._stations) - 1
        if key is not None:
            self._station_keys[key] = station_id
        return station_id

    def station_id(self, key: str) -> Optional[int]:
        return self._station_keys.get(key)

    def station_coords(self, station: int) -> Tuple[float, float]:
        draft = self._stations[station]
        return (draft.lat, draft.lon)

    def add_route(self, key: str, name: str = "", agency: str = "") -> int:
        if key in self._route_keys:
            return self._route_keys[key]
        self._routes.append(_RouteDraft(name, agency))
        self._route_keys[key] = len(self._routes) - 1
        return self._route_keys[key]

    # ------------------------------------------------------------------
    # Hops
    # ------------------------------------------------------------------
    def _check_endpoints(self, from_station: int, to_station: int):
        for station in (from_station, to_station):
            if not 0 <= station < len(self._stations):
                raise ValidationError(f"Unknown station id {station}")
        if from_station == to_station:
            raise ValidationError(f"Hop from station {from_station} to itself")

    def add_events(self, route: int, from_station: int, to_station: int, mode: Mode,
                   events: Iterable[Tuple[int, int]], route_distance_m: float = 0.0):
        """Add scheduled (dep_utc, duration) events to the hop keyed by route and stop pair"""
        self._check_endpoints(from_station, to_station)
        key = (route, from_station, to_station, mode)
        draft = self._hops.get(key)
        if draft is None:
            draft = _HopDraft(from_station, to_station, route, mode)
            self._hops[key] = draft
        elif not draft.scheduled:
            raise ValidationError(f"Hop {key} is unscheduled")
        draft.route_distance_m = max(draft.route_distance_m, route_distance_m)
        for dep, duration in events:
            if duration <= 0:
                raise ValidationError(f"Non-positive duration {duration} on hop {from_station}->{to_station}")
            current = draft.events.get(dep)
            if current is None or duration < current:
                draft.events[dep] = duration

    def has_unscheduled(self, from_station: int, to_station: int, mode: Mode) -> bool:
        return (from_station, to_station, mode) in self._unscheduled

    def add_unscheduled(self, from_station: int, to_station: int, mode: Mode, duration_seconds: int,
                        route_distance_m: float = 0.0, fare_estimate: Optional[float] = None,
                        route: Optional[int] = None) -> bool:
        """Add a walk/taxi/bicycle hop; returns False when one already exists"""
        self._check_endpoints(from_station, to_station)
        if mode.scheduled_by_default:
            raise ValidationError(f"Mode {mode.label} needs a schedule")
        if route is None:
            route = self.add_route(f"__{mode.label}__", mode.label)
        key = (route, from_station, to_station, mode)
        if key in self._hops or self.has_unscheduled(from_station, to_station, mode):
            return False
        self._unscheduled.add((from_station, to_station, mode))
        self._hops[key] = _HopDraft(from_station, to_station, route, mode,
                                    fixed_duration_seconds=max(1, int(duration_seconds)),
                                    route_distance_m=route_distance_m, fare_estimate=fare_estimate)
        return True

    def set_transfer_override(self, station: int, seconds: int):
        if seconds < 0:
            raise ValidationError(f"Negative transfer time at station {station}")
        self.transfer_overrides[station] = int(seconds)

    def extend_horizon(self, t_begin: int, t_end: int):
        if t_begin > t_end:
            raise ValidationError("Horizon start after end")
        if self._horizon is None:
            self._horizon = (t_begin, t_end)
        else:
            self._horizon = (min(self._horizon[0], t_begin), max(self._horizon[1], t_end))

    def degrees(self) -> List[int]:
        """Hop degree (in + out) of every station"""
        counts = [0] * len(self._stations)
        for draft in self._hops.values():
            counts[draft.from_station] += 1
            counts[draft.to_station] += 1
        return counts

    # ------------------------------------------------------------------
    # Merge and conversion
    # ------------------------------------------------------------------
    def merge(self, other: 'NetworkBuilder') -> 'NetworkBuilder':
        """Append another partial network, re-indexing its stations and routes"""
        tz_map = [self.add_timezone(tz) for tz in other._timezones]
        reverse_keys = {v: k for k, v in other._station_keys.items()}
        station_map = []
        for index, draft in enumerate(other._stations):
            key = reverse_keys.get(index)
            station_map.append(self.add_station(draft.name, draft.lat, draft.lon, tz_map[draft.tz_index],
                                                draft.code, key=key))
        route_keys = {v: k for k, v in other._route_keys.items()}
        route_map = [self.add_route(route_keys.get(i, f"__merged_{len(self._routes)}__"), r.name, r.agency)
                     for i, r in enumerate(other._routes)]
        for draft in other._hops.values():
            a, b, route = station_map[draft.from_station], station_map[draft.to_station], route_map[draft.route]
            if draft.scheduled:
                self.add_events(route, a, b, draft.mode, draft.events.items(), draft.route_distance_m)
            else:
                self.add_unscheduled(a, b, draft.mode, draft.fixed_duration_seconds,
                                     draft.route_distance_m, draft.fare_estimate, route)
        for station, seconds in other.transfer_overrides.items():
            self.set_transfer_override(station_map[station], seconds)
        if other._horizon is not None:
            self.extend_horizon(*other._horizon)
        self.error_count += other.error_count
        return self

    @classmethod
    def from_network(cls, network: Network) -> 'NetworkBuilder':
        """Editable copy of an immutable network"""
        builder = cls()
        builder._timezones = list(network.timezones)
        for station in network.stations:
            builder.add_station(station.name, station.lat, station.lon, station.tz_index,
                                station.code)
        route_meta: Dict[int, _RouteDraft] = {}
        for hop in network.hops:
            route_meta.setdefault(hop.route_id, _RouteDraft(hop.route_name, hop.agency))
        for route_id in range(max(route_meta, default=-1) + 1):
            meta = route_meta.get(route_id, _RouteDraft())
            builder.add_route(f"__route_{route_id}__", meta.name, meta.agency)
        for hop in network.hops:
            if hop.scheduled:
                builder.add_events(hop.route_id, hop.from_station, hop.to_station, hop.mode,
                                   hop.departures.decode(), hop.route_distance_m)
            else:
                builder.add_unscheduled(hop.from_station, hop.to_station, hop.mode,
                                        hop.fixed_duration_seconds, hop.route_distance_m,
                                        hop.fare_estimate, hop.route_id)
        builder.transfer_overrides = dict(network.transfer_overrides)
        builder._horizon = network.horizon
        return builder

    def build(self) -> Network:
        """Compress departure lists and freeze the network"""
        stations = [Station(i, d.name, d.lat, d.lon, d.tz_index, None, d.code)
                    for i, d in enumerate(self._stations)]
        hops: List[Hop] = []
        t_begin = self._horizon[0] if self._horizon else None
        t_end = self._horizon[1] if self._horizon else None

        ordered = sorted(self._hops.values(),
                         key=lambda h: (h.from_station, h.to_station, h.route, h.mode.letter))
        for draft in ordered:
            geodesic = great_circle_m(stations[draft.from_station].coords, stations[draft.to_station].coords)
            distance = max(draft.route_distance_m, geodesic)
            route = self._routes[draft.route] if draft.route < len(self._routes) else _RouteDraft()
            if draft.scheduled:
                if not draft.events:
                    continue
                events = sorted(draft.events.items())
                t_begin = events[0][0] if t_begin is None else min(t_begin, events[0][0])
                t_end = events[-1][0] + 1 if t_end is None else max(t_end, events[-1][0] + 1)
                hops.append(Hop(len(hops), draft.from_station, draft.to_station, draft.route, draft.mode,
                                departures=encode_departures(events), route_distance_m=distance,
                                route_name=route.name, agency=route.agency,
                                fare_estimate=draft.fare_estimate))
            else:
                hops.append(Hop(len(hops), draft.from_station, draft.to_station, draft.route, draft.mode,
                                fixed_duration_seconds=draft.fixed_duration_seconds,
                                route_distance_m=distance, route_name=route.name, agency=route.agency,
                                fare_estimate=draft.fare_estimate))

        horizon = (t_begin or 0, t_end or 0)
        network = Network(stations, hops, horizon, self.transfer_overrides, self._timezones)
        logger.info("Built network: %d stations, %d hops, %d events",
                    network.station_count, network.hop_count, network.event_count)
        return network
