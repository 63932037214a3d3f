"""
GTFS feed loader.

Reads the text tables of a feed with pandas, expands service days over the
configured horizon and converts local times to UTC. Each (trip, stop pair)
contributes one event to the hop keyed by (route, stop pair).
"""
import datetime as dt
import logging
import os
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Set, Tuple

import pandas as pd

from ..core.errors import LoadError, ValidationError
from ..core.geo import great_circle_m
from ..core.interfaces.network_source import NetworkSource
from ..core.models.hop import Mode
from ..core.timezones import UtcOffsetSchedule, local_midnight_epoch
from .builder import NetworkBuilder

logger = logging.getLogger(__name__)

REQUIRED_GTFS_FILES = ['stops', 'routes', 'trips', 'stop_times', 'calendar']
OPTIONAL_GTFS_FILES = ['agency', 'calendar_dates', 'transfers', 'frequencies']

REQUIRED_COLUMNS = {
    'stops': ['stop_id', 'stop_name', 'stop_lat', 'stop_lon'],
    'routes': ['route_id', 'route_type'],
    'trips': ['route_id', 'service_id', 'trip_id'],
    'stop_times': ['trip_id', 'arrival_time', 'departure_time', 'stop_id', 'stop_sequence'],
    'calendar': ['service_id', 'monday', 'tuesday', 'wednesday', 'thursday', 'friday',
                 'saturday', 'sunday', 'start_date', 'end_date'],
    'calendar_dates': ['service_id', 'date', 'exception_type'],
    'transfers': ['from_stop_id', 'to_stop_id'],
    'frequencies': ['trip_id', 'start_time', 'end_time', 'headway_secs'],
}

WEEKDAYS = ['monday', 'tuesday', 'wednesday', 'thursday', 'friday', 'saturday', 'sunday']


@dataclass
class FeedConfig:
    """Where a feed lives and how its local times map to UTC"""
    path: str
    utc_offset_seconds: int = 0
    dst_rules: List[Tuple[int, int]] = field(default_factory=list)
    service_horizon_days: int = 14
    start_date: Optional[dt.date] = None
    name: str = ""
    connect_all_stop_pairs: bool = False
    max_direct_span: int = 0

    def __post_init__(self):
        if self.service_horizon_days < 1:
            raise ValidationError("service_horizon_days must be at least 1")
        if not self.name:
            self.name = os.path.basename(os.path.normpath(self.path))

    @property
    def schedule(self) -> UtcOffsetSchedule:
        return UtcOffsetSchedule(self.utc_offset_seconds, tuple(sorted(self.dst_rules)))

    @classmethod
    def parse(cls, text: str) -> 'FeedConfig':
        """
        Parse ``path[,key=value...]`` as given on the command line.

        Keys: offset (seconds), days, start (YYYYMMDD), name, all_pairs (0/1),
        span (stops), dst (switch_utc:offset, repeatable).
        """
        parts = [p.strip() for p in text.split(',') if p.strip()]
        if not parts:
            raise ValidationError("Empty feed specification")
        config = cls(parts[0])
        for item in parts[1:]:
            key, _, value = item.partition('=')
            try:
                if key == 'offset':
                    config.utc_offset_seconds = int(value)
                elif key == 'days':
                    config.service_horizon_days = int(value)
                elif key == 'start':
                    config.start_date = parse_gtfs_date(value)
                elif key == 'name':
                    config.name = value
                elif key == 'all_pairs':
                    config.connect_all_stop_pairs = value in ('1', 'true', 'yes')
                elif key == 'span':
                    config.max_direct_span = int(value)
                elif key == 'dst':
                    switch, _, offset = value.partition(':')
                    config.dst_rules.append((int(switch), int(offset)))
                else:
                    raise ValidationError(f"Unknown feed option '{key}'")
            except ValueError as e:
                raise ValidationError(f"Bad value for feed option '{key}': {value}") from e
        config.__post_init__()
        return config


def timestr_to_seconds(text: str) -> int:
    """'HH:MM:SS' to seconds after service-day midnight; hours may exceed 23"""
    hours, minutes, seconds = text.strip().split(':')
    return int(hours) * 3600 + int(minutes) * 60 + int(seconds)


def parse_gtfs_date(text: str) -> dt.date:
    return dt.datetime.strptime(text.strip(), '%Y%m%d').date()


def mode_for_route_type(route_type: str) -> Mode:
    """Map basic and extended GTFS route types to a mode"""
    try:
        code = int(route_type)
    except ValueError:
        return Mode.BUS
    if 1100 <= code <= 1199:
        return Mode.PLANE
    if code in (0, 1, 2, 5, 7, 12) or 100 <= code <= 199 or 400 <= code <= 499 or 900 <= code <= 999:
        return Mode.TRAIN
    return Mode.BUS


def _read_table(config: FeedConfig, name: str, required: bool) -> Optional[pd.DataFrame]:
    path = os.path.join(config.path, name + '.txt')
    if not os.path.isfile(path):
        if required:
            raise LoadError(f"Required GTFS file {name}.txt is missing", path=path)
        return None
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, encoding='utf-8-sig')
    except (OSError, ValueError, pd.errors.ParserError) as e:
        raise LoadError(f"Cannot parse {name}.txt: {e}", path=path) from e
    frame.columns = [c.strip() for c in frame.columns]
    missing = [c for c in REQUIRED_COLUMNS.get(name, []) if c not in frame.columns]
    if missing:
        raise LoadError(f"{name}.txt lacks columns {missing}", path=path)
    return frame.apply(lambda column: column.str.strip())


class _ServiceCalendar:
    """Active service ids per day of the horizon"""

    def __init__(self, calendar: pd.DataFrame, calendar_dates: Optional[pd.DataFrame],
                 days: Sequence[dt.date]):
        self.days = list(days)
        self.active: Dict[str, Set[dt.date]] = {}
        for row in calendar.itertuples(index=False):
            start, end = parse_gtfs_date(row.start_date), parse_gtfs_date(row.end_date)
            flags = [getattr(row, day) == '1' for day in WEEKDAYS]
            self.active[row.service_id] = {d for d in self.days if start <= d <= end and flags[d.weekday()]}
        if calendar_dates is not None:
            for row in calendar_dates.itertuples(index=False):
                day = parse_gtfs_date(row.date)
                dates = self.active.setdefault(row.service_id, set())
                if row.exception_type == '1' and day in self.days:
                    dates.add(day)
                elif row.exception_type == '2':
                    dates.discard(day)

    def days_for(self, service_id: str) -> List[dt.date]:
        return sorted(self.active.get(service_id, ()))


def _default_start(calendar: pd.DataFrame, calendar_dates: Optional[pd.DataFrame]) -> dt.date:
    dates = [parse_gtfs_date(d) for d in calendar['start_date']]
    if calendar_dates is not None:
        dates.extend(parse_gtfs_date(d) for d in calendar_dates['date'])
    if not dates:
        raise LoadError("Feed has no service dates")
    return min(dates)


def load_gtfs(config: FeedConfig) -> NetworkBuilder:
    """
    Load one GTFS feed into a partial network.

    Args:
        config: Feed location, UTC offsets and horizon

    Returns:
        NetworkBuilder holding the feed's stations, hops and transfer overrides;
        ``error_count`` counts skipped records
    """
    tables = {name: _read_table(config, name, True) for name in REQUIRED_GTFS_FILES}
    tables.update({name: _read_table(config, name, False) for name in OPTIONAL_GTFS_FILES})
    schedule = config.schedule
    builder = NetworkBuilder()
    tz_index = builder.add_timezone(schedule)
    prefix = config.name

    # Stations
    for row in tables['stops'].itertuples(index=False):
        try:
            builder.add_station(row.stop_name or row.stop_id, float(row.stop_lat), float(row.stop_lon),
                                tz_index, code=row.stop_id, key=f"{prefix}:{row.stop_id}")
        except (ValueError, ValidationError) as e:
            builder.error_count += 1
            logger.warning("Skipping stop %s in %s: %s", row.stop_id, config.path, e)
    logger.info("Loaded %d stops from feed %s", builder.station_count, config.path)

    # Routes
    agencies: Dict[str, str] = {}
    if tables['agency'] is not None and 'agency_name' in tables['agency'].columns:
        ids = tables['agency']['agency_id'] if 'agency_id' in tables['agency'].columns else [''] * len(tables['agency'])
        agencies = dict(zip(ids, tables['agency']['agency_name']))
    route_info: Dict[str, Tuple[int, Mode]] = {}
    routes = tables['routes']
    for row in routes.to_dict('records'):
        name = row.get('route_short_name') or ''
        long_name = row.get('route_long_name') or ''
        label = f"{name} {long_name}".strip() or row['route_id']
        agency = agencies.get(row.get('agency_id', ''), '')
        if not agency and len(agencies) == 1:
            agency = next(iter(agencies.values()))
        route_index = builder.add_route(f"{prefix}:{row['route_id']}", label, agency)
        route_info[row['route_id']] = (route_index, mode_for_route_type(row['route_type']))

    # Service days
    start = config.start_date or _default_start(tables['calendar'], tables['calendar_dates'])
    days = [start + dt.timedelta(days=k) for k in range(config.service_horizon_days)]
    calendar = _ServiceCalendar(tables['calendar'], tables['calendar_dates'], days)
    day_midnights = {d: local_midnight_epoch(d) for d in days}
    builder.extend_horizon(schedule.local_to_utc(local_midnight_epoch(days[0])),
                           schedule.local_to_utc(local_midnight_epoch(days[-1]) + 2 * 86400))

    trips = tables['trips'].set_index('trip_id')
    frequencies: Dict[str, List[Tuple[int, int, int]]] = {}
    if tables['frequencies'] is not None:
        for number, row in enumerate(tables['frequencies'].itertuples(index=False), start=2):
            try:
                window = (timestr_to_seconds(row.start_time), timestr_to_seconds(row.end_time), int(row.headway_secs))
            except ValueError as e:
                raise LoadError(f"Bad frequencies.txt entry for trip {row.trip_id}: {e}",
                                path=os.path.join(config.path, 'frequencies.txt'), record=f"line {number}") from e
            if window[2] <= 0:
                raise LoadError(f"Non-positive headway for trip {row.trip_id}",
                                path=os.path.join(config.path, 'frequencies.txt'), record=f"line {number}")
            frequencies.setdefault(row.trip_id, []).append(window)

    stop_times = tables['stop_times'].copy()
    stop_times['stop_sequence'] = pd.to_numeric(stop_times['stop_sequence'], errors='coerce')
    stop_times = stop_times.sort_values(['trip_id', 'stop_sequence'], kind='mergesort')

    event_count = 0
    for trip_id, group in stop_times.groupby('trip_id', sort=True):
        if trip_id not in trips.index:
            builder.error_count += 1
            logger.warning("stop_times references unknown trip %s", trip_id)
            continue
        trip = trips.loc[trip_id]
        if trip['route_id'] not in route_info:
            builder.error_count += 1
            logger.warning("Trip %s references unknown route %s", trip_id, trip['route_id'])
            continue
        route_index, mode = route_info[trip['route_id']]

        calls: List[Tuple[int, int, int]] = []
        for record in group.itertuples(index=False):
            station = builder.station_id(f"{prefix}:{record.stop_id}")
            if station is None:
                builder.error_count += 1
                logger.warning("stop_time of trip %s references unknown stop %s", trip_id, record.stop_id)
                continue
            if not record.arrival_time and not record.departure_time:
                continue
            try:
                arrival = timestr_to_seconds(record.arrival_time or record.departure_time)
                departure = timestr_to_seconds(record.departure_time or record.arrival_time)
            except ValueError:
                builder.error_count += 1
                logger.warning("Bad time in trip %s at stop %s", trip_id, record.stop_id)
                continue
            calls.append((station, arrival, departure))
        if len(calls) < 2:
            continue

        starts = [0]
        if trip_id in frequencies:
            first = calls[0][2]
            starts = sorted({s - first for begin, end, headway in frequencies[trip_id]
                             for s in range(begin, end, max(1, headway))})

        cumulative = [0.0]
        for (a, _, _), (b, _, _) in zip(calls, calls[1:]):
            cumulative.append(cumulative[-1] + great_circle_m(builder.station_coords(a), builder.station_coords(b)))

        span = 1
        if config.connect_all_stop_pairs:
            span = config.max_direct_span or len(calls) - 1
        for i in range(len(calls) - 1):
            for j in range(i + 1, min(len(calls), i + span + 1)):
                from_station, _, dep_local = calls[i]
                to_station, arr_local, _ = calls[j]
                if from_station == to_station:
                    continue
                events = []
                for day in calendar.days_for(trip['service_id']):
                    midnight = day_midnights[day]
                    for shift in starts:
                        dep_utc = schedule.local_to_utc(midnight + dep_local + shift)
                        arr_utc = schedule.local_to_utc(midnight + arr_local + shift)
                        events.append((dep_utc, max(1, arr_utc - dep_utc)))
                builder.add_events(route_index, from_station, to_station, mode, events,
                                   cumulative[j] - cumulative[i])
                event_count += len(events)

    # Station-level minimum transfer times
    if tables['transfers'] is not None and 'min_transfer_time' in tables['transfers'].columns:
        for row in tables['transfers'].itertuples(index=False):
            if row.from_stop_id != row.to_stop_id or not row.min_transfer_time:
                continue
            station = builder.station_id(f"{prefix}:{row.from_stop_id}")
            if station is None:
                builder.error_count += 1
                logger.warning("transfers.txt references unknown stop %s", row.from_stop_id)
                continue
            builder.set_transfer_override(station, int(float(row.min_transfer_time)))

    logger.info("Loaded %d events on %d hops from feed %s (%d record errors)",
                event_count, builder.hop_count, config.path, builder.error_count)
    return builder


class GtfsFeed(NetworkSource):
    """A GTFS directory as a network source"""

    def __init__(self, config: FeedConfig):
        self.config = config

    def describe(self) -> str:
        return f"gtfs:{self.config.path}"

    def load(self) -> NetworkBuilder:
        return load_gtfs(self.config)
