"""
Immutable time-dependent network: stations, hops and transfer rules.

When stations carry cluster ids the search and precompute work on cluster
nodes; otherwise a node is a station.
"""
import logging
import math
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..errors import ValidationError
from ..geo import great_circle_m
from ..timezones import UTC, UtcOffsetSchedule
from .hop import Hop, Mode
from .station import Station

logger = logging.getLogger(__name__)

DEFAULT_TRANSFER_SECONDS = 300
AIR_TRANSFER_SECONDS = 2700
CLUSTER_WALK_SPEED_MPS = 1.34
CLUSTER_WALK_DETOUR = 1.3


def walk_seconds(meters: float, speed_mps: float = CLUSTER_WALK_SPEED_MPS) -> int:
    """Whole seconds to walk a distance, never zero for a real displacement"""
    if meters <= 0:
        return 0
    return max(1, int(round(meters / speed_mps)))


class Network:
    """Time-dependent graph of stations and hops; safe for concurrent reads"""

    def __init__(self, stations: Sequence[Station], hops: Sequence[Hop],
                 horizon: Tuple[int, int],
                 transfer_overrides: Optional[Dict[int, int]] = None,
                 timezones: Sequence[UtcOffsetSchedule] = (UTC,)):
        self.stations: Tuple[Station, ...] = tuple(stations)
        self.hops: Tuple[Hop, ...] = tuple(hops)
        self.horizon: Tuple[int, int] = (int(horizon[0]), int(horizon[1]))
        self.transfer_overrides: Dict[int, int] = dict(sorted((transfer_overrides or {}).items()))
        self.timezones: Tuple[UtcOffsetSchedule, ...] = tuple(timezones) or (UTC,)

        out_hops: List[List[int]] = [[] for _ in self.stations]
        in_hops: List[List[int]] = [[] for _ in self.stations]
        for hop in self.hops:
            out_hops[hop.from_station].append(hop.id)
            in_hops[hop.to_station].append(hop.id)
        self._out = tuple(tuple(h) for h in out_hops)
        self._in = tuple(tuple(h) for h in in_hops)

        self._build_nodes()
        self.validate()
        self._lats = np.array([s.lat for s in self.stations], dtype=float)
        self._lons = np.array([s.lon for s in self.stations], dtype=float)
        self._min_durations = tuple(h.min_duration() for h in self.hops)

    # ------------------------------------------------------------------
    # Construction helpers
    # ------------------------------------------------------------------
    def _build_nodes(self):
        self.clustered = bool(self.stations) and all(s.cluster_id is not None for s in self.stations)
        if not self.clustered:
            self._node_of = tuple(range(len(self.stations)))
            self._members = tuple((s.id,) for s in self.stations)
        else:
            node_count = max(s.cluster_id for s in self.stations) + 1
            members: List[List[int]] = [[] for _ in range(node_count)]
            for station in self.stations:
                members[station.cluster_id].append(station.id)
            if any(not m for m in members):
                raise ValidationError("Cluster ids must be dense")
            self._node_of = tuple(s.cluster_id for s in self.stations)
            self._members = tuple(tuple(m) for m in members)

        node_out: List[List[int]] = [[] for _ in self._members]
        node_in: List[List[int]] = [[] for _ in self._members]
        for hop in self.hops:
            a, b = self._node_of[hop.from_station], self._node_of[hop.to_station]
            if a == b:
                continue
            node_out[a].append(hop.id)
            node_in[b].append(hop.id)
        self._node_out = tuple(tuple(h) for h in node_out)
        self._node_in = tuple(tuple(h) for h in node_in)
        self._representatives = tuple(
            max(m, key=lambda s: (self.hop_degree(s), -s)) for m in self._members)

    def validate(self):
        """Check ids, adjacency and the horizon"""
        for index, station in enumerate(self.stations):
            if station.id != index:
                raise ValidationError(f"Station ids must be dense: found {station.id} at {index}")
            if not 0 <= station.tz_index < len(self.timezones):
                raise ValidationError(f"Station {station.id} references unknown offset schedule")
        t_begin, t_end = self.horizon
        if t_begin > t_end:
            raise ValidationError("Horizon start after end")
        for index, hop in enumerate(self.hops):
            if hop.id != index:
                raise ValidationError(f"Hop ids must be dense: found {hop.id} at {index}")
            if not (0 <= hop.from_station < len(self.stations) and 0 <= hop.to_station < len(self.stations)):
                raise ValidationError(f"Hop {hop.id} references unknown station")
            if hop.departures is not None and hop.departures.total_count:
                if hop.departures.first_dep < t_begin or hop.departures.last_dep >= t_end:
                    raise ValidationError(f"Hop {hop.id} has departures outside the horizon",
                                          {'horizon': self.horizon})

    # ------------------------------------------------------------------
    # Basic accessors
    # ------------------------------------------------------------------
    @property
    def station_count(self) -> int:
        return len(self.stations)

    @property
    def hop_count(self) -> int:
        return len(self.hops)

    @property
    def event_count(self) -> int:
        return sum(h.departures.total_count for h in self.hops if h.departures is not None)

    @property
    def lats(self) -> np.ndarray:
        return self._lats

    @property
    def lons(self) -> np.ndarray:
        return self._lons

    def out_hops(self, station: int) -> Tuple[int, ...]:
        return self._out[station]

    def in_hops(self, station: int) -> Tuple[int, ...]:
        return self._in[station]

    def hop_degree(self, station: int) -> int:
        return len(self._out[station]) + len(self._in[station])

    def min_duration(self, hop_id: int) -> int:
        return self._min_durations[hop_id]

    def offset_schedule(self, station: int) -> UtcOffsetSchedule:
        return self.timezones[self.stations[station].tz_index]

    def check_station(self, station: int):
        if not 0 <= station < len(self.stations):
            raise ValidationError(f"Unknown station {station}")

    # ------------------------------------------------------------------
    # Nodes (clusters or stations)
    # ------------------------------------------------------------------
    @property
    def node_count(self) -> int:
        return len(self._members)

    def node_of(self, station: int) -> int:
        return self._node_of[station]

    def node_members(self, node: int) -> Tuple[int, ...]:
        return self._members[node]

    def node_representative(self, node: int) -> int:
        return self._representatives[node]

    def node_out_hops(self, node: int) -> Tuple[int, ...]:
        return self._node_out[node]

    def node_in_hops(self, node: int) -> Tuple[int, ...]:
        return self._node_in[node]

    def node_degree(self, node: int) -> int:
        return len(self._node_out[node]) + len(self._node_in[node])

    def hop_nodes(self, hop_id: int) -> Tuple[int, int]:
        hop = self.hops[hop_id]
        return self._node_of[hop.from_station], self._node_of[hop.to_station]

    # ------------------------------------------------------------------
    # Distances and transfers
    # ------------------------------------------------------------------
    def distance_m(self, a: int, b: int) -> float:
        """Great-circle distance between two stations"""
        if a == b:
            return 0.0
        return great_circle_m(self.stations[a].coords, self.stations[b].coords)

    def node_distance_m(self, a: int, b: int) -> float:
        return self.distance_m(self._representatives[a], self._representatives[b])

    def displacement_m(self, a: int, b: int) -> float:
        """Walking distance between two members of one cluster"""
        return self.distance_m(a, b) * CLUSTER_WALK_DETOUR

    def displacement_seconds(self, a: int, b: int) -> int:
        return walk_seconds(self.displacement_m(a, b))

    def min_transfer_seconds(self, station: int, arriving: Mode, departing: Mode) -> int:
        """Minimum connection time at a station between two modes"""
        if not departing.scheduled_by_default:
            return 0
        override = self.transfer_overrides.get(station)
        if override is not None:
            return override
        if arriving is Mode.PLANE or departing is Mode.PLANE:
            return AIR_TRANSFER_SECONDS
        return DEFAULT_TRANSFER_SECONDS

    def connects(self, hop_in: int, hop_out: int) -> bool:
        return self._node_of[self.hops[hop_in].to_station] == self._node_of[self.hops[hop_out].from_station]

    def transfer_seconds(self, hop_in: int, hop_out: int) -> int:
        """Minimum time between arriving on hop_in and departing on hop_out"""
        a, b = self.hops[hop_in], self.hops[hop_out]
        seconds = self.min_transfer_seconds(b.from_station, a.mode, b.mode)
        if a.to_station != b.from_station:
            seconds += self.displacement_seconds(a.to_station, b.from_station)
        return seconds

    # ------------------------------------------------------------------
    # Derived networks
    # ------------------------------------------------------------------
    def with_clusters(self, cluster_ids: Sequence[Optional[int]]) -> 'Network':
        stations = [s.with_cluster(c) for s, c in zip(self.stations, cluster_ids)]
        return Network(stations, self.hops, self.horizon, self.transfer_overrides, self.timezones)

    def summary(self) -> Dict[str, int]:
        return {
            'stations': self.station_count,
            'hops': self.hop_count,
            'events': self.event_count,
            'blocks': sum(len(h.departures.blocks) for h in self.hops if h.departures is not None),
            'nodes': self.node_count,
        }

    def __repr__(self) -> str:
        return f"Network({self.station_count} stations, {self.hop_count} hops)"
