"""
Walk and restricted taxi edge synthesis.

Walk edges join every station pair within the walking threshold, found with
a spatial grid. Taxi edges are added only for explicit pairs, for airport
pairs close to each other and for stations left without public transport.
"""
import logging
from typing import List, Optional, Union

import numpy as np

from ..core.errors import ValidationError
from ..core.geo import SpatialGrid, great_circle_m, nearest_index
from ..core.models.hop import Mode
from ..core.models.network import Network
from ..core.settings import MultimodalConfig, TaxiLocation
from .builder import NetworkBuilder

logger = logging.getLogger(__name__)


def walk_duration(meters: float, config: MultimodalConfig) -> int:
    """Seconds to walk a great-circle distance, detour included"""
    return max(1, int(round(meters * config.walk_detour_factor / config.walk_speed_mps)))


def add_walk_edges(network: Network, config: Optional[MultimodalConfig] = None) -> Network:
    """Add symmetric walk hops between all station pairs within ``max_walk_pair_m``"""
    config = config or MultimodalConfig()
    config.validate()
    if config.max_walk_pair_m <= 0 or network.station_count < 2:
        return network

    builder = NetworkBuilder.from_network(network)
    grid = SpatialGrid(network.lats, network.lons, config.max_walk_pair_m)
    added = 0
    for i, j, meters in grid.pairs_within(config.max_walk_pair_m):
        duration = walk_duration(meters, config)
        distance = meters * config.walk_detour_factor
        added += builder.add_unscheduled(i, j, Mode.WALK, duration, distance)
        added += builder.add_unscheduled(j, i, Mode.WALK, duration, distance)
    if not added:
        return network
    logger.info("Added %d walk hops (threshold %.0f m)", added, config.max_walk_pair_m)
    return builder.build()


class _TaxiEdges:
    """Taxi hop insertion against one builder"""

    def __init__(self, network: Network, config: MultimodalConfig):
        self.network = network
        self.config = config
        self.rule = config.generated_taxi
        self.builder = NetworkBuilder.from_network(network)
        self.added = 0

    def duration(self, meters: float) -> int:
        return max(1, int(round(meters * self.rule.detour_factor / self.rule.speed_mps)))

    def fare(self, meters: float) -> float:
        return round(meters * self.rule.detour_factor / 1000.0 * self.rule.fare_per_km, 2)

    def endpoint(self, value: Union[int, TaxiLocation]) -> int:
        if isinstance(value, TaxiLocation):
            return self.builder.add_station(value.name, value.lat, value.lon, key=f"taxi:{value.name}")
        if not 0 <= int(value) < self.network.station_count:
            raise ValidationError(f"Taxi pair references unknown station {value}")
        return int(value)

    def link(self, a: int, b: int, duration: Optional[int] = None, fare: Optional[float] = None):
        meters = great_circle_m(self.builder.station_coords(a), self.builder.station_coords(b))
        duration = duration if duration is not None else self.duration(meters)
        fare = fare if fare is not None else self.fare(meters)
        distance = meters * self.rule.detour_factor
        self.added += self.builder.add_unscheduled(a, b, Mode.TAXI, duration, distance, fare)
        self.added += self.builder.add_unscheduled(b, a, Mode.TAXI, duration, distance, fare)

    def nearest_hub(self, station: int, degrees: List[int]) -> Optional[int]:
        count = len(degrees)
        coords = [self.builder.station_coords(s) for s in range(count)]
        lats = np.array([c[0] for c in coords])
        lons = np.array([c[1] for c in coords])
        degree = np.asarray(degrees)
        mask = degree >= self.rule.hub_min_degree
        if not mask.any():
            mask = degree > 0
        mask[station] = False
        return nearest_index(lats[station], lons[station], lats, lons, mask)

    def explicit_pairs(self):
        for pair in self.config.taxi_pairs:
            a, b = self.endpoint(pair.a), self.endpoint(pair.b)
            if a == b:
                raise ValidationError(f"Taxi pair joins station {a} to itself")
            self.link(a, b, int(pair.duration_s), pair.fare_estimate)

    def locations(self):
        new_stations = [self.endpoint(location) for location in self.config.taxi_locations]
        degrees = self.builder.degrees()
        for station in new_stations:
            if degrees[station] == 0:
                hub = self.nearest_hub(station, degrees)
                if hub is not None:
                    self.link(station, hub)

    def generated(self):
        if not self.rule.enabled:
            return
        airports = sorted({s for hop in self.network.hops if hop.mode is Mode.PLANE
                           for s in (hop.from_station, hop.to_station)})
        for k, a in enumerate(airports):
            for b in airports[k + 1:]:
                if self.network.distance_m(a, b) <= self.rule.airport_pair_max_m:
                    self.link(a, b)
        if self.rule.connect_isolated:
            degrees = self.builder.degrees()
            for station in range(len(degrees)):
                if degrees[station] == 0:
                    hub = self.nearest_hub(station, degrees)
                    if hub is not None:
                        self.link(station, hub)


def add_taxi_edges(network: Network, config: Optional[MultimodalConfig] = None) -> Network:
    """
    Add restricted taxi hops.

    Explicit pairs may name existing station ids or new locations, which are
    added as stations. The generated rule links airports within reach of each
    other and stations without any hop to their nearest hub. Returns the
    input network unchanged when nothing is added.
    """
    config = config or MultimodalConfig()
    edges = _TaxiEdges(network, config)
    edges.explicit_pairs()
    edges.locations()
    edges.generated()
    if not edges.added and edges.builder.station_count == network.station_count:
        return network
    logger.info("Added %d taxi hops", edges.added)
    return edges.builder.build()
