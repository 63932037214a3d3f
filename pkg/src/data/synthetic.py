"""
Synthetic network generator.

Builds deterministic test networks (line, grid, hub-and-spoke,
random-geometric and a mixed air/ground family) from a small key-value spec
and a seed.
"""
import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from ..core.errors import ValidationError
from ..core.geo import EARTH_RADIUS_M, SpatialGrid, great_circle_m, great_circle_vec
from ..core.interfaces.network_source import NetworkSource
from ..core.models.hop import Mode
from ..core.models.network import Network
from ..core.settings import coerce_fields, parse_key_value_file
from .builder import NetworkBuilder

logger = logging.getLogger(__name__)

TOPOLOGIES = ('line', 'grid', 'hub', 'random', 'multimodal')

DAY = 86400


@dataclass
class GeneratorSpec:
    """Parameters of a synthetic network"""
    topology: str = 'line'
    stations: int = 10
    seed: int = 0
    center_lat: float = 39.29
    center_lon: float = -76.61
    spacing_m: float = 2000.0
    start_utc: int = 1450051200
    days: int = 7
    service_start_hour: int = 0
    service_end_hour: int = 24
    headways: Tuple[int, ...] = (3600,)
    speed_mps: float = 10.0
    irregularity: float = 0.0
    jitter_seconds: int = 300
    connect_radius_m: float = 0.0
    cities: int = 3
    intercity_m: float = 300_000.0
    train_headway_seconds: int = 7200
    train_speed_mps: float = 40.0
    flight_headway_seconds: int = DAY
    flight_speed_mps: float = 220.0
    flight_overhead_seconds: int = 1200

    def validate(self) -> 'GeneratorSpec':
        if self.topology not in TOPOLOGIES:
            raise ValidationError(f"Unknown topology '{self.topology}', expected one of {TOPOLOGIES}")
        if self.stations < 2:
            raise ValidationError("A synthetic network needs at least 2 stations")
        if self.days < 1:
            raise ValidationError("days must be at least 1")
        if not self.headways or any(h <= 0 for h in self.headways):
            raise ValidationError("headways must be positive")
        if not 0.0 <= self.irregularity <= 1.0:
            raise ValidationError("irregularity must be within 0..1")
        if not 0 <= self.service_start_hour < self.service_end_hour <= 24:
            raise ValidationError("Service hours must satisfy 0 <= start < end <= 24")
        if self.spacing_m <= 0 or self.speed_mps <= 0:
            raise ValidationError("spacing_m and speed_mps must be positive")
        if self.topology == 'multimodal' and self.cities < 2:
            raise ValidationError("The multimodal topology needs at least 2 cities")
        return self


def load_generator_spec(path: str) -> GeneratorSpec:
    """Read a ``key = value`` generator spec file"""
    values = coerce_fields(GeneratorSpec, parse_key_value_file(path))
    if 'headways' in values:
        values['headways'] = tuple(values['headways'])
    return GeneratorSpec(**values).validate()


def _offset(lat: float, lon: float, north_m: float, east_m: float) -> Tuple[float, float]:
    """Point displaced by meters north and east (small-distance approximation)"""
    dlat = math.degrees(north_m / EARTH_RADIUS_M)
    dlon = math.degrees(east_m / (EARTH_RADIUS_M * max(1e-6, math.cos(math.radians(lat)))))
    return lat + dlat, lon + dlon


class _Generator:
    """Holds the RNG and builder while one network is generated"""

    def __init__(self, spec: GeneratorSpec, seed: int):
        self.spec = spec
        self.rng = np.random.default_rng(seed)
        self.builder = NetworkBuilder()
        self.route_count = 0

    def station(self, name: str, lat: float, lon: float) -> int:
        return self.builder.add_station(name, lat, lon, code=name, key=name)

    def trip_starts(self, headway: int, offset: int, jittered: bool) -> List[int]:
        """Trip start times over the whole horizon, ascending"""
        spec = self.spec
        starts = []
        for day in range(spec.days):
            day_start = spec.start_utc + day * DAY
            t = day_start + spec.service_start_hour * 3600 + offset
            end = day_start + spec.service_end_hour * 3600
            while t < end:
                starts.append(t)
                t += headway
        if jittered and starts:
            jitter = max(1, min(spec.jitter_seconds, headway // 3))
            shifted = [s + int(self.rng.integers(-jitter, jitter + 1)) for s in starts]
            shifted[0] = max(shifted[0], spec.start_utc)
            for k in range(1, len(shifted)):
                if shifted[k] <= shifted[k - 1]:
                    shifted[k] = shifted[k - 1] + 1
                if k >= 2 and shifted[k] - shifted[k - 1] == shifted[k - 1] - shifted[k - 2]:
                    shifted[k] += 1
            starts = shifted
        return starts

    def add_route(self, stops: Sequence[int], mode: Mode, speed_mps: float, headway: int,
                  name: str = "", both_directions: bool = True, overhead_seconds: int = 0,
                  offset: Optional[int] = None):
        """Run trips along a stop sequence (and back) every ``headway`` seconds"""
        self.route_count += 1
        route = self.builder.add_route(f"R{self.route_count:04d}", name or f"{self.route_count:03d}", "Synthetic")
        jittered = bool(self.rng.random() < self.spec.irregularity)
        if offset is None:
            offset = int(self.rng.integers(0, max(1, headway // 60))) * 60
        directions = [list(stops), list(reversed(stops))] if both_directions else [list(stops)]
        for path in directions:
            starts = self.trip_starts(headway, offset, jittered)
            elapsed = 0
            for a, b in zip(path, path[1:]):
                meters = great_circle_m(self.builder.station_coords(a), self.builder.station_coords(b))
                duration = max(60, int(round(meters * 1.2 / speed_mps)) + overhead_seconds)
                self.builder.add_events(route, a, b, mode, [(s + elapsed, duration) for s in starts],
                                        meters * 1.2)
                elapsed += duration

    def headway(self) -> int:
        return int(self.rng.choice(np.asarray(self.spec.headways)))

    # ------------------------------------------------------------------
    # Topologies
    # ------------------------------------------------------------------
    def line(self):
        spec = self.spec
        stops = [self.station(f"S{i:03d}", *_offset(spec.center_lat, spec.center_lon, 0.0, i * spec.spacing_m))
                 for i in range(spec.stations)]
        self.add_route(stops, Mode.BUS, spec.speed_mps, self.headway(), offset=0)

    def grid(self, base_lat: float, base_lon: float, count: int, prefix: str = "S") -> List[int]:
        spec = self.spec
        side = max(2, int(math.ceil(math.sqrt(count))))
        ids: Dict[Tuple[int, int], int] = {}
        for k in range(count):
            r, c = divmod(k, side)
            ids[(r, c)] = self.station(f"{prefix}{k:03d}", *_offset(base_lat, base_lon, r * spec.spacing_m,
                                                                     c * spec.spacing_m))
        rows = max(r for r, _ in ids) + 1
        for r in range(rows):
            stops = [ids[(r, c)] for c in range(side) if (r, c) in ids]
            if len(stops) > 1:
                self.add_route(stops, Mode.BUS, spec.speed_mps, self.headway())
        for c in range(side):
            stops = [ids[(r, c)] for r in range(rows) if (r, c) in ids]
            if len(stops) > 1:
                self.add_route(stops, Mode.BUS, spec.speed_mps, self.headway())
        return [ids[key] for key in sorted(ids)]

    def hub(self):
        spec = self.spec
        hub = self.station("H000", spec.center_lat, spec.center_lon)
        spokes = spec.stations - 1
        for k in range(spokes):
            angle = 2 * math.pi * k / spokes
            distance = spec.spacing_m * (1 + k % 3)
            spoke = self.station(f"S{k + 1:03d}", *_offset(spec.center_lat, spec.center_lon,
                                                           distance * math.sin(angle), distance * math.cos(angle)))
            self.add_route([hub, spoke], Mode.BUS, spec.speed_mps, self.headway())

    def random_geometric(self):
        spec = self.spec
        side = spec.spacing_m * math.sqrt(spec.stations)
        north = self.rng.uniform(0.0, side, size=spec.stations)
        east = self.rng.uniform(0.0, side, size=spec.stations)
        stops = [self.station(f"S{i:03d}", *_offset(spec.center_lat, spec.center_lon, float(north[i]), float(east[i])))
                 for i in range(spec.stations)]
        lats = np.array([self.builder.station_coords(s)[0] for s in stops])
        lons = np.array([self.builder.station_coords(s)[1] for s in stops])
        radius = spec.connect_radius_m or 1.6 * spec.spacing_m
        edges = sorted((i, j) for i, j, _ in SpatialGrid(lats, lons, radius).pairs_within(radius))

        # link every component to its nearest station in the component holding station 0
        n = len(stops)
        while True:
            rows = [i for i, _ in edges] + [j for _, j in edges]
            cols = [j for _, j in edges] + [i for i, _ in edges]
            graph = sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
            count, labels = connected_components(graph, directed=False)
            if count == 1:
                break
            main = labels == labels[0]
            other = int(np.flatnonzero(~main)[0])
            distances = great_circle_vec(lats[other], lons[other], lats, lons)
            distances[~main] = np.inf
            target = int(np.argmin(distances))
            edges.append((min(other, target), max(other, target)))

        for i, j in edges:
            self.add_route([stops[i], stops[j]], Mode.BUS, spec.speed_mps, self.headway())

    def multimodal(self):
        spec = self.spec
        per_city = max(2, spec.stations // spec.cities)
        centers: List[int] = []
        airports: List[int] = []
        for city in range(spec.cities):
            angle = 2 * math.pi * city / spec.cities
            radius = spec.intercity_m * (0.6 + 0.4 * float(self.rng.random()))
            lat, lon = _offset(spec.center_lat, spec.center_lon, radius * math.sin(angle), radius * math.cos(angle))
            members = self.grid(lat, lon, per_city, prefix=f"C{city}S")
            centers.append(members[0])
            airport = self.station(f"C{city}AIR", *_offset(lat, lon, -15_000.0, -15_000.0))
            airports.append(airport)
            self.add_route([members[0], airport], Mode.BUS, spec.speed_mps * 2, 3600, name=f"C{city} airport")
        for k in range(spec.cities):
            a, b = centers[k], centers[(k + 1) % spec.cities]
            if spec.cities == 2 and k == 1:
                break
            self.add_route([a, b], Mode.TRAIN, spec.train_speed_mps, spec.train_headway_seconds,
                           name=f"IC {k}")
        for i in range(spec.cities):
            for j in range(i + 1, spec.cities):
                hour = int(self.rng.integers(spec.service_start_hour, spec.service_end_hour))
                self.add_route([airports[i], airports[j]], Mode.PLANE, spec.flight_speed_mps,
                               spec.flight_headway_seconds, name=f"FL{i}{j}",
                               overhead_seconds=spec.flight_overhead_seconds,
                               offset=(hour - spec.service_start_hour) * 3600)


def build_synthetic(spec: GeneratorSpec, seed: Optional[int] = None) -> NetworkBuilder:
    """Generate a partial network; ``seed`` overrides ``spec.seed``"""
    spec.validate()
    generator = _Generator(spec, spec.seed if seed is None else seed)
    if spec.topology == 'line':
        generator.line()
    elif spec.topology == 'grid':
        generator.grid(spec.center_lat, spec.center_lon, spec.stations)
    elif spec.topology == 'hub':
        generator.hub()
    elif spec.topology == 'random':
        generator.random_geometric()
    else:
        generator.multimodal()
    generator.builder.extend_horizon(spec.start_utc, spec.start_utc + (spec.days + 1) * DAY)
    logger.info("Generated %s network: %d stations, %d routes",
                spec.topology, generator.builder.station_count, generator.route_count)
    return generator.builder


def generate_synthetic(spec: GeneratorSpec, seed: Optional[int] = None) -> Network:
    """Generate an immutable synthetic network"""
    return build_synthetic(spec, seed).build()


class SyntheticSource(NetworkSource):
    """A generator spec as a network source"""

    def __init__(self, spec: GeneratorSpec, seed: Optional[int] = None):
        self.spec = spec
        self.seed = seed

    def describe(self) -> str:
        return f"synthetic:{self.spec.topology}:{self.spec.stations}"

    def load(self) -> NetworkBuilder:
        return build_synthetic(self.spec, self.seed)
