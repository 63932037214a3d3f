"""
Geodesy helpers: haversine distances and a spatial grid for near-pair discovery.
"""
import math
from collections import defaultdict
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from .errors import ValidationError

EARTH_RADIUS_M = 6_371_000.0

LatLon = Tuple[float, float]


def check_coordinates(lat: float, lon: float):
    """Raise ValidationError unless lat/lon are within valid ranges"""
    if not (-90.0 <= lat <= 90.0) or not (-180.0 <= lon <= 180.0) or math.isnan(lat) or math.isnan(lon):
        raise ValidationError(f"Coordinates out of range: {lat},{lon}")


def great_circle_m(a: LatLon, b: LatLon) -> float:
    """Haversine distance in meters between two (lat, lon) points in degrees"""
    lat1, lon1 = math.radians(a[0]), math.radians(a[1])
    lat2, lon2 = math.radians(b[0]), math.radians(b[1])
    dlat = lat2 - lat1
    dlon = lon2 - lon1
    h = math.sin(dlat / 2) ** 2 + math.cos(lat1) * math.cos(lat2) * math.sin(dlon / 2) ** 2
    return 2 * EARTH_RADIUS_M * math.asin(math.sqrt(min(1.0, h)))


def great_circle_vec(lat: float, lon: float, lats: np.ndarray, lons: np.ndarray) -> np.ndarray:
    """Haversine distances from one point to arrays of points"""
    lat1, lon1 = np.radians(lat), np.radians(lon)
    lat2, lon2 = np.radians(lats), np.radians(lons)
    h = (np.sin((lat2 - lat1) / 2) ** 2
         + np.cos(lat1) * np.cos(lat2) * np.sin((lon2 - lon1) / 2) ** 2)
    return 2 * EARTH_RADIUS_M * np.arcsin(np.sqrt(np.minimum(1.0, h)))


def nearest_index(lat: float, lon: float, lats: np.ndarray, lons: np.ndarray,
                  mask: Optional[np.ndarray] = None) -> Optional[int]:
    """Index of the point nearest to (lat, lon), optionally restricted by a boolean mask"""
    if len(lats) == 0:
        return None
    distances = great_circle_vec(lat, lon, lats, lons)
    if mask is not None:
        if not mask.any():
            return None
        distances = np.where(mask, distances, np.inf)
    return int(np.argmin(distances))


class SpatialGrid:
    """
    Uniform grid over Earth-centred chord coordinates.

    Chord length never exceeds arc length, so every pair within ``cell_m``
    along the surface lies in neighbouring cells; candidates are confirmed
    with the haversine distance.
    """

    def __init__(self, lats: Sequence[float], lons: Sequence[float], cell_m: float):
        self.lats = np.asarray(lats, dtype=float)
        self.lons = np.asarray(lons, dtype=float)
        self.cell_m = float(cell_m)
        self._cells: Dict[Tuple[int, int, int], List[int]] = defaultdict(list)
        if self.cell_m <= 0 or len(self.lats) == 0:
            return

        phi = np.radians(self.lats)
        lam = np.radians(self.lons)
        xyz = EARTH_RADIUS_M * np.column_stack((np.cos(phi) * np.cos(lam),
                                                np.cos(phi) * np.sin(lam),
                                                np.sin(phi)))
        keys = np.floor(xyz / self.cell_m).astype(np.int64)
        for index, key in enumerate(map(tuple, keys)):
            self._cells[key].append(index)

    def pairs_within(self, max_m: float) -> Iterator[Tuple[int, int, float]]:
        """Yield (i, j, meters) with i < j for every pair within ``max_m`` (at most the cell size)"""
        if max_m > self.cell_m:
            raise ValidationError("Pair radius must not exceed the grid cell size")
        for key in sorted(self._cells):
            members = self._cells[key]
            neighbours: List[int] = []
            for dx in (-1, 0, 1):
                for dy in (-1, 0, 1):
                    for dz in (-1, 0, 1):
                        neighbours.extend(self._cells.get((key[0] + dx, key[1] + dy, key[2] + dz), ()))
            if not neighbours:
                continue
            others = np.asarray(neighbours)
            for i in members:
                candidates = others[others > i]
                if candidates.size == 0:
                    continue
                distances = great_circle_vec(self.lats[i], self.lons[i],
                                             self.lats[candidates], self.lons[candidates])
                for j, meters in zip(candidates[distances <= max_m], distances[distances <= max_m]):
                    yield i, int(j), float(meters)
