"""
Station model: a node of the time-dependent graph (bus stop, rail station, airport)
"""
from dataclasses import dataclass, replace
from typing import Dict, Optional, Tuple

from ..geo import check_coordinates


@dataclass(frozen=True)
class Station:
    """
    A station of the network.

    ``tz_index`` points into the network's offset schedules and is only used
    at ingest and report time.
    """
    id: int
    name: str
    lat: float
    lon: float
    tz_index: int = 0
    cluster_id: Optional[int] = None
    code: str = ""

    def __post_init__(self):
        check_coordinates(self.lat, self.lon)

    @property
    def coords(self) -> Tuple[float, float]:
        """(lat, lon) tuple for distance calculations"""
        return (self.lat, self.lon)

    def with_cluster(self, cluster_id: Optional[int]) -> 'Station':
        return replace(self, cluster_id=cluster_id)

    def to_dict(self) -> Dict:
        """Convert station to dictionary representation"""
        return {
            'id': self.id,
            'name': self.name,
            'lat': self.lat,
            'lon': self.lon,
            'tz_index': self.tz_index,
            'cluster_id': self.cluster_id,
            'code': self.code,
        }

    @classmethod
    def from_dict(cls, data: Dict) -> 'Station':
        """Create station from dictionary representation"""
        return cls(
            id=int(data['id']),
            name=data['name'],
            lat=float(data['lat']),
            lon=float(data['lon']),
            tz_index=int(data.get('tz_index', 0)),
            cluster_id=data.get('cluster_id'),
            code=data.get('code', ''),
        )
