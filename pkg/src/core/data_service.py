"""
Network Data Service Layer
Holds the loaded network file, its planner and the live overlay, so that the
command line and the server answer requests through one code path.
"""

import logging
import os
import re
from datetime import datetime
from typing import Any, Dict, Iterable, Optional

from .errors import AmbiguousStationError, ValidationError
from .geo import check_coordinates, nearest_index
from .models.itinerary import PlanResult, Query
from .overlay import AnnotationSelector, OverlayStore, load_annotation_feed, parse_annotations
from .settings import Settings, parse_weights
from .timezones import parse_utc

logger = logging.getLogger(__name__)

COORDINATES = re.compile(r'^\s*(-?\d+(?:\.\d+)?)\s*,\s*(-?\d+(?:\.\d+)?)\s*$')

REQUEST_KEYS = {'from', 'to', 'dep_after', 'max_walk', 'budget_ms', 'tmax', 'flex', 'weights',
                'window', 'max_window', 'allow_air', 'allow_taxi', 'geo_pruning', 'id'}

FLAG_WORDS = {'true': True, '1': True, 'yes': True, 'false': False, '0': False, 'no': False}


def request_flag(request: Dict[str, Any], key: str, default: bool = True) -> bool:
    """A boolean request field; JSON booleans or true/false, yes/no, 1/0"""
    value = request.get(key)
    if value is None:
        return default
    if isinstance(value, bool):
        return value
    if isinstance(value, int) and value in (0, 1):
        return bool(value)
    if isinstance(value, str) and value.strip().lower() in FLAG_WORDS:
        return FLAG_WORDS[value.strip().lower()]
    raise ValidationError(f"'{key}' must be true or false, got {value!r}")


class NetworkService:
    """
    Cached network, triplets, mesh and overlay for one network file.
    Loading the same file twice reuses the cache.
    """

    def __init__(self, settings: Optional[Settings] = None):
        self.settings = settings or Settings()
        self._path: Optional[str] = None
        self._content = None
        self._planner = None
        self._overlay_store: Optional[OverlayStore] = None
        self._last_loaded: Optional[datetime] = None

    def load(self, path: str, force_reload: bool = False) -> 'NetworkService':
        """Load a network file; raises LoadError when it cannot be read"""
        from ..data.network_file import read_network_file
        from ..graph.search import Planner

        path = os.path.abspath(path)
        if not force_reload and self._path == path and self._content is not None:
            logger.debug("Using cached network from %s", path)
            return self
        content = read_network_file(path)
        self._content = content
        self._planner = Planner(content.network, content.triplets, content.mesh, self.settings.search)
        self._overlay_store = OverlayStore(content.network)
        self._path = path
        self._last_loaded = datetime.now()
        logger.info("Network service ready: %s", content.network)
        return self

    def _require(self):
        if self._content is None:
            raise ValidationError("No network loaded")

    @property
    def network(self):
        self._require()
        return self._content.network

    @property
    def content(self):
        self._require()
        return self._content

    @property
    def planner(self):
        self._require()
        return self._planner

    @property
    def overlay_store(self) -> OverlayStore:
        self._require()
        return self._overlay_store

    def is_loaded(self) -> bool:
        return self._content is not None

    # ------------------------------------------------------------------
    # Stations
    # ------------------------------------------------------------------
    def resolve_station(self, reference: Any) -> int:
        """
        Resolve a station reference: exact id, then unique name substring,
        then nearest station to "lat,lon".

        Raises:
            AmbiguousStationError: several names match
            ValidationError: nothing matches
        """
        network = self.network
        text = str(reference).strip()
        if text.isdigit():
            station = int(text)
            network.check_station(station)
            return station

        needle = text.lower()
        matches = [s for s in network.stations if needle and needle in s.name.lower()]
        if len(matches) == 1:
            return matches[0].id
        if matches:
            exact = [s for s in matches if s.name.lower() == needle]
            if len(exact) == 1:
                return exact[0].id
            raise AmbiguousStationError(text, [f"{s.id}: {s.name}" for s in matches])

        found = COORDINATES.match(text)
        if found:
            lat, lon = float(found.group(1)), float(found.group(2))
            check_coordinates(lat, lon)
            station = nearest_index(lat, lon, network.lats, network.lons)
            if station is not None:
                return station
        raise ValidationError(f"Unknown station '{text}'")

    # ------------------------------------------------------------------
    # Queries
    # ------------------------------------------------------------------
    def build_query(self, request: Dict[str, Any]) -> Query:
        """Turn a plan request (CLI flags or a server line) into a Query"""
        unknown = set(request) - REQUEST_KEYS
        if unknown:
            raise ValidationError(f"Unknown request fields: {sorted(unknown)}")
        for key in ('from', 'to'):
            if request.get(key) in (None, ''):
                raise ValidationError(f"Request needs '{key}'")
        defaults = self.settings.search
        weights = request.get('weights') or {}
        if isinstance(weights, str):
            weights = parse_weights(weights)
        elif not isinstance(weights, dict):
            raise ValidationError(f"'weights' must be an object or 'k=v,...' text, got {type(weights).__name__}")
        dep_after = request.get('dep_after')
        earliest = parse_utc(str(dep_after)) if dep_after not in (None, '') else self.network.horizon[0]
        try:
            return Query(
                dep_station=self.resolve_station(request['from']),
                arr_station=self.resolve_station(request['to']),
                earliest_dep_utc=earliest,
                initial_window_seconds=int(request.get('window') or defaults.initial_window_seconds),
                max_window_seconds=int(request.get('max_window') or defaults.max_window_seconds),
                max_transfers=int(request['tmax']) if request.get('tmax') is not None else defaults.max_transfers,
                max_walk_m=float(request['max_walk']) if request.get('max_walk') is not None else defaults.max_walk_m,
                budget_ms=int(request['budget_ms']) if request.get('budget_ms') is not None else defaults.budget_ms,
                weights=self._weights(weights),
                allow_air=request_flag(request, 'allow_air'),
                allow_taxi=request_flag(request, 'allow_taxi'),
                flexible_window=request_flag(request, 'flex'),
                geo_pruning=request_flag(request, 'geo_pruning'),
            )
        except (TypeError, ValueError) as e:
            raise ValidationError(f"Invalid request: {e}") from e

    @staticmethod
    def _weights(overrides: Dict[str, float]):
        from .models.itinerary import CostWeights
        return CostWeights().updated({k: float(v) for k, v in overrides.items()})

    def plan(self, query: Query) -> PlanResult:
        """Plan against the overlay snapshot current at call time"""
        return self.planner.plan(query, self.overlay_store.snapshot())

    def plan_request(self, request: Dict[str, Any]) -> PlanResult:
        return self.plan(self.build_query(request))

    # ------------------------------------------------------------------
    # Overlay
    # ------------------------------------------------------------------
    def apply_annotations(self, lines: Iterable[str]) -> int:
        """Parse annotation feed lines and apply them; returns the new epoch"""
        annotations = parse_annotations(lines)
        epoch = self.overlay_store.apply(annotations)
        logger.info("Applied %d annotations, overlay epoch %d", len(annotations), epoch)
        return epoch

    def apply_feed(self, path: str) -> int:
        """Apply an annotation feed file; errors name the file and line"""
        annotations = load_annotation_feed(path)
        epoch = self.overlay_store.apply(annotations)
        logger.info("Applied %d annotations from %s, overlay epoch %d", len(annotations), path, epoch)
        return epoch

    def clear_annotations(self, hop_id: Optional[int] = None) -> int:
        return self.overlay_store.clear(AnnotationSelector(hop_id=hop_id))

    # ------------------------------------------------------------------
    # Info
    # ------------------------------------------------------------------
    def get_data_info(self) -> Dict[str, Any]:
        """
        Get information about the loaded network

        Returns:
            Dictionary with file, counts and overlay state
        """
        info: Dict[str, Any] = {
            "data_loaded": self.is_loaded(),
            "network_file": self._path,
            "last_loaded": self._last_loaded.isoformat() if self._last_loaded else None,
        }
        if self.is_loaded():
            content = self._content
            info.update(content.network.summary())
            info["triplet_levels"] = content.triplets.levels if content.triplets else []
            info["mesh_entries"] = len(content.mesh) if content.mesh else 0
            info["overlay_epoch"] = self._overlay_store.epoch
            info["annotations"] = len(self._overlay_store.snapshot())
        return info

    def clear_cache(self):
        """Drop the loaded network"""
        logger.debug("Clearing network cache")
        self._path = None
        self._content = None
        self._planner = None
        self._overlay_store = None
        self._last_loaded = None


# Global service instance
_network_service: Optional[NetworkService] = None


def get_network_service(settings: Optional[Settings] = None) -> NetworkService:
    """
    Get the global network service instance

    Returns:
        NetworkService singleton instance
    """
    global _network_service
    if _network_service is None:
        _network_service = NetworkService(settings)
    return _network_service


def reset_network_service():
    """Reset the global service instance (useful for testing)"""
    global _network_service
    _network_service = None
