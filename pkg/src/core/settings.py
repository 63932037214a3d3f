"""
Typed settings for the planner.

Settings are read from ``settings.json`` in the config directory and merged
section by section over the defaults below. CLI flags override them.
"""
import json
import logging
import os
from dataclasses import asdict, dataclass, field, fields
from typing import Any, Dict, List, Optional, Tuple, Union

from .errors import ConfigError

logger = logging.getLogger(__name__)

DAY_SECONDS = 86400


@dataclass
class SearchSettings:
    """Defaults and heuristic thresholds for the query engine"""
    g_ground: float = 2.5
    g_air: float = 4.0
    d0_m: float = 50_000.0
    initial_window_seconds: int = 7200
    max_window_seconds: int = 3 * DAY_SECONDS
    max_transfers: int = 5
    max_walk_m: float = 2500.0
    budget_ms: Optional[int] = 500
    # long-wait rule for window expansion
    long_wait_floor_seconds: int = 3600
    long_wait_fraction: float = 0.25
    # cluster displacement walk
    walk_speed_mps: float = 1.34
    walk_detour_factor: float = 1.3
    # per-leg alternatives examined on fare-annotated hops
    fare_alternatives: int = 4

    def validate(self):
        if self.g_ground <= 0 or self.g_air <= 0:
            raise ConfigError("Geo-ratio thresholds must be positive")
        if not 0 <= self.max_transfers <= 7:
            raise ConfigError("max_transfers must be within 0..7")
        if self.initial_window_seconds <= 0 or self.max_window_seconds < self.initial_window_seconds:
            raise ConfigError("Window settings must satisfy 0 < initial <= max")


@dataclass
class EstimatorConfig:
    """Sampling parameters of the typical-time estimator"""
    sample_count: int = 64
    sample_horizon_seconds: int = 14 * DAY_SECONDS
    per_sample_span_seconds: int = 3 * DAY_SECONDS
    outlier_floor_seconds: int = 7200
    outlier_fraction: float = 0.5
    rng_seed: int = 0

    def validate(self):
        if self.sample_count < 8:
            raise ConfigError("sample_count must be at least 8")
        if self.sample_horizon_seconds <= 0 or self.per_sample_span_seconds <= 0:
            raise ConfigError("Estimator spans must be positive")

    def outlier_threshold(self, mean: float) -> float:
        return max(float(self.outlier_floor_seconds), self.outlier_fraction * mean)


@dataclass
class TaxiLocation:
    """A place without public transport that gets its own node"""
    name: str
    lat: float
    lon: float


@dataclass
class TaxiPair:
    """Explicit taxi connection; endpoints are station ids or new locations"""
    a: Union[int, TaxiLocation]
    b: Union[int, TaxiLocation]
    duration_s: int
    fare_estimate: Optional[float] = None


@dataclass
class GeneratedTaxiRule:
    """Rule set for generated taxi edges"""
    enabled: bool = True
    airport_pair_max_m: float = 80_000.0
    connect_isolated: bool = True
    hub_min_degree: int = 4
    speed_mps: float = 15.0
    detour_factor: float = 1.3
    fare_per_km: float = 2.0


@dataclass
class MultimodalConfig:
    """Walk and restricted taxi edge synthesis"""
    max_walk_pair_m: float = 1500.0
    walk_speed_mps: float = 1.34
    walk_detour_factor: float = 1.3
    taxi_pairs: List[TaxiPair] = field(default_factory=list)
    taxi_locations: List[TaxiLocation] = field(default_factory=list)
    generated_taxi: GeneratedTaxiRule = field(default_factory=lambda: GeneratedTaxiRule(enabled=False))

    def validate(self):
        if not 0 <= self.max_walk_pair_m <= 2000:
            raise ConfigError("max_walk_pair_m must be within 0..2000 m")
        if self.walk_speed_mps <= 0:
            raise ConfigError("walk_speed_mps must be positive")
        if self.walk_detour_factor < 1.0:
            raise ConfigError("walk_detour_factor must be at least 1")


@dataclass
class MeshSettings:
    cell_deg: float = 0.5


@dataclass
class LoggingSettings:
    level: str = "INFO"
    format: str = "%(asctime)s %(levelname)s %(name)s: %(message)s"


@dataclass
class Settings:
    search: SearchSettings = field(default_factory=SearchSettings)
    estimator: EstimatorConfig = field(default_factory=EstimatorConfig)
    multimodal: MultimodalConfig = field(default_factory=MultimodalConfig)
    mesh: MeshSettings = field(default_factory=MeshSettings)
    logging: LoggingSettings = field(default_factory=LoggingSettings)

    def validate(self) -> 'Settings':
        self.search.validate()
        self.estimator.validate()
        self.multimodal.validate()
        return self

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def _section(cls, data: Dict[str, Any], name: str):
    """Build a flat settings dataclass from a JSON section, rejecting unknown keys"""
    if not isinstance(data, dict):
        raise ConfigError(f"Settings section '{name}' must be an object")
    known = {f.name for f in fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"Unknown keys in section '{name}': {sorted(unknown)}")
    return cls(**data)


def _taxi_endpoint(value: Any) -> Union[int, TaxiLocation]:
    if isinstance(value, dict):
        return TaxiLocation(name=value['name'], lat=float(value['lat']), lon=float(value['lon']))
    return int(value)


def _multimodal_section(data: Dict[str, Any]) -> MultimodalConfig:
    data = dict(data)
    pairs = [TaxiPair(a=_taxi_endpoint(p['a']), b=_taxi_endpoint(p['b']),
                      duration_s=int(p['duration_s']), fare_estimate=p.get('fare_estimate'))
             for p in data.pop('taxi_pairs', [])]
    locations = [TaxiLocation(**loc) for loc in data.pop('taxi_locations', [])]
    rule = _section(GeneratedTaxiRule, data.pop('generated_taxi', {'enabled': False}), 'generated_taxi')
    config = _section(MultimodalConfig, data, 'multimodal')
    config.taxi_pairs = pairs
    config.taxi_locations = locations
    config.generated_taxi = rule
    return config


def settings_from_dict(data: Dict[str, Any]) -> Settings:
    """Merge a settings dictionary over the defaults"""
    settings = Settings()
    unknown = set(data) - {f.name for f in fields(Settings)}
    if unknown:
        raise ConfigError(f"Unknown settings sections: {sorted(unknown)}")
    try:
        if 'search' in data:
            settings.search = _section(SearchSettings, data['search'], 'search')
        if 'estimator' in data:
            settings.estimator = _section(EstimatorConfig, data['estimator'], 'estimator')
        if 'multimodal' in data:
            settings.multimodal = _multimodal_section(data['multimodal'])
        if 'mesh' in data:
            settings.mesh = _section(MeshSettings, data['mesh'], 'mesh')
        if 'logging' in data:
            settings.logging = _section(LoggingSettings, data['logging'], 'logging')
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigError(f"Invalid settings: {e}") from e
    return settings.validate()


def load_settings(path: Optional[str] = None) -> Settings:
    """
    Load settings from a JSON file.

    Args:
        path: Settings file; defaults to the path manager's settings file

    Returns:
        Validated settings; defaults when the file does not exist
    """
    if path is None:
        from .path_manager import path_manager
        path = path_manager.get_settings_file_path()

    if not os.path.exists(path):
        logger.debug("No settings file at %s, using defaults", path)
        return Settings().validate()

    try:
        with open(path, 'r', encoding='utf-8') as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError(f"Settings file {path} is not valid JSON: {e}") from e

    settings = settings_from_dict(data)
    level = os.environ.get('BBTIME_LOG_LEVEL')
    if level:
        settings.logging.level = level
    logger.debug("Loaded settings from %s", path)
    return settings


def save_settings(settings: Settings, path: str):
    """Write settings as JSON"""
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(settings.to_dict(), f, indent=4)
    logger.debug("Saved settings to %s", path)


def parse_weights(text: str) -> Dict[str, float]:
    """Parse a ``k=v,k=v`` weight override string"""
    weights: Dict[str, float] = {}
    if not text:
        return weights
    for item in text.split(','):
        item = item.strip()
        if not item:
            continue
        if '=' not in item:
            raise ConfigError(f"Weight '{item}' is not of the form key=value")
        key, value = item.split('=', 1)
        try:
            weights[key.strip()] = float(value)
        except ValueError as e:
            raise ConfigError(f"Weight '{key.strip()}' is not a number") from e
    return weights


def parse_key_value_file(path: str) -> Dict[str, str]:
    """Read a plain ``key = value`` file, ignoring blank lines and ``#`` comments"""
    values: Dict[str, str] = {}
    with open(path, 'r', encoding='utf-8') as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.split('#', 1)[0].strip()
            if not line:
                continue
            if '=' not in line:
                raise ConfigError(f"{path}:{lineno}: expected key = value")
            key, value = line.split('=', 1)
            values[key.strip()] = value.strip()
    return values


def coerce_fields(cls, raw: Dict[str, str]) -> Dict[str, Any]:
    """Convert string values to the field types of a dataclass"""
    known = {f.name: f for f in fields(cls)}
    unknown = set(raw) - set(known)
    if unknown:
        raise ConfigError(f"Unknown keys for {cls.__name__}: {sorted(unknown)}")
    result: Dict[str, Any] = {}
    for key, text in raw.items():
        default = known[key].default
        kind = type(default) if default is not None and not callable(default) else str
        try:
            if kind is bool:
                result[key] = text.lower() in ('1', 'true', 'yes', 'on')
            elif kind in (int, float):
                result[key] = kind(text)
            elif kind is tuple:
                result[key] = tuple(int(v) for v in text.replace(',', ' ').split())
            else:
                result[key] = text
        except ValueError as e:
            raise ConfigError(f"Value for '{key}' is not a valid {kind.__name__}: {text}") from e
    return result
