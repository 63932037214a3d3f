"""
Query, itinerary and plan-result models
"""
from dataclasses import asdict, dataclass, field, fields
from typing import Any, Dict, List, Optional

from ..errors import ValidationError
from .hop import Mode


@dataclass
class CostWeights:
    """Weights turning trip structure into cost seconds"""
    w_transfer_seconds: float = 600.0
    w_walk_seconds_per_m: float = 0.5
    w_taxi_seconds_per_km: float = 120.0
    w_wait_initial: float = 0.0
    w_fare_seconds_per_unit: float = 0.0

    def __post_init__(self):
        for f in fields(self):
            if getattr(self, f.name) < 0:
                raise ValidationError(f"Cost weight {f.name} must be non-negative")

    def updated(self, overrides: Dict[str, float]) -> 'CostWeights':
        data = asdict(self)
        aliases = {'transfer': 'w_transfer_seconds', 'walk': 'w_walk_seconds_per_m',
                   'taxi': 'w_taxi_seconds_per_km', 'wait': 'w_wait_initial',
                   'fare': 'w_fare_seconds_per_unit'}
        for key, value in overrides.items():
            name = aliases.get(key, key)
            if name not in data:
                raise ValidationError(f"Unknown cost weight '{key}'")
            data[name] = value
        return CostWeights(**data)

    def to_dict(self) -> Dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict) -> 'CostWeights':
        return cls(**data)


@dataclass
class Query:
    """A journey request"""
    dep_station: int
    arr_station: int
    earliest_dep_utc: int
    initial_window_seconds: int = 7200
    max_window_seconds: int = 259200
    max_transfers: int = 5
    max_walk_m: float = 2500.0
    budget_ms: Optional[int] = 500
    weights: CostWeights = field(default_factory=CostWeights)
    allow_air: bool = True
    allow_taxi: bool = True
    flexible_window: bool = True
    geo_pruning: bool = True
    audit: bool = False

    def __post_init__(self):
        if not 0 <= self.max_transfers <= 7:
            raise ValidationError("max_transfers must be within 0..7")
        if self.initial_window_seconds <= 0:
            raise ValidationError("initial_window_seconds must be positive")
        if self.max_window_seconds < self.initial_window_seconds:
            self.max_window_seconds = self.initial_window_seconds
        if self.max_walk_m < 0:
            raise ValidationError("max_walk_m must be non-negative")
        if self.budget_ms is not None and self.budget_ms < 0:
            raise ValidationError("budget_ms must be non-negative")

    def to_dict(self) -> Dict:
        data = asdict(self)
        data['weights'] = self.weights.to_dict()
        return data

    @classmethod
    def from_dict(cls, data: Dict) -> 'Query':
        data = dict(data)
        weights = CostWeights.from_dict(data.pop('weights', {}))
        return cls(weights=weights, **data)


@dataclass
class Leg:
    """One ride or walk of an itinerary"""
    hop_id: int
    mode: Mode
    board_station: int
    alight_station: int
    board_utc: int
    alight_utc: int
    wait_before_seconds: int
    ordinal: Optional[int] = None
    distance_m: float = 0.0
    displacement_m: float = 0.0
    fare: Optional[float] = None

    @property
    def duration_seconds(self) -> int:
        return self.alight_utc - self.board_utc

    def to_dict(self) -> Dict:
        data = asdict(self)
        data['mode'] = self.mode.name
        return data

    @classmethod
    def from_dict(cls, data: Dict) -> 'Leg':
        data = dict(data)
        data['mode'] = Mode[data['mode']]
        return cls(**data)


@dataclass
class SearchStats:
    """Counters reported with every plan"""
    alternatives_evaluated: int = 0
    departures_scanned: int = 0
    elapsed_ms: float = 0.0
    time_limited: bool = False
    pruned_by_bound: int = 0
    pruned_by_geo: int = 0
    skipped_by_mesh: int = 0
    sweeps: int = 0
    final_window_seconds: int = 0

    def to_dict(self) -> Dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict) -> 'SearchStats':
        return cls(**data)


@dataclass
class Itinerary:
    """A complete trip"""
    legs: List[Leg]
    depart_utc: int
    arrive_utc: int
    cost_seconds: float
    total_walk_m: float = 0.0
    initial_wait_seconds: int = 0
    final_displacement_m: float = 0.0
    cost_breakdown: Dict[str, float] = field(default_factory=dict)

    @property
    def elapsed_seconds(self) -> int:
        return self.arrive_utc - self.depart_utc

    @property
    def transfers(self) -> int:
        return len(self.legs) - 1

    @property
    def hop_ids(self) -> List[int]:
        return [leg.hop_id for leg in self.legs]

    @property
    def signature(self) -> str:
        return "".join(leg.mode.letter for leg in self.legs)

    def to_dict(self) -> Dict:
        return {
            'legs': [leg.to_dict() for leg in self.legs],
            'depart_utc': self.depart_utc,
            'arrive_utc': self.arrive_utc,
            'elapsed_seconds': self.elapsed_seconds,
            'cost_seconds': self.cost_seconds,
            'transfers': self.transfers,
            'total_walk_m': self.total_walk_m,
            'initial_wait_seconds': self.initial_wait_seconds,
            'final_displacement_m': self.final_displacement_m,
            'cost_breakdown': dict(self.cost_breakdown),
        }

    @classmethod
    def from_dict(cls, data: Dict) -> 'Itinerary':
        return cls(
            legs=[Leg.from_dict(leg) for leg in data['legs']],
            depart_utc=data['depart_utc'],
            arrive_utc=data['arrive_utc'],
            cost_seconds=data['cost_seconds'],
            total_walk_m=data.get('total_walk_m', 0.0),
            initial_wait_seconds=data.get('initial_wait_seconds', 0),
            final_displacement_m=data.get('final_displacement_m', 0.0),
            cost_breakdown=dict(data.get('cost_breakdown', {})),
        )


@dataclass
class PlanResult:
    """Outcome of a plan: an itinerary, or a no-route explanation"""
    query: Query
    itinerary: Optional[Itinerary]
    stats: SearchStats
    alternatives: List[Itinerary] = field(default_factory=list)
    no_route_reason: Optional[str] = None
    min_transfers_bound: Optional[int] = None
    overlay_epoch: int = 0
    # pruning audit, only kept in memory
    audit: Optional[Any] = field(default=None, repr=False, compare=False)

    @property
    def found(self) -> bool:
        return self.itinerary is not None

    def to_dict(self) -> Dict[str, Any]:
        return {
            'query': self.query.to_dict(),
            'itinerary': self.itinerary.to_dict() if self.itinerary else None,
            'alternatives': [a.to_dict() for a in self.alternatives],
            'stats': self.stats.to_dict(),
            'no_route_reason': self.no_route_reason,
            'min_transfers_bound': self.min_transfers_bound,
            'overlay_epoch': self.overlay_epoch,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'PlanResult':
        return cls(
            query=Query.from_dict(data['query']),
            itinerary=Itinerary.from_dict(data['itinerary']) if data.get('itinerary') else None,
            stats=SearchStats.from_dict(data['stats']),
            alternatives=[Itinerary.from_dict(a) for a in data.get('alternatives', [])],
            no_route_reason=data.get('no_route_reason'),
            min_transfers_bound=data.get('min_transfers_bound'),
            overlay_epoch=data.get('overlay_epoch', 0),
        )
