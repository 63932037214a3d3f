"""
Branch-and-bound journey search.

The search iterates the transfer count T = 0..T_max under one shared bound.
For each T it first evaluates stored triplets (or compositions of them for
T > 2) in priority order, which usually yields a tight bound quickly, then
completes the sweep with a best-first enumeration of node-simple hop paths
whose lower bounds stay at or below the bound. With geo pruning off, an
unlimited budget and a fixed window the result equals exhaustive search.

Lower bound of a (partial) path: sum of minimum hop durations, minimum
transfer times at its junctions, a reverse-Dijkstra distance to the
destination and the weighted structural penalties already incurred.
"""
import heapq
import itertools
import logging
import math
import threading
import time
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy.sparse.csgraph import dijkstra

from ..core.errors import ValidationError
from ..core.models.hop import Mode
from ..core.models.itinerary import Itinerary, Leg, PlanResult, Query, SearchStats
from ..core.models.network import Network
from ..core.models.triplet import TripletStore
from ..core.overlay import Overlay
from ..core.settings import SearchSettings
from .chaining import Chainer, Ride
from .connectivity import MeshTable, min_weight_matrix, transfer_levels

logger = logging.getLogger(__name__)

INFINITY = math.inf
HEURISTIC_CACHE_SIZE = 256


def geo_ratio_gate(d_route_m: float, d_geo_m: float, air: bool,
                   settings: Optional[SearchSettings] = None) -> bool:
    """
    Keep a path unless its route distance is too long for the crow-flies
    distance. The threshold grows for short trips.
    """
    if d_geo_m <= 0:
        return True
    settings = settings or SearchSettings()
    g_base = settings.g_air if air else settings.g_ground
    g_eff = g_base * (1.0 + settings.d0_m / max(d_geo_m, settings.d0_m))
    return d_route_m / d_geo_m <= g_eff


def priority_key(typical_seconds: int, d_route_m: float) -> Tuple[int, float]:
    """Visit order of triplet candidates: typical time, then route distance"""
    return (typical_seconds, d_route_m)


def transfer_lower_bound_gate(mesh: Optional[MeshTable], network: Network,
                              dep: int, arr: int, transfers: int) -> bool:
    """False when the mesh proves that ``transfers`` is too few for the pair"""
    if mesh is None:
        return True
    bound = mesh.bound(network, dep, arr)
    return bound is None or transfers >= bound


def expand_window(query: Query, state: 'SearchState', window_seconds: int,
                  settings: Optional[SearchSettings] = None) -> int:
    """
    Next departure window size after a full sweep.

    Doubles (up to the query cap) while nothing was found, or while the best
    trip waits longer than max(floor, fraction x elapsed) somewhere, unless
    the previous doubling brought no improvement.
    """
    if not query.flexible_window or window_seconds >= query.max_window_seconds:
        return window_seconds
    settings = settings or SearchSettings()
    doubled = min(2 * window_seconds, query.max_window_seconds)
    best = state.best
    if best is None:
        return doubled
    if state.sweeps > 1 and not state.last_sweep_improved:
        return window_seconds
    threshold = max(settings.long_wait_floor_seconds, settings.long_wait_fraction * best.elapsed)
    if max(best.waits(query.earliest_dep_utc)) > threshold:
        return doubled
    return window_seconds


class _Trip(NamedTuple):
    key: Tuple
    cost: float
    rides: Tuple[Ride, ...]
    first_boarding: Tuple[int, int]
    breakdown: Dict[str, float]
    shape: '_Shape'

    @property
    def elapsed(self) -> int:
        return self.rides[-1].alight_utc - self.rides[0].board_utc

    def waits(self, earliest: int) -> List[int]:
        waits = [self.rides[0].board_utc - earliest]
        waits.extend(b.board_utc - a.alight_utc for a, b in zip(self.rides, self.rides[1:]))
        return waits


@dataclass
class SearchAudit:
    """(lower bound, evaluated cost) per candidate and the bound sequence"""
    evaluations: List[Tuple[float, float]] = field(default_factory=list)
    bounds: List[float] = field(default_factory=list)


@dataclass
class SearchState:
    bound_cost: float = INFINITY
    best: Optional[_Trip] = None
    runner_up: Optional[_Trip] = None
    deadline: Optional[float] = None
    stats: SearchStats = field(default_factory=SearchStats)
    audit: Optional[SearchAudit] = None
    sweeps: int = 0
    last_sweep_improved: bool = False


class _Deadline(Exception):
    pass


@dataclass
class _Shape:
    """Time-independent part of a candidate path"""
    hop_ids: Tuple[int, ...]
    nodes: Tuple[int, ...]
    scheduled: int
    min_seconds: float
    walk_m: float
    taxi_km: float
    route_m: float
    air: bool

    @property
    def transfers(self) -> int:
        return max(0, self.scheduled - 1)


class Planner:
    """Answers queries over one network, its triplet store and mesh table"""

    def __init__(self, network: Network, triplets: Optional[TripletStore] = None,
                 mesh: Optional[MeshTable] = None, settings: Optional[SearchSettings] = None):
        self.network = network
        self.triplets = triplets or TripletStore(network.node_count)
        self.mesh = mesh
        self.settings = settings or SearchSettings()
        self.has_planes = any(h.mode is Mode.PLANE for h in network.hops)
        self._heuristics: Dict[Tuple, np.ndarray] = {}
        self._lock = threading.Lock()

    def min_hop_seconds(self, hop_id: int, overlay: Optional[Overlay]) -> int:
        """Minimum duration of a hop, lowered by any overlay delay that shortens it"""
        seconds = self.network.min_duration(hop_id)
        if overlay is not None and overlay.has_hop(hop_id):
            seconds += overlay.duration_shrink(hop_id)
        return max(1, seconds)

    def heuristic(self, arr_node: int, overlay: Optional[Overlay], query: Query) -> np.ndarray:
        """Minimum ride seconds from every node to ``arr_node``, inf when unreachable"""
        shrink = ()
        if overlay is not None and not overlay.is_empty:
            shrink = tuple(sorted({(a.hop_id, overlay.duration_shrink(a.hop_id)) for a in overlay.annotations()
                                   if overlay.duration_shrink(a.hop_id) < 0}))
        key = (arr_node, query.allow_air, query.allow_taxi, shrink)
        with self._lock:
            cached = self._heuristics.get(key)
        if cached is not None:
            return cached

        rows, cols, weights = [], [], []
        for hop in self.network.hops:
            if not allowed_mode(hop.mode, query):
                continue
            a, b = self.network.hop_nodes(hop.id)
            if a == b:
                continue
            # reversed edges, searched from the destination
            rows.append(b)
            cols.append(a)
            weights.append(float(self.min_hop_seconds(hop.id, overlay)))
        graph = min_weight_matrix(rows, cols, weights, self.network.node_count)
        distances = dijkstra(graph, directed=True, indices=arr_node)
        with self._lock:
            if len(self._heuristics) >= HEURISTIC_CACHE_SIZE:
                self._heuristics.clear()
            self._heuristics[key] = distances
        return distances

    def plan(self, query: Query, overlay: Optional[Overlay] = None) -> PlanResult:
        """
        Find the lowest-cost itinerary for a query.

        Raises:
            ValidationError: unknown stations, same origin and destination node,
                or a departure time outside the network horizon
        """
        network = self.network
        network.check_station(query.dep_station)
        network.check_station(query.arr_station)
        if network.node_of(query.dep_station) == network.node_of(query.arr_station):
            raise ValidationError("Departure and arrival are the same place")
        t_begin, t_end = network.horizon
        if not t_begin <= query.earliest_dep_utc <= t_end:
            raise ValidationError("Departure time outside the network horizon",
                                  {'horizon': network.horizon, 'earliest_dep_utc': query.earliest_dep_utc})
        snapshot = overlay.active_at(query.earliest_dep_utc) if overlay is not None else Overlay()
        run = _QueryRun(self, query, snapshot)
        return run.execute()


def allowed_mode(mode: Mode, query: Query) -> bool:
    if mode is Mode.PLANE:
        return query.allow_air
    if mode is Mode.TAXI:
        return query.allow_taxi
    return True


class _QueryRun:
    """State of one query; single-threaded"""

    def __init__(self, planner: Planner, query: Query, overlay: Overlay):
        self.planner = planner
        self.network = planner.network
        self.settings = planner.settings
        self.query = query
        self.overlay = overlay
        self.chainer = Chainer(self.network, overlay)
        self.state = SearchState(audit=SearchAudit() if query.audit else None)
        self.stats = self.state.stats
        self.dep_node = self.network.node_of(query.dep_station)
        self.arr_node = self.network.node_of(query.arr_station)
        self.d_geo = self.network.distance_m(query.dep_station, query.arr_station)
        self.h = planner.heuristic(self.arr_node, overlay, query)
        self.evaluated = set()
        self._counter = itertools.count()

    # ------------------------------------------------------------------
    # Driver
    # ------------------------------------------------------------------
    def execute(self) -> PlanResult:
        started = time.perf_counter()
        query = self.query
        if query.budget_ms is not None:
            self.state.deadline = started + query.budget_ms / 1000.0
        window = query.initial_window_seconds
        try:
            while True:
                self.sweep(window)
                grown = expand_window(query, self.state, window, self.settings)
                if grown == window:
                    break
                window = grown
        except _Deadline:
            self.stats.time_limited = True
        self.stats.departures_scanned = self.chainer.scanned
        self.stats.elapsed_ms = (time.perf_counter() - started) * 1000.0
        result = self.result()
        logger.info("Planned %d -> %d: %s in %.1f ms (%d alternatives, %d departures)",
                    query.dep_station, query.arr_station,
                    f"cost {self.state.bound_cost:.0f}" if self.state.best else "no route",
                    self.stats.elapsed_ms, self.stats.alternatives_evaluated, self.stats.departures_scanned)
        return result

    def sweep(self, window_seconds: int):
        """One pass over T = 0..T_max with a fixed departure window"""
        state = self.state
        state.sweeps += 1
        self.stats.sweeps = state.sweeps
        self.stats.final_window_seconds = window_seconds
        self.evaluated = set()
        window = (self.query.earliest_dep_utc, self.query.earliest_dep_utc + window_seconds)
        before = state.bound_cost
        w_transfer = self.query.weights.w_transfer_seconds
        for transfers in range(self.query.max_transfers + 1):
            if not transfer_lower_bound_gate(self.planner.mesh, self.network,
                                             self.query.dep_station, self.query.arr_station, transfers):
                self.stats.skipped_by_mesh += 1
                continue
            if w_transfer * transfers + self.h[self.dep_node] > state.bound_cost:
                self.stats.pruned_by_bound += 1
                break
            self.branch_for_T(transfers, window)
            logger.debug("T=%d window %d s: bound %s", transfers, window_seconds, state.bound_cost)
        state.last_sweep_improved = state.bound_cost < before

    def check_deadline(self):
        if self.state.deadline is not None and time.perf_counter() >= self.state.deadline:
            raise _Deadline()

    # ------------------------------------------------------------------
    # Candidates
    # ------------------------------------------------------------------
    def shape_of(self, hop_ids: Sequence[int]) -> _Shape:
        network = self.network
        nodes = [self.dep_node]
        scheduled = 0
        min_seconds = 0.0
        walk_m = taxi_km = route_m = 0.0
        air = False
        for k, hop_id in enumerate(hop_ids):
            hop = network.hops[hop_id]
            nodes.append(network.node_of(hop.to_station))
            scheduled += hop.scheduled
            min_seconds += self.planner.min_hop_seconds(hop_id, self.overlay)
            route_m += hop.route_distance_m
            if k:
                min_seconds += network.transfer_seconds(hop_ids[k - 1], hop_id)
                previous = network.hops[hop_ids[k - 1]]
                if previous.to_station != hop.from_station:
                    walk_m += network.displacement_m(previous.to_station, hop.from_station)
            if hop.mode is Mode.WALK:
                walk_m += hop.route_distance_m
            elif hop.mode is Mode.TAXI:
                taxi_km += hop.route_distance_m / 1000.0
            air = air or hop.mode is Mode.PLANE
        return _Shape(tuple(hop_ids), tuple(nodes), scheduled, min_seconds, walk_m, taxi_km, route_m, air)

    def penalty(self, shape: _Shape, transfers: int) -> float:
        w = self.query.weights
        return (w.w_transfer_seconds * transfers + w.w_walk_seconds_per_m * shape.walk_m
                + w.w_taxi_seconds_per_km * shape.taxi_km)

    def lower_bound(self, shape: _Shape) -> float:
        return shape.min_seconds + self.penalty(shape, shape.transfers)

    def admissible(self, shape: _Shape) -> bool:
        """Hard constraints and the geo gate on a complete candidate"""
        if shape.walk_m > self.query.max_walk_m:
            return False
        if len(set(shape.nodes)) != len(shape.nodes):
            return False
        if not all(allowed_mode(self.network.hops[h].mode, self.query) for h in shape.hop_ids):
            return False
        if self.query.geo_pruning and not geo_ratio_gate(shape.route_m, self.d_geo, shape.air, self.settings):
            self.stats.pruned_by_geo += 1
            return False
        return True

    def _seeds(self, transfers: int) -> List[Tuple[Tuple[int, float], Tuple[int, ...]]]:
        """Stored fragments, or two-fragment compositions, with T transfers"""
        store = self.triplets_store
        seeds = []
        if store.has(transfers):
            for t in store.get(transfers, self.dep_node, self.arr_node):
                seeds.append((t.typical_e2e_seconds, t.hop_sequence))
        else:
            for head_t in store.levels:
                tail_t = transfers - 1 - head_t
                if not store.has(tail_t):
                    continue
                for junction, heads in store.row(head_t, self.dep_node):
                    if junction == self.arr_node:
                        continue
                    tails = store.get(tail_t, junction, self.arr_node)
                    for head in heads:
                        for tail in tails:
                            seeds.append((head.typical_e2e_seconds + tail.typical_e2e_seconds,
                                          head.hop_sequence + tail.hop_sequence))
        keyed = []
        for typical, hops in seeds:
            route = sum(self.network.hops[h].route_distance_m for h in hops)
            keyed.append((priority_key(typical, route), hops))
        keyed.sort()
        return keyed

    @property
    def triplets_store(self) -> TripletStore:
        return self.planner.triplets

    def branch_for_T(self, transfers: int, window: Tuple[int, int]):
        """Evaluate every candidate with exactly ``transfers`` transfers that may beat the bound"""
        for _, hops in self._seeds(transfers):
            shape = self.shape_of(hops)
            if shape.transfers != transfers or not self.admissible(shape):
                continue
            self.evaluate_candidate(shape, window)
        self._complete(transfers, window)

    def _complete(self, transfers: int, window: Tuple[int, int]):
        """Best-first enumeration of node-simple paths with ``transfers`` transfers"""
        network = self.network
        query = self.query
        w = query.weights
        limit = transfers + 1
        gate_air = query.allow_air and self.planner.has_planes
        base_penalty = w.w_transfer_seconds * transfers

        # entries: (lower bound, route m, tie, complete?, hops, nodes, scheduled, min s, walk m, taxi km, route m)
        heap = [(base_penalty + self.h[self.dep_node], 0.0, next(self._counter), False,
                 (), (self.dep_node,), 0, 0.0, 0.0, 0.0)]
        while heap:
            bound, route_m, _, complete, hops, nodes, scheduled, min_s, walk_m, taxi_km = heapq.heappop(heap)
            if bound > self.state.bound_cost:
                self.stats.pruned_by_bound += 1 + len(heap)
                return
            self.check_deadline()
            if complete:
                shape = _Shape(hops, nodes, scheduled, min_s, walk_m, taxi_km, route_m,
                               any(network.hops[h].mode is Mode.PLANE for h in hops))
                if query.geo_pruning and not geo_ratio_gate(route_m, self.d_geo, shape.air, self.settings):
                    self.stats.pruned_by_geo += 1
                    continue
                self.evaluate_candidate(shape, window)
                continue

            last = hops[-1] if hops else None
            for hop_id in network.node_out_hops(nodes[-1]):
                hop = network.hops[hop_id]
                if not allowed_mode(hop.mode, query):
                    continue
                target = network.node_of(hop.to_station)
                if target in nodes:
                    continue
                next_scheduled = scheduled + hop.scheduled
                if next_scheduled > limit:
                    continue
                next_min = min_s + self.planner.min_hop_seconds(hop_id, self.overlay)
                next_walk = walk_m
                if last is not None:
                    next_min += network.transfer_seconds(last, hop_id)
                    previous = network.hops[last]
                    if previous.to_station != hop.from_station:
                        next_walk += network.displacement_m(previous.to_station, hop.from_station)
                if hop.mode is Mode.WALK:
                    next_walk += hop.route_distance_m
                if next_walk > query.max_walk_m:
                    continue
                next_taxi = taxi_km + (hop.route_distance_m / 1000.0 if hop.mode is Mode.TAXI else 0.0)
                next_route = route_m + hop.route_distance_m
                remaining = self.h[target]
                if not np.isfinite(remaining):
                    continue
                if query.geo_pruning and self.d_geo > 0:
                    reach = next_route + network.distance_m(hop.to_station, query.arr_station) \
                        if target != self.arr_node else next_route
                    if not geo_ratio_gate(reach, self.d_geo, gate_air, self.settings):
                        self.stats.pruned_by_geo += 1
                        continue
                child_bound = (next_min + remaining + base_penalty + w.w_walk_seconds_per_m * next_walk
                               + w.w_taxi_seconds_per_km * next_taxi)
                if child_bound > self.state.bound_cost:
                    self.stats.pruned_by_bound += 1
                    continue
                is_complete = target == self.arr_node
                if is_complete and not (next_scheduled == limit or (transfers == 0 and next_scheduled <= 1)):
                    continue
                heapq.heappush(heap, (child_bound, next_route, next(self._counter), is_complete,
                                      hops + (hop_id,), nodes + (target,), next_scheduled,
                                      next_min, next_walk, next_taxi))

    # ------------------------------------------------------------------
    # Evaluation
    # ------------------------------------------------------------------
    def evaluate_candidate(self, shape: _Shape, window: Tuple[int, int]) -> Optional[_Trip]:
        """
        Time a candidate for every first boarding in the window and offer
        each trip to the state. Returns the candidate's best trip.
        """
        self.check_deadline()
        if shape.hop_ids in self.evaluated:
            return None
        bound = self.lower_bound(shape)
        if bound > self.state.bound_cost:
            self.stats.pruned_by_bound += 1
            return None
        self.evaluated.add(shape.hop_ids)
        self.stats.alternatives_evaluated += 1

        best: Optional[_Trip] = None
        for head in self.chainer.first_boardings(shape.hop_ids, window[0], window[1]):
            for rides in self._completions(shape.hop_ids, head):
                trip = self.score(shape, rides)
                self.offer(trip)
                if best is None or trip.key < best.key:
                    best = trip
        if best is not None and self.state.audit is not None:
            self.state.audit.evaluations.append((bound, best.cost))
        return best

    def _completions(self, hop_ids: Sequence[int], head: List[Ride]) -> Iterator[List[Ride]]:
        """Earliest-arrival completion, branching over a few events on fare-annotated hops"""
        k = len(head)
        if k == len(hop_ids):
            yield head
            return
        hop_id = hop_ids[k]
        ready = head[-1].alight_utc + self.network.transfer_seconds(hop_ids[k - 1], hop_id)
        if self.overlay.has_fares(hop_id) and self.network.hops[hop_id].scheduled:
            options = self.chainer.ride_options(hop_id, ready, self.settings.fare_alternatives)
        else:
            ride = self.chainer.best_ride(hop_id, ready)
            options = [ride] if ride is not None else []
        for ride in options:
            yield from self._completions(hop_ids, head + [ride])

    def score(self, shape: _Shape, rides: Sequence[Ride]) -> _Trip:
        w = self.query.weights
        depart, arrive = rides[0].board_utc, rides[-1].alight_utc
        fares = sum(r.fare for r in rides if r.fare is not None)
        breakdown = {
            'elapsed': float(arrive - depart),
            'transfers': w.w_transfer_seconds * shape.transfers,
            'walk': w.w_walk_seconds_per_m * shape.walk_m,
            'taxi': w.w_taxi_seconds_per_km * shape.taxi_km,
            'fare': w.w_fare_seconds_per_unit * fares,
            'initial_wait': w.w_wait_initial * (depart - self.query.earliest_dep_utc),
        }
        cost = (breakdown['elapsed'] + breakdown['transfers'] + breakdown['walk'] + breakdown['taxi']
                + breakdown['fare'] + breakdown['initial_wait'])
        first = next((r for r in rides if r.ordinal is not None), rides[0])
        key = (cost, len(rides) - 1, arrive, shape.hop_ids)
        return _Trip(key, cost, tuple(rides), (first.hop_id, first.board_utc), breakdown, shape)

    def offer(self, trip: _Trip):
        """Keep the best trip and the best one with a different first boarding"""
        state = self.state
        best = state.best
        if best is None or trip.key < best.key:
            if best is not None and best.first_boarding != trip.first_boarding:
                state.runner_up = best
            state.best = trip
            if trip.cost < state.bound_cost:
                state.bound_cost = trip.cost
                if state.audit is not None:
                    state.audit.bounds.append(trip.cost)
        elif trip.first_boarding != best.first_boarding and (
                state.runner_up is None or trip.key < state.runner_up.key):
            state.runner_up = trip

    # ------------------------------------------------------------------
    # Result
    # ------------------------------------------------------------------
    def itinerary(self, trip: _Trip) -> Itinerary:
        network = self.network
        query = self.query
        legs: List[Leg] = []
        previous: Optional[Ride] = None
        for ride in trip.rides:
            hop = network.hops[ride.hop_id]
            displacement = 0.0
            if previous is None:
                wait = ride.board_utc - query.earliest_dep_utc
            else:
                wait = ride.board_utc - previous.alight_utc
                previous_hop = network.hops[previous.hop_id]
                if previous_hop.to_station != hop.from_station:
                    displacement = network.displacement_m(previous_hop.to_station, hop.from_station)
            legs.append(Leg(ride.hop_id, hop.mode, hop.from_station, hop.to_station, ride.board_utc,
                            ride.alight_utc, wait, ride.ordinal, hop.route_distance_m, displacement, ride.fare))
            previous = ride
        last_station = legs[-1].alight_station
        final = network.displacement_m(last_station, query.arr_station) if last_station != query.arr_station else 0.0
        return Itinerary(legs, trip.rides[0].board_utc, trip.rides[-1].alight_utc, trip.cost,
                         trip.shape.walk_m, trip.rides[0].board_utc - query.earliest_dep_utc, final,
                         dict(trip.breakdown))

    def no_route_reason(self) -> Tuple[str, Optional[int]]:
        network = self.network
        levels = transfer_levels(network, [self.dep_node])[0]
        needed = int(levels[self.arr_node])
        dep_name = network.stations[self.query.dep_station].name
        arr_name = network.stations[self.query.arr_station].name
        if needed < 0:
            return f"{arr_name} is not reachable from {dep_name}", None
        if needed > self.query.max_transfers:
            return (f"at least {needed} transfers are needed, more than the limit of "
                    f"{self.query.max_transfers}"), needed
        if self.stats.time_limited:
            return "search budget exhausted before a trip was found", needed
        hours = self.stats.final_window_seconds / 3600.0
        return (f"no trip departs within {hours:g} hours of the requested time "
                f"(at least {needed} transfers needed)"), needed

    def result(self) -> PlanResult:
        state = self.state
        itinerary = self.itinerary(state.best) if state.best is not None else None
        alternatives = [self.itinerary(state.runner_up)] if state.runner_up is not None else []
        reason, needed = (None, None)
        if itinerary is None:
            reason, needed = self.no_route_reason()
        return PlanResult(self.query, itinerary, self.stats, alternatives, reason, needed,
                          self.overlay.epoch, state.audit)


def plan(network: Network, triplets: Optional[TripletStore], overlay: Optional[Overlay], query: Query,
         mesh: Optional[MeshTable] = None, settings: Optional[SearchSettings] = None) -> PlanResult:
    """One-off query; build a Planner to answer many"""
    return Planner(network, triplets, mesh, settings).plan(query, overlay)
