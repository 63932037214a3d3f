"""
Triplet precompute.

Direct hops (T=0) are estimated per node pair. T=1 fragments compose two
retained direct hops at a junction node, T=2 fragments extend retained T=1
fragments by one more direct hop. Candidates failing the geo-ratio gate are
dropped before estimation; per (pair, T) only the N lowest typical times are
kept. Rows are independent, so departure nodes are split across worker
processes and merged in key order.
"""
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from ..core.models.hop import Mode
from ..core.models.network import Network
from ..core.models.triplet import Triplet, TripletMatrix, TripletStore, retention_limit
from ..core.settings import EstimatorConfig, SearchSettings
from .chaining import Chainer
from .connectivity import MeshTable, build_mesh_table
from .estimator import estimate_typical_time, sample_starts
from .search import geo_ratio_gate

logger = logging.getLogger(__name__)

Pair = Tuple[int, int]
Candidate = Tuple[int, Tuple[int, ...]]

SUPPORTED_LEVELS = (1, 2)


@dataclass
class LevelStats:
    pairs: int = 0
    triplets: int = 0
    candidates: int = 0
    estimated: int = 0
    geo_pruned: int = 0
    infeasible: int = 0

    def add(self, other: 'LevelStats'):
        self.candidates += other.candidates
        self.estimated += other.estimated
        self.geo_pruned += other.geo_pruned
        self.infeasible += other.infeasible


@dataclass
class PrecomputeReport:
    """Counts and parameters of one precompute run"""
    stations: int
    nodes: int
    hops: int
    levels: Dict[int, LevelStats] = field(default_factory=dict)
    sample_count: int = 0
    rng_seed: int = 0
    mesh_entries: int = 0
    mesh_cell_deg: Optional[float] = None
    workers: int = 1
    wall_seconds: float = 0.0

    def to_dict(self) -> Dict:
        """Deterministic part of the report, stored in the network file"""
        return {
            'stations': self.stations,
            'nodes': self.nodes,
            'hops': self.hops,
            'levels': {str(t): asdict(s) for t, s in sorted(self.levels.items())},
            'sample_count': self.sample_count,
            'rng_seed': self.rng_seed,
            'mesh_entries': self.mesh_entries,
            'mesh_cell_deg': self.mesh_cell_deg,
        }

    def to_text(self) -> str:
        lines = ["precompute report",
                 f"stations: {self.stations}  nodes: {self.nodes}  hops: {self.hops}"]
        for t, s in sorted(self.levels.items()):
            lines.append(f"T={t}: {s.pairs} pairs, {s.triplets} triplets "
                         f"({s.candidates} candidates, {s.estimated} estimated, "
                         f"{s.geo_pruned} geo-pruned, {s.infeasible} infeasible)")
        if self.mesh_cell_deg is not None:
            lines.append(f"mesh: {self.mesh_entries} cell pairs at {self.mesh_cell_deg:g} deg")
        lines.append(f"samples: {self.sample_count} (seed {self.rng_seed})")
        lines.append(f"wall time: {self.wall_seconds:.2f} s with {self.workers} worker"
                     + ("" if self.workers == 1 else "s"))
        return "\n".join(lines) + "\n"


@dataclass
class PrecomputeResult:
    triplets: TripletStore
    mesh: Optional[MeshTable]
    report: PrecomputeReport


def min_transfer_pair_table(network: Network) -> Dict[Pair, int]:
    """Minimum transfer seconds for every (hop_in, hop_out) meeting at a node"""
    table: Dict[Pair, int] = {}
    for node in range(network.node_count):
        members = network.node_members(node)
        arriving = [h for s in members for h in network.in_hops(s)]
        departing = [h for s in members for h in network.out_hops(s)]
        for hop_in in arriving:
            for hop_out in departing:
                table[(hop_in, hop_out)] = network.transfer_seconds(hop_in, hop_out)
    return table


class _RowBuilder:
    """Builds triplet rows for a range of departure nodes"""

    def __init__(self, network: Network, config: EstimatorConfig, search: SearchSettings,
                 samples: np.ndarray):
        self.network = network
        self.config = config
        self.search = search
        self.samples = samples
        self.chainer = Chainer(network)
        self.transfers = min_transfer_pair_table(network)
        self.stats = LevelStats()

    def lower_bound(self, hops: Sequence[int]) -> int:
        bound = sum(self.network.min_duration(h) for h in hops)
        return bound + sum(self.transfers[(a, b)] for a, b in zip(hops, hops[1:]))

    def keep_geo(self, dep: int, arr: int, hops: Sequence[int]) -> bool:
        route = sum(self.network.hops[h].route_distance_m for h in hops)
        air = any(self.network.hops[h].mode is Mode.PLANE for h in hops)
        if geo_ratio_gate(route, self.network.node_distance_m(dep, arr), air, self.search):
            return True
        self.stats.geo_pruned += 1
        return False

    def retain(self, dep: int, arr: int, candidates: List[Candidate], fallback: bool = False) -> List[Triplet]:
        """Estimate candidates in lower-bound order until the N best are certain"""
        limit = retention_limit(max(self.network.node_degree(dep), self.network.node_degree(arr)))
        self.stats.candidates += len(candidates)
        kept: List[Triplet] = []
        for bound, hops in sorted(candidates):
            if len(kept) >= limit and kept[limit - 1].typical_e2e_seconds < bound:
                break
            self.stats.estimated += 1
            estimate = estimate_typical_time(self.network, hops, self.config, self.samples, self.chainer)
            if estimate is None:
                if not fallback:
                    self.stats.infeasible += 1
                    continue
                estimate = (bound, bound)
            vias = tuple(self.network.hops[h].to_station for h in hops[:-1])
            kept.append(Triplet(vias, hops, estimate[0], estimate[1]))
            kept.sort(key=Triplet.sort_key)
            del kept[limit:]
        return kept

    def direct_row(self, dep: int) -> Dict[Pair, List[Triplet]]:
        groups: Dict[int, List[Candidate]] = {}
        for hop_id in self.network.node_out_hops(dep):
            if self.network.hops[hop_id].scheduled:
                arr = self.network.node_of(self.network.hops[hop_id].to_station)
                groups.setdefault(arr, []).append((self.network.min_duration(hop_id), (hop_id,)))
        return {(dep, arr): self.retain(dep, arr, c, fallback=True) for arr, c in sorted(groups.items())}

    def composed_row(self, dep: int, head: TripletMatrix, direct: TripletMatrix) -> Dict[Pair, List[Triplet]]:
        """Extend every retained fragment of ``head`` from ``dep`` by one direct hop"""
        groups: Dict[int, List[Candidate]] = {}
        for junction, fragments in head.row(dep):
            for fragment in fragments:
                visited = {dep, junction} | {self.network.node_of(s) for s in fragment.via_stations}
                for arr, hops in direct.row(junction):
                    if arr in visited:
                        continue
                    for last in hops:
                        sequence = fragment.hop_sequence + last.hop_sequence
                        if self.keep_geo(dep, arr, sequence):
                            groups.setdefault(arr, []).append((self.lower_bound(sequence), sequence))
        rows = {}
        for arr, candidates in sorted(groups.items()):
            kept = self.retain(dep, arr, candidates)
            if kept:
                rows[(dep, arr)] = kept
        return rows


def _build_rows(args) -> Tuple[Dict[Pair, List[Triplet]], LevelStats]:
    network, config, search, samples, level, nodes, lower = args
    builder = _RowBuilder(network, config, search, samples)
    rows: Dict[Pair, List[Triplet]] = {}
    for dep in nodes:
        if level == 0:
            rows.update(builder.direct_row(dep))
        else:
            rows.update(builder.composed_row(dep, lower[level - 1], lower[0]))
    return rows, builder.stats


def _chunks(count: int, parts: int) -> List[List[int]]:
    size = max(1, -(-count // parts))
    return [list(range(begin, min(count, begin + size))) for begin in range(0, count, size)]


def _build_level(network: Network, level: int, config: EstimatorConfig, search: SearchSettings,
                 samples: np.ndarray, lower: Dict[int, TripletMatrix], workers: int) -> Tuple[TripletMatrix, LevelStats]:
    tasks = [(network, config, search, samples, level, nodes, lower)
             for nodes in _chunks(network.node_count, max(1, workers))]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_build_rows, tasks))
    else:
        results = [_build_rows(task) for task in tasks]

    entries: Dict[Pair, List[Triplet]] = {}
    stats = LevelStats()
    for rows, chunk_stats in results:
        entries.update(rows)
        stats.add(chunk_stats)
    matrix = TripletMatrix(network.node_count, entries)
    stats.pairs = matrix.pair_count
    stats.triplets = matrix.triplet_count
    return matrix, stats


def build_direct_matrix(network: Network, config: Optional[EstimatorConfig] = None,
                        samples: Optional[np.ndarray] = None) -> TripletMatrix:
    """T=0 entries: one triplet per scheduled direct hop between two nodes"""
    config = config or EstimatorConfig()
    samples = sample_starts(network, config) if samples is None else samples
    matrix, _ = _build_level(network, 0, config, SearchSettings(), samples, {}, 1)
    return matrix


def build_triplets(network: Network, level: int, lower: Dict[int, TripletMatrix],
                   config: Optional[EstimatorConfig] = None, search: Optional[SearchSettings] = None,
                   samples: Optional[np.ndarray] = None, workers: int = 1) -> TripletMatrix:
    """
    Triplets for T=1 or T=2.

    Args:
        lower: already built matrices keyed by T; T=0 and T=level-1 are required
    """
    if level not in SUPPORTED_LEVELS:
        raise ValueError(f"Triplets are built for T in {SUPPORTED_LEVELS}, not {level}")
    config = config or EstimatorConfig()
    samples = sample_starts(network, config) if samples is None else samples
    matrix, _ = _build_level(network, level, config, search or SearchSettings(), samples, lower, workers)
    return matrix


def precompute(network: Network, levels: Iterable[int] = SUPPORTED_LEVELS,
               config: Optional[EstimatorConfig] = None, search: Optional[SearchSettings] = None,
               workers: int = 1, mesh_cell_deg: Optional[float] = 0.5) -> PrecomputeResult:
    """
    Build the triplet store for T=0 and the requested levels, plus the mesh
    table when ``mesh_cell_deg`` is given. T=2 implies T=1.
    """
    started = time.perf_counter()
    config = config or EstimatorConfig()
    config.validate()
    search = search or SearchSettings()
    requested = sorted(set(levels))
    for level in requested:
        if level not in SUPPORTED_LEVELS:
            raise ValueError(f"Triplets are built for T in {SUPPORTED_LEVELS}, not {level}")
    top = requested[-1] if requested else 0

    samples = sample_starts(network, config)
    report = PrecomputeReport(network.station_count, network.node_count, network.hop_count,
                              sample_count=config.sample_count, rng_seed=config.rng_seed, workers=workers)
    store = TripletStore(network.node_count)
    for level in range(top + 1):
        matrix, stats = _build_level(network, level, config, search, samples, store.layers, workers)
        store.set_layer(level, matrix)
        report.levels[level] = stats
        logger.info("T=%d: %d pairs, %d triplets from %d candidates",
                    level, stats.pairs, stats.triplets, stats.candidates)

    mesh = None
    if mesh_cell_deg is not None:
        mesh = build_mesh_table(network, mesh_cell_deg)
        report.mesh_entries = len(mesh)
        report.mesh_cell_deg = mesh_cell_deg
    report.wall_seconds = time.perf_counter() - started
    logger.info("Precompute finished in %.2f s", report.wall_seconds)
    return PrecomputeResult(store, mesh, report)
