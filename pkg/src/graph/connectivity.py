"""
Schedule-free connectivity analysis.

Transfers are counted as boardings minus one; walk, taxi and bicycle hops
are free. Clusters are one node, so moving within a cluster is free too.
The mesh table keeps, for every ordered pair of geographic cells, the lowest
transfer count between any two of their stations.
"""
import logging
import math
from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components, dijkstra

from ..core.models.network import Network

logger = logging.getLogger(__name__)

Cell = Tuple[int, int]
CHUNK = 256


@dataclass
class ReachProfile:
    """Stations reachable from one origin and their minimum transfer counts"""
    station: int
    reachable_count: int
    min_transfers_histogram: List[int]
    transfers: Dict[int, int] = field(default_factory=dict)
    edges_scanned: int = 0


def profile_search(network: Network, origin: int) -> ReachProfile:
    """Breadth-first reachability from a station; unscheduled hops cost no boarding"""
    network.check_station(origin)
    start = network.node_of(origin)
    boardings = [math.inf] * network.node_count
    boardings[start] = 0
    queue = deque([start])
    scanned = 0
    while queue:
        node = queue.popleft()
        for hop_id in network.node_out_hops(node):
            scanned += 1
            hop = network.hops[hop_id]
            cost = 1 if hop.scheduled else 0
            target = network.node_of(hop.to_station)
            if boardings[node] + cost < boardings[target]:
                boardings[target] = boardings[node] + cost
                if cost:
                    queue.append(target)
                else:
                    queue.appendleft(target)

    transfers: Dict[int, int] = {}
    for station in range(network.station_count):
        level = boardings[network.node_of(station)]
        if station != origin and level != math.inf:
            transfers[station] = max(0, int(level) - 1)
    histogram = [0] * (max(transfers.values()) + 1 if transfers else 0)
    for level in transfers.values():
        histogram[level] += 1
    return ReachProfile(origin, len(transfers), histogram, transfers, scanned)


def node_graph(network: Network) -> sp.csr_matrix:
    """
    Node adjacency weighted 1 per scheduled hop and a tiny epsilon per
    unscheduled hop; rounding a path length gives its boarding count.
    """
    n = network.node_count
    epsilon = 0.25 / max(1, n)
    rows, cols, weights = [], [], []
    for hop in network.hops:
        a, b = network.node_of(hop.from_station), network.node_of(hop.to_station)
        if a == b:
            continue
        rows.append(a)
        cols.append(b)
        weights.append(1.0 if hop.scheduled else epsilon)
    return min_weight_matrix(rows, cols, weights, n)


def min_weight_matrix(rows, cols, weights, n: int) -> sp.csr_matrix:
    """Sparse n x n matrix keeping the smallest weight of parallel entries"""
    if len(rows) == 0:
        return sp.csr_matrix((n, n))
    rows, cols = np.asarray(rows, dtype=np.int64), np.asarray(cols, dtype=np.int64)
    weights = np.asarray(weights, dtype=float)
    # csr construction would add parallel entries up
    keys = rows * n + cols
    order = np.lexsort((weights, keys))
    keys, weights = keys[order], weights[order]
    first = np.concatenate(([True], keys[1:] != keys[:-1]))
    keys, weights = keys[first], weights[first]
    return sp.csr_matrix((weights, (keys // n, keys % n)), shape=(n, n))


def transfer_levels(network: Network, origins: Iterable[int],
                    graph: Optional[sp.csr_matrix] = None) -> np.ndarray:
    """Minimum transfers from each origin node to every node; -1 when unreachable"""
    graph = node_graph(network) if graph is None else graph
    origins = list(origins)
    if not origins:
        return np.zeros((0, network.node_count), dtype=np.int64)
    distances = dijkstra(graph, directed=True, indices=origins)
    levels = np.where(np.isinf(distances), -1, np.maximum(0, np.rint(np.nan_to_num(distances, posinf=0)) - 1))
    return levels.astype(np.int64)


class MeshTable:
    """Sparse lower bound on transfers, keyed by ordered (cell, cell) pairs"""

    def __init__(self, cell_deg: float = 0.5, entries: Optional[Dict[Tuple[Cell, Cell], int]] = None):
        if cell_deg <= 0:
            raise ValueError("cell_deg must be positive")
        self.cell_deg = float(cell_deg)
        self.entries: Dict[Tuple[Cell, Cell], int] = dict(entries or {})

    def cell(self, lat: float, lon: float) -> Cell:
        return (int(math.floor(lat / self.cell_deg)), int(math.floor(lon / self.cell_deg)))

    def fold(self, key: Tuple[Cell, Cell], value: int):
        current = self.entries.get(key)
        if current is None or value < current:
            self.entries[key] = int(value)

    def merge(self, other: 'MeshTable') -> 'MeshTable':
        """Commutative min-merge of two tables with equal spacing"""
        if other.cell_deg != self.cell_deg:
            raise ValueError("Cannot merge mesh tables with different spacing")
        merged = MeshTable(self.cell_deg, self.entries)
        for key, value in other.entries.items():
            merged.fold(key, value)
        return merged

    def lookup(self, cell_a: Cell, cell_b: Cell) -> Optional[int]:
        return self.entries.get((cell_a, cell_b))

    def bound(self, network: Network, dep: int, arr: int) -> Optional[int]:
        """Lower bound on transfers between two stations, None when unknown"""
        a, b = network.stations[dep], network.stations[arr]
        return self.lookup(self.cell(a.lat, a.lon), self.cell(b.lat, b.lon))

    def __len__(self) -> int:
        return len(self.entries)

    def __eq__(self, other) -> bool:
        return isinstance(other, MeshTable) and self.cell_deg == other.cell_deg and self.entries == other.entries


def build_mesh_table(network: Network, cell_deg: float = 0.5) -> MeshTable:
    """All-pairs transfer levels folded by min into ordered cell pairs"""
    mesh = MeshTable(cell_deg)
    if network.station_count == 0:
        return mesh

    station_cells = [mesh.cell(s.lat, s.lon) for s in network.stations]
    cell_ids = sorted(set(station_cells))
    cell_index = {c: k for k, c in enumerate(cell_ids)}
    # cells touched by each node
    node_cells: List[List[int]] = [sorted({cell_index[station_cells[s]] for s in network.node_members(node)})
                                   for node in range(network.node_count)]
    flat_nodes = np.array([node for node, cells in enumerate(node_cells) for _ in cells], dtype=np.int64)
    flat_cells = np.array([c for cells in node_cells for c in cells], dtype=np.int64)

    graph = node_graph(network)
    table = np.full((len(cell_ids), len(cell_ids)), np.iinfo(np.int64).max, dtype=np.int64)
    for begin in range(0, network.node_count, CHUNK):
        origins = list(range(begin, min(network.node_count, begin + CHUNK)))
        levels = transfer_levels(network, origins, graph)
        for row, origin in enumerate(origins):
            if len(network.node_members(origin)) == 1:
                levels[row][origin] = -1
            reached = levels[row][flat_nodes]
            valid = reached >= 0
            best = np.full(len(cell_ids), np.iinfo(np.int64).max, dtype=np.int64)
            np.minimum.at(best, flat_cells[valid], reached[valid])
            for origin_cell in node_cells[origin]:
                np.minimum(table[origin_cell], best, out=table[origin_cell])

    missing = np.iinfo(np.int64).max
    for a, b in zip(*np.nonzero(table != missing)):
        mesh.entries[(cell_ids[a], cell_ids[b])] = int(table[a, b])
    logger.info("Built mesh table: %d cell pairs over %d cells (%.2f deg)", len(mesh), len(cell_ids), cell_deg)
    return mesh


def station_components(network: Network) -> List[List[int]]:
    """Strongly connected components of the station graph, largest first"""
    n = network.station_count
    if n == 0:
        return []
    rows = [h.from_station for h in network.hops]
    cols = [h.to_station for h in network.hops]
    # cluster members reach each other on foot
    for node in range(network.node_count):
        members = network.node_members(node)
        for a in members:
            for b in members:
                if a != b:
                    rows.append(a)
                    cols.append(b)
    graph = sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
    count, labels = connected_components(graph, directed=True, connection='strong')
    groups: Dict[int, List[int]] = {}
    for station, label in enumerate(labels):
        groups.setdefault(int(label), []).append(station)
    return sorted(groups.values(), key=lambda members: (-len(members), members[0]))


def connectivity_report(network: Network, island_listing_limit: int = 20) -> str:
    """Plain-text report of components, unreachable pairs and transfer levels"""
    components = station_components(network)
    n = network.station_count
    lines = ["connectivity report",
             f"stations: {n}  hops: {network.hop_count}  nodes: {network.node_count}",
             f"{len(components)} component" + ("" if len(components) == 1 else "s")]
    for index, members in enumerate(components, start=1):
        line = f"component {index}: {len(members)} stations"
        if index > 1:
            names = [network.stations[s].name for s in members[:island_listing_limit]]
            more = len(members) - len(names)
            line += ": " + ", ".join(names) + (f" (+{more} more)" if more > 0 else "")
        lines.append(line)

    histogram: Counter = Counter()
    unreachable = 0
    graph = node_graph(network)
    node_of = np.array([network.node_of(s) for s in range(n)], dtype=np.int64)
    origin_nodes = sorted(set(node_of.tolist()))
    for begin in range(0, len(origin_nodes), CHUNK):
        chunk = origin_nodes[begin:begin + CHUNK]
        levels = transfer_levels(network, chunk, graph)
        for row, node in enumerate(chunk):
            per_station = levels[row][node_of]
            # every member of the origin node sees the same levels, minus itself
            origins = int(np.count_nonzero(node_of == node))
            values, counts = np.unique(per_station[per_station >= 0], return_counts=True)
            for value, count in zip(values.tolist(), counts.tolist()):
                histogram[value] += count * origins
            histogram[0] -= origins
            unreachable += origins * int(np.count_nonzero(per_station < 0))

    pairs = n * (n - 1)
    lines.append(f"unreachable ordered pairs: {unreachable} of {pairs}")
    levels = sorted(k for k, v in histogram.items() if v > 0)
    if levels:
        lines.append("transfer histogram: " + "  ".join(f"{k}: {histogram[k]}" for k in levels))
        lines.append(f"max transfers: {levels[-1]}")
    return "\n".join(lines) + "\n"
