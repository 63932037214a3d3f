"""
Precomputed trip fragments (triplets) and their sparse per-T storage.
"""
from dataclasses import dataclass
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp

N_MIN = 4
N_MAX = 16


@dataclass(frozen=True)
class Triplet:
    """A fragment Dep -> Via... -> Arr with its estimated end-to-end times"""
    via_stations: Tuple[int, ...]
    hop_sequence: Tuple[int, ...]
    typical_e2e_seconds: int
    min_e2e_seconds: int

    @property
    def transfers(self) -> int:
        return len(self.hop_sequence) - 1

    def sort_key(self) -> Tuple[int, Tuple[int, ...]]:
        return (self.typical_e2e_seconds, self.hop_sequence)


class TripletMatrix:
    """
    Sparse (dep_node, arr_node) -> sorted triplet list for one T.

    Lists live in a flat slot table; a CSR matrix maps each pair to its
    slot (+1, so that zero means absent).
    """

    def __init__(self, node_count: int, entries: Dict[Tuple[int, int], Sequence[Triplet]]):
        self.node_count = node_count
        keys = sorted(k for k, v in entries.items() if v)
        self._slots: List[Tuple[Triplet, ...]] = [tuple(entries[k]) for k in keys]
        if keys:
            rows = np.fromiter((k[0] for k in keys), dtype=np.int64, count=len(keys))
            cols = np.fromiter((k[1] for k in keys), dtype=np.int64, count=len(keys))
            data = np.arange(1, len(keys) + 1, dtype=np.int64)
        else:
            rows = cols = data = np.zeros(0, dtype=np.int64)
        self._matrix = sp.csr_matrix((data, (rows, cols)), shape=(node_count, node_count))
        self._matrix.sort_indices()

    def get(self, dep: int, arr: int) -> Tuple[Triplet, ...]:
        """Stored list for a pair; empty when the pair is absent"""
        if not (0 <= dep < self.node_count):
            return ()
        start, end = self._matrix.indptr[dep], self._matrix.indptr[dep + 1]
        cols = self._matrix.indices[start:end]
        pos = int(np.searchsorted(cols, arr))
        if pos < len(cols) and cols[pos] == arr:
            return self._slots[int(self._matrix.data[start + pos]) - 1]
        return ()

    def row(self, dep: int) -> Iterator[Tuple[int, Tuple[Triplet, ...]]]:
        """Yield (arr_node, list) for every stored pair in a row"""
        if not (0 <= dep < self.node_count):
            return
        start, end = self._matrix.indptr[dep], self._matrix.indptr[dep + 1]
        for col, slot in zip(self._matrix.indices[start:end], self._matrix.data[start:end]):
            yield int(col), self._slots[int(slot) - 1]

    def pairs(self) -> Iterator[Tuple[Tuple[int, int], Tuple[Triplet, ...]]]:
        for dep in range(self.node_count):
            for arr, triplets in self.row(dep):
                yield (dep, arr), triplets

    @property
    def pair_count(self) -> int:
        return len(self._slots)

    @property
    def triplet_count(self) -> int:
        return sum(len(s) for s in self._slots)

    def __eq__(self, other) -> bool:
        return isinstance(other, TripletMatrix) and list(self.pairs()) == list(other.pairs())


class TripletStore:
    """Triplet matrices keyed by transfer count T"""

    def __init__(self, node_count: int, layers: Optional[Dict[int, TripletMatrix]] = None):
        self.node_count = node_count
        self.layers: Dict[int, TripletMatrix] = dict(layers or {})

    def has(self, t: int) -> bool:
        return t in self.layers

    def get(self, t: int, dep: int, arr: int) -> Tuple[Triplet, ...]:
        layer = self.layers.get(t)
        return layer.get(dep, arr) if layer is not None else ()

    def row(self, t: int, dep: int) -> Iterator[Tuple[int, Tuple[Triplet, ...]]]:
        layer = self.layers.get(t)
        if layer is None:
            return iter(())
        return layer.row(dep)

    def set_layer(self, t: int, matrix: TripletMatrix):
        self.layers[t] = matrix

    @property
    def levels(self) -> List[int]:
        return sorted(self.layers)

    def __eq__(self, other) -> bool:
        return (isinstance(other, TripletStore) and self.levels == other.levels
                and all(self.layers[t] == other.layers[t] for t in self.levels))


def retention_limit(degree: int) -> int:
    """N(pair) = clamp(4 + floor(log2(degree)), 4, 16)"""
    if degree <= 1:
        return N_MIN
    return max(N_MIN, min(N_MAX, N_MIN + degree.bit_length() - 1))
