"""
Single-linkage clustering of nearby stations.
"""
import logging
from typing import List

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from ..core.errors import ValidationError
from ..core.geo import SpatialGrid
from ..core.models.network import Network

logger = logging.getLogger(__name__)


def cluster_labels(network: Network, radius_m: float) -> List[int]:
    """Cluster id per station, numbered by lowest member id"""
    if radius_m < 0:
        raise ValidationError("Cluster radius must be non-negative")
    n = network.station_count
    if radius_m == 0 or n < 2:
        return list(range(n))

    pairs = list(SpatialGrid(network.lats, network.lons, radius_m).pairs_within(radius_m))
    rows = np.array([i for i, _, _ in pairs], dtype=np.int64)
    cols = np.array([j for _, j, _ in pairs], dtype=np.int64)
    graph = sp.csr_matrix((np.ones(len(pairs)), (rows, cols)), shape=(n, n))
    _, labels = connected_components(graph, directed=False)

    renumber = {}
    for label in labels.tolist():
        renumber.setdefault(label, len(renumber))
    return [renumber[label] for label in labels.tolist()]


def cluster_stations(network: Network, radius_m: float) -> Network:
    """
    Group stations within ``radius_m`` of each other (transitively).

    Search and precompute then treat each cluster as one node; itineraries
    still report the member stations actually used.
    """
    labels = cluster_labels(network, radius_m)
    clustered = network.with_clusters(labels)
    logger.info("Clustered %d stations into %d nodes (radius %.0f m)",
                network.station_count, clustered.node_count, radius_m)
    return clustered
