"""
Typical end-to-end time of a hop sequence.

Start times are drawn uniformly over the first two weeks of the horizon;
for each one the first leg is boarded at the earliest departure at or after
it (within the sample span), later legs are chained by earliest arrival and
the trip is timed from that boarding, so transfer waits count. The typical time is the mean of the samples left
after dropping outliers, the minimum is taken over all feasible samples.
"""
import logging
import math
from typing import Optional, Sequence, Tuple

import numpy as np

from ..core.models.network import Network
from ..core.settings import EstimatorConfig
from .chaining import Chainer, check_connected

logger = logging.getLogger(__name__)


def sample_starts(network: Network, config: Optional[EstimatorConfig] = None) -> np.ndarray:
    """Sample start times shared by every estimate in one precompute"""
    config = config or EstimatorConfig()
    config.validate()
    h0 = network.horizon[0]
    rng = np.random.default_rng(config.rng_seed)
    return rng.integers(h0, h0 + config.sample_horizon_seconds, size=config.sample_count)


def min_trip_time(network: Network, legs: Sequence[int], t_dep: int, span: int,
                  chainer: Optional[Chainer] = None) -> Optional[Tuple[int, int]]:
    """
    Trip over ``legs`` boarding the earliest first-leg departure in
    [t_dep, t_dep + span] that can be completed.

    Returns (board, arrive), or None when no trip starts in the span.
    """
    chainer = chainer or Chainer(network)
    for rides in chainer.trips(legs, t_dep, t_dep + span + 1):
        return rides[0].board_utc, rides[-1].alight_utc
    return None


def estimate_typical_time(network: Network, legs: Sequence[int], config: Optional[EstimatorConfig] = None,
                          samples: Optional[np.ndarray] = None,
                          chainer: Optional[Chainer] = None) -> Optional[Tuple[int, int]]:
    """
    (typical_seconds, min_seconds) over sampled start times, or None when
    no sample yields a trip.

    Raises:
        ContractViolation: legs do not form a connected path
    """
    config = config or EstimatorConfig()
    check_connected(network, legs)
    if samples is None:
        samples = sample_starts(network, config)
    chainer = chainer or Chainer(network)

    times = []
    for t in samples.tolist():
        trip = min_trip_time(network, legs, int(t), config.per_sample_span_seconds, chainer)
        if trip is not None:
            times.append(trip[1] - trip[0])
    if not times:
        return None

    values = np.asarray(times, dtype=float)
    mean = values.mean()
    survivors = values[np.abs(values - mean) <= config.outlier_threshold(mean)]
    if survivors.size == 0:
        survivors = values
    typical = int(math.floor(survivors.mean() + 0.5))
    return typical, int(values.min())
