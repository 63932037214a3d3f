"""
Event chaining along a fixed hop sequence.

A trip over a hop sequence is fixed by its first scheduled boarding: every
later leg takes the feasible event with the earliest arrival, which is exact
for the earliest-arrival objective even when durations vary per departure.
Unscheduled legs before the first scheduled one are timed backward from that
boarding, so the trip starts as late as possible.
"""
import logging
from dataclasses import dataclass
from typing import Iterator, List, Optional, Sequence, Tuple

from ..core.errors import ContractViolation
from ..core.models.network import Network
from ..core.overlay import Overlay

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Ride:
    """One leg of a timed trip"""
    hop_id: int
    board_utc: int
    alight_utc: int
    ordinal: Optional[int] = None
    fare: Optional[float] = None


def check_connected(network: Network, hop_ids: Sequence[int]):
    """Raise ContractViolation unless consecutive hops meet at a node"""
    if not hop_ids:
        raise ContractViolation("Empty hop sequence")
    for a, b in zip(hop_ids, hop_ids[1:]):
        if not network.connects(a, b):
            raise ContractViolation(f"Hop {a} does not connect to hop {b}")


class Chainer:
    """Times hop sequences against a network and an optional overlay snapshot"""

    def __init__(self, network: Network, overlay: Optional[Overlay] = None):
        self.network = network
        self.overlay = overlay if overlay is not None and not overlay.is_empty else None
        self.scanned = 0

    def _annotated(self, hop_id: int) -> bool:
        return self.overlay is not None and self.overlay.has_hop(hop_id)

    def _scan(self, hop_id: int, t0: int) -> Iterator[Tuple[int, Optional[Ride]]]:
        """
        Yield (baseline departure, effective ride or None when rejected) for
        every event whose effective departure may be at or after ``t0``.
        Baseline departures ascend; effective ones need not.
        """
        hop = self.network.hops[hop_id]
        if self._annotated(hop_id):
            low, high = self.overlay.dep_delta_bounds(hop_id)
            for ordinal, dep, _ in hop.departures.iter_from(t0 - high):
                self.scanned += 1
                effective = self.overlay.effective_event(self.network, hop_id, ordinal)
                if effective is None or effective.event.dep_utc_seconds < t0:
                    yield dep + low, None
                    continue
                yield dep + low, Ride(hop_id, effective.event.dep_utc_seconds,
                                      effective.event.arr_utc_seconds, ordinal, effective.fare)
        else:
            for ordinal, dep, duration in hop.departures.iter_from(t0):
                self.scanned += 1
                yield dep, Ride(hop_id, dep, dep + duration, ordinal)

    def rides_in_window(self, hop_id: int, t0: int, t1: int) -> Iterator[Ride]:
        """Effective rides with t0 <= board < t1 on a scheduled hop"""
        for earliest, ride in self._scan(hop_id, t0):
            if earliest >= t1:
                return
            if ride is not None and ride.board_utc < t1:
                yield ride

    def best_ride(self, hop_id: int, ready: int) -> Optional[Ride]:
        """Ride with the earliest arrival among those boarding at or after ``ready``"""
        hop = self.network.hops[hop_id]
        if not hop.scheduled:
            return Ride(hop_id, ready, ready + hop.fixed_duration_seconds, fare=None)
        best: Optional[Ride] = None
        for earliest, ride in self._scan(hop_id, ready):
            if best is not None and earliest >= best.alight_utc:
                break
            if ride is not None and (best is None or ride.alight_utc < best.alight_utc):
                best = ride
        return best

    def ride_options(self, hop_id: int, ready: int, limit: int) -> List[Ride]:
        """The earliest-arrival ride plus up to ``limit`` feasible rides in departure order"""
        best = self.best_ride(hop_id, ready)
        if best is None:
            return []
        options = {best.ordinal: best}
        for _, ride in self._scan(hop_id, ready):
            if len(options) > limit:
                break
            if ride is not None:
                options.setdefault(ride.ordinal, ride)
        return sorted(options.values(), key=lambda r: (r.board_utc, r.alight_utc, r.ordinal))

    def lead(self, hop_ids: Sequence[int]) -> Tuple[Optional[int], int]:
        """Index of the first scheduled hop and the seconds needed before boarding it"""
        offset = 0
        for k, hop_id in enumerate(hop_ids):
            hop = self.network.hops[hop_id]
            if hop.scheduled:
                return k, offset
            offset += hop.fixed_duration_seconds
            if k + 1 < len(hop_ids):
                offset += self.network.transfer_seconds(hop_id, hop_ids[k + 1])
        return None, offset

    def forward(self, hop_ids: Sequence[int], start: int, rides: Optional[List[Ride]] = None) -> Optional[List[Ride]]:
        """Chain the remaining hops after ``rides`` (or from ``start``) by earliest arrival"""
        rides = list(rides or [])
        for k in range(len(rides), len(hop_ids)):
            hop_id = hop_ids[k]
            ready = start if k == 0 else rides[-1].alight_utc + self.network.transfer_seconds(hop_ids[k - 1], hop_id)
            ride = self.best_ride(hop_id, ready)
            if ride is None:
                return None
            rides.append(ride)
        return rides

    def unscheduled_prefix(self, hop_ids: Sequence[int], count: int, start: int) -> List[Ride]:
        rides = self.forward(hop_ids[:count], start)
        return rides if rides is not None else []

    def first_boardings(self, hop_ids: Sequence[int], w0: int, w1: int) -> Iterator[List[Ride]]:
        """
        Yield the rides up to and including the first scheduled one, for every
        trip start in [w0, w1). A sequence without scheduled hops starts at w0.
        """
        first, offset = self.lead(hop_ids)
        if first is None:
            if w0 < w1:
                yield self.unscheduled_prefix(hop_ids, len(hop_ids), w0)
            return
        for ride in self.rides_in_window(hop_ids[first], w0 + offset, w1 + offset):
            prefix = self.unscheduled_prefix(hop_ids, first, ride.board_utc - offset)
            yield prefix + [ride]

    def trips(self, hop_ids: Sequence[int], w0: int, w1: int) -> Iterator[List[Ride]]:
        """Earliest-arrival trip for every first boarding whose trip starts in [w0, w1)"""
        for head in self.first_boardings(hop_ids, w0, w1):
            rides = self.forward(hop_ids, w0, head)
            if rides is not None:
                yield rides
