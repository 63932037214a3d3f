"""
Repetition-compressed departure lists.

A hop's departures are kept as blocks of arithmetic progressions sharing one
duration. Periodicity is exploited when present but never assumed: a block of
count 1 is a single irregular departure.
"""
import bisect
from dataclasses import dataclass
from typing import Iterator, List, NamedTuple, Optional, Sequence, Tuple

from ..errors import ValidationError

# Shortest run that is stored as a periodic block
MIN_RUN = 3


class Block(NamedTuple):
    base_utc_seconds: int
    period_seconds: int
    count: int
    duration_seconds: int

    @property
    def last_dep(self) -> int:
        return self.base_utc_seconds + self.period_seconds * (self.count - 1)


@dataclass(frozen=True)
class Event:
    """A single departure on a hop"""
    dep_utc_seconds: int
    arr_utc_seconds: int
    hop_id: int
    ordinal: int

    @property
    def duration(self) -> int:
        return self.arr_utc_seconds - self.dep_utc_seconds


class DepartureList:
    """Immutable, ordered, repetition-compressed list of (departure, duration) events"""

    __slots__ = ('blocks', 'total_count', '_bases', '_ordinals')

    def __init__(self, blocks: Sequence[Block] = ()):
        self.blocks: Tuple[Block, ...] = tuple(Block(*b) for b in blocks)
        ordinals = []
        total = 0
        for block in self.blocks:
            ordinals.append(total)
            total += block.count
        self.total_count = total
        self._bases = [b.base_utc_seconds for b in self.blocks]
        self._ordinals = ordinals

    def __eq__(self, other) -> bool:
        return isinstance(other, DepartureList) and self.blocks == other.blocks

    def __hash__(self) -> int:
        return hash(self.blocks)

    def __len__(self) -> int:
        return self.total_count

    def __repr__(self) -> str:
        return f"DepartureList({len(self.blocks)} blocks, {self.total_count} events)"

    @property
    def first_dep(self) -> Optional[int]:
        return self.blocks[0].base_utc_seconds if self.blocks else None

    @property
    def last_dep(self) -> Optional[int]:
        return self.blocks[-1].last_dep if self.blocks else None

    def decode(self) -> List[Tuple[int, int]]:
        """Expand to the full (dep_utc, duration) list"""
        events: List[Tuple[int, int]] = []
        for base, period, count, duration in self.blocks:
            events.extend((base + k * period, duration) for k in range(count))
        return events

    def event_at(self, ordinal: int) -> Tuple[int, int]:
        """(dep_utc, duration) of the event with this ordinal"""
        if not 0 <= ordinal < self.total_count:
            raise ValidationError(f"Event ordinal {ordinal} out of range 0..{self.total_count - 1}")
        index = bisect.bisect_right(self._ordinals, ordinal) - 1
        block = self.blocks[index]
        k = ordinal - self._ordinals[index]
        return block.base_utc_seconds + k * block.period_seconds, block.duration_seconds

    def locate(self, t: int) -> Optional[Tuple[int, int]]:
        """(block index, index within block) of the first event with dep >= t"""
        index = bisect.bisect_right(self._bases, t) - 1
        if index >= 0:
            block = self.blocks[index]
            if block.last_dep >= t:
                if t <= block.base_utc_seconds:
                    return index, 0
                # ceiling division: first k with base + k*period >= t
                k = -(-(t - block.base_utc_seconds) // block.period_seconds)
                return index, k
        if index + 1 < len(self.blocks):
            return index + 1, 0
        return None

    def iter_from(self, t: int) -> Iterator[Tuple[int, int, int]]:
        """Yield (ordinal, dep_utc, duration) ascending, starting at the first dep >= t"""
        position = self.locate(t)
        if position is None:
            return
        index, k = position
        while index < len(self.blocks):
            base, period, count, duration = self.blocks[index]
            ordinal = self._ordinals[index]
            while k < count:
                yield ordinal + k, base + k * period, duration
                k += 1
            index += 1
            k = 0

    def min_duration(self) -> int:
        if not self.blocks:
            raise ValidationError("Departure list is empty")
        return min(b.duration_seconds for b in self.blocks)


def encode_departures(events: Sequence[Tuple[int, int]]) -> DepartureList:
    """
    Compress (dep_utc, duration) events into blocks.

    Greedy maximal runs of at least ``MIN_RUN`` events with a constant gap
    and a constant duration become one block; everything else is stored as
    single-event blocks. Lossless.
    """
    n = len(events)
    for i, (dep, duration) in enumerate(events):
        if duration <= 0:
            raise ValidationError(f"Non-positive duration {duration} at departure {dep}")
        if i and dep <= events[i - 1][0]:
            raise ValidationError(
                f"Departures must be strictly ascending: {events[i - 1][0]} then {dep}",
                {'index': i})

    blocks: List[Block] = []
    i = 0
    while i < n:
        dep, duration = events[i]
        if i + 2 < n and events[i + 1][1] == duration and events[i + 2][1] == duration \
                and events[i + 1][0] - dep == events[i + 2][0] - events[i + 1][0]:
            period = events[i + 1][0] - dep
            j = i + 2
            while j + 1 < n and events[j + 1][1] == duration and events[j + 1][0] - events[j][0] == period:
                j += 1
            blocks.append(Block(dep, period, j - i + 1, duration))
            i = j + 1
        else:
            blocks.append(Block(dep, 0, 1, duration))
            i += 1
    return DepartureList(blocks)
