"""
Real-time overlay: non-destructive annotations on individual departures.

An Overlay is an immutable snapshot; applying or clearing annotations
returns a new snapshot with a higher epoch. Queries take one snapshot when
they start, so later changes never affect a running query.
"""
import logging
import threading
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Iterable, Iterator, List, Optional, Tuple

from .errors import LoadError, ValidationError
from .models.departures import Event
from .models.network import Network

logger = logging.getLogger(__name__)


class AnnotationKind(Enum):
    DELAY = 'delay'
    CANCELLED = 'cancelled'
    FARE = 'fare'
    SEATS = 'seats'


@dataclass(frozen=True)
class Annotation:
    """One annotation on the departure ``ordinal`` of hop ``hop_id``"""
    hop_id: int
    ordinal: int
    kind: AnnotationKind
    dep_delta_seconds: int = 0
    arr_delta_seconds: int = 0
    fare_amount: Optional[float] = None
    currency: str = ""
    seats_available: bool = True
    valid_from_utc: Optional[int] = None
    valid_to_utc: Optional[int] = None

    @property
    def key(self) -> Tuple[int, AnnotationKind]:
        return (self.ordinal, self.kind)

    def valid_at(self, t: int) -> bool:
        if self.valid_from_utc is not None and t < self.valid_from_utc:
            return False
        if self.valid_to_utc is not None and t >= self.valid_to_utc:
            return False
        return True

    @classmethod
    def delay(cls, hop_id: int, ordinal: int, dep_delta: int, arr_delta: int, **kwargs) -> 'Annotation':
        return cls(hop_id, ordinal, AnnotationKind.DELAY, dep_delta_seconds=dep_delta,
                   arr_delta_seconds=arr_delta, **kwargs)

    @classmethod
    def cancelled(cls, hop_id: int, ordinal: int, **kwargs) -> 'Annotation':
        return cls(hop_id, ordinal, AnnotationKind.CANCELLED, **kwargs)

    @classmethod
    def fare(cls, hop_id: int, ordinal: int, amount: float, currency: str = "", **kwargs) -> 'Annotation':
        return cls(hop_id, ordinal, AnnotationKind.FARE, fare_amount=amount, currency=currency, **kwargs)

    @classmethod
    def seats(cls, hop_id: int, ordinal: int, available: bool, **kwargs) -> 'Annotation':
        return cls(hop_id, ordinal, AnnotationKind.SEATS, seats_available=available, **kwargs)


@dataclass(frozen=True)
class AnnotationSelector:
    """Matches annotations by hop, ordinal and kind; empty matches everything"""
    hop_id: Optional[int] = None
    ordinal: Optional[int] = None
    kind: Optional[AnnotationKind] = None

    def matches(self, annotation: Annotation) -> bool:
        return ((self.hop_id is None or annotation.hop_id == self.hop_id)
                and (self.ordinal is None or annotation.ordinal == self.ordinal)
                and (self.kind is None or annotation.kind is self.kind))


@dataclass(frozen=True)
class EffectiveEvent:
    """A departure after annotations, with an optional fare"""
    event: Event
    fare: Optional[float] = None


class Overlay:
    """Immutable annotation index keyed by hop id, then (ordinal, kind)"""

    def __init__(self, index: Optional[Dict[int, Dict[Tuple[int, AnnotationKind], Annotation]]] = None,
                 epoch: int = 0):
        self._index = {hop: dict(entries) for hop, entries in (index or {}).items() if entries}
        self.epoch = epoch
        self._bounds: Dict[int, Tuple[int, int, int]] = {}
        for hop_id, entries in self._index.items():
            deltas = [(a.dep_delta_seconds, a.arr_delta_seconds - a.dep_delta_seconds)
                      for a in entries.values() if a.kind is AnnotationKind.DELAY]
            low = min([d for d, _ in deltas] + [0])
            high = max([d for d, _ in deltas] + [0])
            shrink = min([s for _, s in deltas] + [0])
            self._bounds[hop_id] = (low, high, shrink)

    def __len__(self) -> int:
        return sum(len(entries) for entries in self._index.values())

    @property
    def is_empty(self) -> bool:
        return not self._index

    def annotations(self) -> Iterator[Annotation]:
        for hop_id in sorted(self._index):
            entries = self._index[hop_id]
            for key in sorted(entries, key=lambda k: (k[0], k[1].value)):
                yield entries[key]

    def has_hop(self, hop_id: int) -> bool:
        return hop_id in self._index

    def has_fares(self, hop_id: int) -> bool:
        return any(a.kind is AnnotationKind.FARE for a in self._index.get(hop_id, {}).values())

    def dep_delta_bounds(self, hop_id: int) -> Tuple[int, int]:
        """(lowest, highest) departure shift over delay annotations on a hop, both including 0"""
        low, high, _ = self._bounds.get(hop_id, (0, 0, 0))
        return low, high

    def duration_shrink(self, hop_id: int) -> int:
        """Largest reduction (<= 0) of any event duration on a hop"""
        return self._bounds.get(hop_id, (0, 0, 0))[2]

    def apply(self, network: Network, annotation: Annotation) -> 'Overlay':
        """Return a new snapshot with the annotation added; same key replaces"""
        self._check(network, annotation)
        index = {hop: dict(entries) for hop, entries in self._index.items()}
        index.setdefault(annotation.hop_id, {})[annotation.key] = annotation
        return Overlay(index, self.epoch + 1)

    def apply_all(self, network: Network, annotations: Iterable[Annotation]) -> 'Overlay':
        index = {hop: dict(entries) for hop, entries in self._index.items()}
        for annotation in annotations:
            self._check(network, annotation)
            index.setdefault(annotation.hop_id, {})[annotation.key] = annotation
        return Overlay(index, self.epoch + 1)

    def clear(self, selector: Optional[AnnotationSelector] = None) -> 'Overlay':
        """Remove matching annotations; an empty selector clears all"""
        selector = selector or AnnotationSelector()
        index = {hop: {k: a for k, a in entries.items() if not selector.matches(a)}
                 for hop, entries in self._index.items()}
        removed = len(self) - sum(len(e) for e in index.values())
        logger.debug("Cleared %d annotations", removed)
        return Overlay(index, self.epoch + 1)

    def active_at(self, t: int) -> 'Overlay':
        """Snapshot holding only annotations valid at ``t``, same epoch"""
        index = {hop: {k: a for k, a in entries.items() if a.valid_at(t)}
                 for hop, entries in self._index.items()}
        return Overlay(index, self.epoch)

    def effective_event(self, network: Network, hop_id: int, ordinal: int) -> Optional[EffectiveEvent]:
        """Baseline event with annotations applied, or None when rejected"""
        event = network.hops[hop_id].event(ordinal)
        entries = self._index.get(hop_id)
        if not entries:
            return EffectiveEvent(event)
        if (ordinal, AnnotationKind.CANCELLED) in entries:
            return None
        seats = entries.get((ordinal, AnnotationKind.SEATS))
        if seats is not None and not seats.seats_available:
            return None
        delay = entries.get((ordinal, AnnotationKind.DELAY))
        if delay is not None:
            event = Event(event.dep_utc_seconds + delay.dep_delta_seconds,
                          event.arr_utc_seconds + delay.arr_delta_seconds, hop_id, ordinal)
        fare = entries.get((ordinal, AnnotationKind.FARE))
        return EffectiveEvent(event, fare.fare_amount if fare is not None else None)

    @staticmethod
    def _check(network: Network, annotation: Annotation):
        if not 0 <= annotation.hop_id < network.hop_count:
            raise ValidationError(f"Annotation references unknown hop {annotation.hop_id}")
        hop = network.hops[annotation.hop_id]
        if not hop.scheduled:
            raise ValidationError(f"Hop {hop.id} has no departures to annotate")
        if not 0 <= annotation.ordinal < hop.departures.total_count:
            raise ValidationError(f"Hop {hop.id} has no departure with ordinal {annotation.ordinal}")
        if annotation.kind is AnnotationKind.DELAY:
            dep, duration = hop.departures.event_at(annotation.ordinal)
            if duration + annotation.arr_delta_seconds - annotation.dep_delta_seconds <= 0:
                raise ValidationError("Delayed arrival must stay after delayed departure",
                                      {'hop_id': hop.id, 'ordinal': annotation.ordinal})
        if annotation.kind is AnnotationKind.FARE and (annotation.fare_amount is None or annotation.fare_amount < 0):
            raise ValidationError("Fare annotation needs a non-negative amount")
        if (annotation.valid_from_utc is not None and annotation.valid_to_utc is not None
                and annotation.valid_from_utc >= annotation.valid_to_utc):
            raise ValidationError("Annotation validity interval is empty")


class OverlayStore:
    """Holds the current overlay snapshot; writers serialize on a lock"""

    def __init__(self, network: Network, overlay: Optional[Overlay] = None):
        self.network = network
        self._overlay = overlay or Overlay()
        self._lock = threading.Lock()

    def snapshot(self) -> Overlay:
        return self._overlay

    @property
    def epoch(self) -> int:
        return self._overlay.epoch

    def apply(self, annotations: Iterable[Annotation]) -> int:
        with self._lock:
            self._overlay = self._overlay.apply_all(self.network, annotations)
            return self._overlay.epoch

    def clear(self, selector: Optional[AnnotationSelector] = None) -> int:
        with self._lock:
            self._overlay = self._overlay.clear(selector)
            return self._overlay.epoch


# ----------------------------------------------------------------------
# Annotation feed: "hop_id ordinal kind args valid_from valid_to"
# ----------------------------------------------------------------------

def _optional_int(text: str) -> Optional[int]:
    return None if text == '-' else int(text)


def parse_annotation_line(line: str) -> Optional[Annotation]:
    """Parse one feed line; blank lines and ``#`` comments give None"""
    text = line.split('#', 1)[0].strip()
    if not text:
        return None
    parts = text.split()
    if len(parts) not in (3, 4, 6):
        raise ValidationError(f"Annotation needs 'hop ordinal kind [args [from to]]': {line.strip()}")
    try:
        hop_id, ordinal = int(parts[0]), int(parts[1])
        kind = AnnotationKind(parts[2].lower())
        args = parts[3] if len(parts) > 3 else '-'
        valid_from = _optional_int(parts[4]) if len(parts) == 6 else None
        valid_to = _optional_int(parts[5]) if len(parts) == 6 else None
        validity = {'valid_from_utc': valid_from, 'valid_to_utc': valid_to}
        if kind is AnnotationKind.DELAY:
            dep_delta, arr_delta = (int(v) for v in args.split(','))
            return Annotation.delay(hop_id, ordinal, dep_delta, arr_delta, **validity)
        if kind is AnnotationKind.CANCELLED:
            return Annotation.cancelled(hop_id, ordinal, **validity)
        if kind is AnnotationKind.FARE:
            amount, _, currency = args.partition(',')
            return Annotation.fare(hop_id, ordinal, float(amount), currency, **validity)
        if args not in ('0', '1', 'true', 'false'):
            raise ValueError(f"seats value '{args}'")
        return Annotation.seats(hop_id, ordinal, args in ('1', 'true'), **validity)
    except ValueError as e:
        raise ValidationError(f"Malformed annotation '{line.strip()}': {e}") from e


def format_annotation(annotation: Annotation) -> str:
    """Feed line for an annotation"""
    kind = annotation.kind
    if kind is AnnotationKind.DELAY:
        args = f"{annotation.dep_delta_seconds},{annotation.arr_delta_seconds}"
    elif kind is AnnotationKind.FARE:
        args = f"{annotation.fare_amount:g}" + (f",{annotation.currency}" if annotation.currency else "")
    elif kind is AnnotationKind.SEATS:
        args = '1' if annotation.seats_available else '0'
    else:
        args = '-'
    valid_from = '-' if annotation.valid_from_utc is None else str(annotation.valid_from_utc)
    valid_to = '-' if annotation.valid_to_utc is None else str(annotation.valid_to_utc)
    return f"{annotation.hop_id} {annotation.ordinal} {kind.value} {args} {valid_from} {valid_to}"


def parse_annotations(lines: Iterable[str]) -> List[Annotation]:
    annotations = []
    for line in lines:
        annotation = parse_annotation_line(line)
        if annotation is not None:
            annotations.append(annotation)
    return annotations


def load_annotation_feed(path: str) -> List[Annotation]:
    """Read a line-delimited annotation feed"""
    try:
        with open(path, 'r', encoding='utf-8') as f:
            lines = f.readlines()
    except OSError as e:
        raise LoadError(f"Cannot read annotation feed: {e}", path=path) from e
    annotations = []
    for lineno, line in enumerate(lines, start=1):
        try:
            annotation = parse_annotation_line(line)
        except ValidationError as e:
            raise LoadError(str(e), path=path, record=str(lineno)) from e
        if annotation is not None:
            annotations.append(annotation)
    logger.info("Loaded %d annotations from %s", len(annotations), path)
    return annotations
