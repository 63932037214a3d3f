import pytest

from src.core.errors import LoadError, ValidationError
from src.core.models.hop import Mode
from src.core.overlay import (
    Annotation, AnnotationKind, AnnotationSelector, Overlay, OverlayStore, format_annotation,
    load_annotation_feed, parse_annotation_line, parse_annotations,
)

from .networks import EXPRESS_AC, LOCAL_AB, T0, corridor_builder


def test_effective_event_applies_delay_fare_and_rejections(corridor):
    overlay = Overlay().apply_all(corridor, [
        Annotation.delay(EXPRESS_AC, 0, 120, 60),
        Annotation.fare(EXPRESS_AC, 0, 7.5, "USD"),
        Annotation.cancelled(LOCAL_AB, 0),
        Annotation.seats(LOCAL_AB, 1, False),
        Annotation.seats(LOCAL_AB, 2, True),
    ])

    express = overlay.effective_event(corridor, EXPRESS_AC, 0)
    assert (express.event.dep_utc_seconds, express.event.arr_utc_seconds) == (T0 + 7320, T0 + 8160)
    assert express.fare == 7.5
    assert overlay.effective_event(corridor, LOCAL_AB, 0) is None, "cancelled"
    assert overlay.effective_event(corridor, LOCAL_AB, 1) is None, "sold out"
    assert overlay.effective_event(corridor, LOCAL_AB, 2).event.dep_utc_seconds == T0 + 4800
    assert overlay.effective_event(corridor, LOCAL_AB, 3).fare is None
    assert overlay.has_fares(EXPRESS_AC) and not overlay.has_fares(LOCAL_AB)
    assert overlay.dep_delta_bounds(EXPRESS_AC) == (0, 120)
    assert overlay.duration_shrink(EXPRESS_AC) == -60


def test_snapshots_are_immutable_and_epochs_increase(corridor):
    base = Overlay()
    delayed = base.apply(corridor, Annotation.delay(LOCAL_AB, 4, 300, 300))
    replaced = delayed.apply(corridor, Annotation.delay(LOCAL_AB, 4, 60, 60))

    assert base.is_empty and len(base) == 0
    assert (base.epoch, delayed.epoch, replaced.epoch) == (0, 1, 2)
    assert len(replaced) == 1, "same hop, ordinal and kind replaces"
    assert replaced.effective_event(corridor, LOCAL_AB, 4).event.dep_utc_seconds == T0 + 3600 + 2400 + 60
    assert delayed.effective_event(corridor, LOCAL_AB, 4).event.dep_utc_seconds == T0 + 3600 + 2400 + 300


def test_clear_by_selector(corridor):
    overlay = Overlay().apply_all(corridor, [
        Annotation.cancelled(LOCAL_AB, 0),
        Annotation.cancelled(LOCAL_AB, 1),
        Annotation.fare(LOCAL_AB, 1, 2.0),
        Annotation.cancelled(EXPRESS_AC, 0),
    ])

    fares_gone = overlay.clear(AnnotationSelector(kind=AnnotationKind.FARE))
    assert len(fares_gone) == 3 and not fares_gone.has_fares(LOCAL_AB)
    one_hop = overlay.clear(AnnotationSelector(hop_id=LOCAL_AB))
    assert [a.hop_id for a in one_hop.annotations()] == [EXPRESS_AC]
    one_ordinal = overlay.clear(AnnotationSelector(hop_id=LOCAL_AB, ordinal=1))
    assert len(one_ordinal) == 2
    everything = overlay.clear()
    assert everything.is_empty and everything.epoch == overlay.epoch + 1


def test_validity_window_filters_annotations(corridor):
    overlay = Overlay().apply(corridor, Annotation.cancelled(
        EXPRESS_AC, 0, valid_from_utc=T0 + 3600, valid_to_utc=T0 + 7200))

    assert not overlay.active_at(T0 + 3600).is_empty
    assert overlay.active_at(T0 + 7200).is_empty, "valid_to is exclusive"
    assert overlay.active_at(T0).is_empty
    assert overlay.active_at(T0).epoch == overlay.epoch


def test_invalid_annotations_are_rejected():
    builder = corridor_builder()
    builder.add_unscheduled(builder.station_id("A"), builder.station_id("B"), Mode.WALK, 1900, 2600.0)
    network = builder.build()
    walk = next(h.id for h in network.hops if h.mode is Mode.WALK)

    bad = [
        Annotation.cancelled(99, 0),
        Annotation.cancelled(walk, 0),
        Annotation.cancelled(LOCAL_AB, 20),
        Annotation.delay(LOCAL_AB, 0, 600, 0),
        Annotation.fare(LOCAL_AB, 0, -1.0),
        Annotation.cancelled(LOCAL_AB, 0, valid_from_utc=T0, valid_to_utc=T0),
    ]
    for annotation in bad:
        with pytest.raises(ValidationError):
            Overlay().apply(network, annotation)


def test_store_serializes_writes(corridor):
    store = OverlayStore(corridor)
    before = store.snapshot()

    assert store.apply([Annotation.cancelled(EXPRESS_AC, 0)]) == 1
    assert before.is_empty, "earlier snapshots stay unchanged"
    assert store.clear(AnnotationSelector(hop_id=EXPRESS_AC)) == 2
    assert store.snapshot().is_empty and store.epoch == 2
    with pytest.raises(ValidationError):
        store.apply([Annotation.cancelled(EXPRESS_AC, 5)])
    assert store.epoch == 2


def test_parse_feed_lines():
    assert parse_annotation_line("  # operator notice") is None
    assert parse_annotation_line("") is None
    assert parse_annotation_line("1 0 cancelled") == Annotation.cancelled(1, 0)
    assert parse_annotation_line("0 3 delay 120,180") == Annotation.delay(0, 3, 120, 180)
    assert parse_annotation_line("2 1 fare 3.5,EUR - 1450060000") == \
        Annotation.fare(2, 1, 3.5, "EUR", valid_to_utc=1450060000)
    assert parse_annotation_line("2 1 SEATS 0 # full") == Annotation.seats(2, 1, False)
    for text in ("1 0", "1 0 late", "x 0 cancelled", "1 0 delay 60", "1 0 seats maybe", "1 0 cancelled - 5"):
        with pytest.raises(ValidationError):
            parse_annotation_line(text)


def test_format_is_read_back():
    annotations = [
        Annotation.delay(0, 3, -60, 30, valid_from_utc=T0),
        Annotation.fare(1, 0, 12.25, "USD"),
        Annotation.seats(2, 4, True),
        Annotation.cancelled(1, 0, valid_to_utc=T0 + 60),
    ]

    assert format_annotation(annotations[0]) == f"0 3 delay -60,30 {T0} -"
    assert parse_annotations(format_annotation(a) for a in annotations) == annotations


def test_feed_file_errors_name_the_record(tmp_path):
    feed = tmp_path / 'feed.txt'
    feed.write_text("# delays\n0 1 delay 60,60\n\n1 0 fare abc\n", encoding='utf-8')

    with pytest.raises(LoadError) as excinfo:
        load_annotation_feed(str(feed))
    assert excinfo.value.record == "4"
    assert "record 4" in str(excinfo.value)

    feed.write_text("0 1 delay 60,60\n1 0 cancelled\n", encoding='utf-8')
    assert len(load_annotation_feed(str(feed))) == 2
    with pytest.raises(LoadError):
        load_annotation_feed(str(tmp_path / 'missing.txt'))
