import numpy as np
import pytest

from src.core.errors import ValidationError
from src.core.models.departures import Block, encode_departures
from src.core.models.hop import Hop, Mode


def test_periodic_run_becomes_one_block():
    departures = encode_departures([(600, 50), (1200, 50), (1800, 50), (2400, 50)])

    assert departures.blocks == (Block(600, 600, 4, 50),)
    assert departures.total_count == 4


def test_irregular_list_keeps_one_block_per_event():
    departures = encode_departures([(10, 5), (17, 5), (900, 8)])

    assert len(departures.blocks) == 3, "no run of three equal gaps"
    assert departures.decode() == [(10, 5), (17, 5), (900, 8)]


def test_duration_change_splits_a_run():
    events = [(0, 60), (100, 60), (200, 60), (300, 90), (400, 90), (500, 90)]
    departures = encode_departures(events)

    assert departures.blocks == (Block(0, 100, 3, 60), Block(300, 100, 3, 90))


def test_rejects_unordered_and_non_positive_durations():
    with pytest.raises(ValidationError):
        encode_departures([(100, 10), (100, 10)])
    with pytest.raises(ValidationError):
        encode_departures([(100, 10), (50, 10)])
    with pytest.raises(ValidationError):
        encode_departures([(100, 0)])


def test_locate_and_iterate_from_a_time():
    departures = encode_departures([(600, 50), (1200, 50), (1800, 50), (2400, 50), (5000, 70)])

    assert [dep for _, dep, _ in departures.iter_from(700)] == [1200, 1800, 2400, 5000]
    assert [ordinal for ordinal, _, _ in departures.iter_from(2401)] == [4]
    assert list(departures.iter_from(5001)) == []
    assert departures.event_at(4) == (5000, 70)
    with pytest.raises(ValidationError):
        departures.event_at(5)


def test_hop_window_queries():
    hop = Hop(0, 0, 1, 0, Mode.BUS, departures=encode_departures([(600, 50), (1200, 50), (1800, 50), (2400, 50)]))

    assert hop.next_event_at_or_after(700).dep_utc_seconds == 1200
    assert hop.next_event_at_or_after(2401) is None
    assert [e.dep_utc_seconds for e in hop.events_in_window(600, 1801)] == [600, 1200, 1800]
    assert hop.events_in_window(0, 600) == []
    split = hop.events_in_window(0, 1500) + hop.events_in_window(1500, 3000)
    assert split == hop.events_in_window(0, 3000), "adjacent windows partition the events"
    assert hop.event(3).arr_utc_seconds == 2450


def test_week_of_periodic_departures_compresses_five_fold():
    week_start = 1450051200
    events = []
    for day in range(7):
        first = week_start + day * 86400 + 6 * 3600
        events.extend((first + k * 600, 1500) for k in range(96))
    departures = encode_departures(events)

    assert len(departures.blocks) * 5 <= len(events), \
        f"{len(departures.blocks)} blocks for {len(events)} events"
    assert departures.decode() == events


@pytest.mark.acceptance
def test_random_irregular_lists_decode_to_themselves():
    rng = np.random.default_rng(2015)
    for _ in range(10_000):
        size = int(rng.integers(1, 40))
        gaps = rng.choice([60, 120, 300, 300, 300, 900], size=size) + rng.integers(0, 3, size=size) * rng.integers(0, 2, size=size)
        deps = np.cumsum(gaps) + 1450051200
        durations = rng.choice([300, 300, 420], size=size)
        events = [(int(d), int(u)) for d, u in zip(deps, durations)]

        assert encode_departures(events).decode() == events
