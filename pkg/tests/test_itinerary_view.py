from src.core.overlay import Annotation, Overlay
from src.graph.search import plan
from src.ui.itinerary_view import (
    ItineraryView, format_count, format_distance, format_duration, format_local_time, render_result,
)

from .networks import EXPRESS_AC, LOCAL_BC, T0, cluster_network, island_network, two_zone_network


def test_durations():
    assert format_duration(8 * 3600 + 120) == "8 hours 2 min"
    assert format_duration(3600) == "1 hour"
    assert format_duration(2700) == "45 min"
    assert format_duration(7200 + 29) == "2 hours", "rounded to the minute"
    assert format_duration(0) == "0 min"


def test_distances_and_counts():
    assert format_distance(990) == "990 m"
    assert format_distance(3830) == "3.83 Km"
    assert format_distance(776_300) == "776.3 Km"
    assert format_count(1500, 'K') == "1.50 K"
    assert format_count(2_000_000, 'M') == "2.00 M"


def test_local_times_follow_the_station():
    network = two_zone_network()

    assert format_local_time(T0 + 36000, network, 0) == "20151214.1000"
    assert format_local_time(T0 + 37800, network, 1) == "20151214.530", "five hours behind UTC"
    assert format_local_time(T0 + 300, network, 0) == "20151214.5"


def test_corridor_report(corridor, exact_query):
    overlay = Overlay().apply(corridor, Annotation.cancelled(EXPRESS_AC, 0))
    result = plan(corridor, None, overlay, exact_query(0, 2))

    lines = render_result(corridor, result).splitlines()
    assert lines[:5] == ["From: Alder Street", "39.290000,-76.610000", "To: Cedar Park", "39.290000,-76.550000", ""]
    assert lines[5].startswith("summary: BB 25 min "), "mode letters of the legs come first"
    assert lines[5].endswith(" 1 stops next in 30 min")
    assert lines[7] == "1. 20151214.120 Alder Street 39.2900000,-76.6100000"
    assert lines[8].startswith("bus 001 Metro 10 min ")
    assert lines[9] == "20151214.130 Birch Square 39.2900000,-76.5800000"
    assert lines[10] == "2. 20151214.135 continue with 5 min transfer time"
    assert lines[11].startswith("bus 002 Metro 10 min ")
    assert lines[12] == "20151214.145 Cedar Park 39.2900000,-76.5500000"
    assert lines[-1].startswith("evaluated ") and lines[-1].endswith(" milliseconds")


def test_cluster_change_is_shown(exact_query):
    network = cluster_network()
    overlay = Overlay().apply_all(network, [Annotation.cancelled(EXPRESS_AC, 0)]
                                  + [Annotation.cancelled(LOCAL_BC, k) for k in range(20)])
    result = plan(network, None, overlay, exact_query(0, 2))

    lines = ItineraryView(network).legs(result.itinerary)
    assert lines[3] == ""
    assert lines[4] == "Birch Annex 39.2913500,-76.5800000 within 200 m"
    assert lines[5] == "2. 20151214.135 continue with 15 min transfer time"
    assert lines[6].startswith("bus S1 Metro 8 min ")


def test_no_route_report(exact_query):
    network = island_network()
    result = plan(network, None, None, exact_query(0, 3))

    text = ItineraryView(network).render(result)
    assert "no route: Lonely Pier is not reachable from Alder Street\n" in text
    assert "summary:" not in text
