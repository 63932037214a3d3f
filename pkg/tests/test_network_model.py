import pytest

from src.core.errors import ValidationError
from src.core.models.hop import Mode
from src.core.models.network import AIR_TRANSFER_SECONDS, DEFAULT_TRANSFER_SECONDS, walk_seconds
from src.data.builder import NetworkBuilder
from src.graph.clustering import cluster_labels, cluster_stations

from .networks import DAY, EXPRESS_AC, LOCAL_AB, LOCAL_BC, T0, cluster_network, corridor_builder


def test_builder_numbers_hops_by_stations_and_route(corridor):
    assert corridor.station_count == 3
    assert [(h.from_station, h.to_station) for h in corridor.hops] == [(0, 1), (0, 2), (1, 2)]
    assert corridor.hops[EXPRESS_AC].route_name == "X9"
    assert corridor.out_hops(0) == (LOCAL_AB, EXPRESS_AC)
    assert corridor.in_hops(2) == (EXPRESS_AC, LOCAL_BC)
    assert corridor.horizon == (T0, T0 + 3 * DAY)


def test_summary_counts_events_and_blocks(corridor):
    summary = corridor.summary()

    assert summary['events'] == 41
    assert summary['blocks'] == 3, "both local services are single periodic runs"
    assert summary['nodes'] == 3


def test_route_distance_is_at_least_geodesic(corridor):
    hop = corridor.hops[EXPRESS_AC]
    assert hop.route_distance_m == pytest.approx(corridor.distance_m(0, 2))
    assert corridor.min_duration(EXPRESS_AC) == 900


def test_transfer_rules():
    builder = corridor_builder()
    a, b = builder.station_id("A"), builder.station_id("B")
    airport = builder.add_station("Airfield", 39.30, -76.58, key="F")
    flight = builder.add_route("f1", "F1", "Air")
    builder.add_events(flight, b, airport, Mode.PLANE, [(T0 + 9000, 1800)])
    builder.add_unscheduled(b, a, Mode.WALK, 1800, 2500.0)
    network = builder.build()
    into_b = network.in_hops(b)[0]
    flight_hop = next(h.id for h in network.hops if h.mode is Mode.PLANE)
    walk_hop = next(h.id for h in network.hops if h.mode is Mode.WALK)
    bus_out = next(h for h in network.out_hops(b) if network.hops[h].mode is Mode.BUS)

    assert network.transfer_seconds(into_b, bus_out) == DEFAULT_TRANSFER_SECONDS
    assert network.transfer_seconds(into_b, flight_hop) == AIR_TRANSFER_SECONDS
    assert network.transfer_seconds(into_b, walk_hop) == 0, "no connection time before walking"

    builder.set_transfer_override(b, 120)
    overridden = builder.build()
    assert overridden.transfer_seconds(into_b, bus_out) == 120
    assert overridden.transfer_seconds(into_b, flight_hop) == 120


def test_builder_rejects_bad_input():
    builder = NetworkBuilder()
    a = builder.add_station("One", 39.0, -76.0)
    b = builder.add_station("Two", 39.1, -76.0)
    route = builder.add_route("r")
    with pytest.raises(ValidationError):
        builder.add_events(route, a, a, Mode.BUS, [(T0, 60)])
    with pytest.raises(ValidationError):
        builder.add_events(route, a, b, Mode.BUS, [(T0, 0)])
    with pytest.raises(ValidationError):
        builder.add_unscheduled(a, b, Mode.BUS, 60)
    with pytest.raises(ValidationError):
        builder.add_station("Nowhere", 95.0, 0.0)
    assert builder.add_unscheduled(a, b, Mode.WALK, 60)
    assert not builder.add_unscheduled(a, b, Mode.WALK, 90), "one walk hop per pair"


def test_duplicate_departures_keep_the_shortest_ride():
    builder = NetworkBuilder()
    a = builder.add_station("One", 39.0, -76.0)
    b = builder.add_station("Two", 39.1, -76.0)
    route = builder.add_route("r")
    builder.add_events(route, a, b, Mode.BUS, [(T0, 600), (T0 + 600, 600)])
    builder.add_events(route, a, b, Mode.BUS, [(T0, 540)])
    network = builder.build()

    assert network.hops[0].departures.decode() == [(T0, 540), (T0 + 600, 600)]
    assert network.horizon == (T0, T0 + 601)


def test_merge_reindexes_stations_and_keeps_keys():
    first = corridor_builder()
    second = NetworkBuilder()
    c = second.add_station("Cedar Park", 39.29, -76.55, key="C")
    d = second.add_station("Dogwood", 39.29, -76.52, key="D")
    route = second.add_route("r9", "009", "Metro")
    second.add_events(route, c, d, Mode.BUS, [(T0 + 9000, 600)])
    network = first.merge(second).build()

    assert network.station_count == 4, "shared key C is one station"
    cedar = [s.id for s in network.stations if s.name == "Cedar Park"]
    assert len(cedar) == 1
    assert any(h.from_station == cedar[0] and network.stations[h.to_station].name == "Dogwood" for h in network.hops)


def test_cluster_nodes_and_displacement():
    network = cluster_network()
    birch, annex = 1, 3

    assert network.node_count == 3
    assert network.node_of(birch) == network.node_of(annex)
    assert set(network.node_members(network.node_of(birch))) == {birch, annex}
    assert network.displacement_m(birch, annex) == pytest.approx(1.3 * network.distance_m(birch, annex))
    shuttle = next(h for h in network.out_hops(annex))
    assert network.transfer_seconds(LOCAL_AB, shuttle) == \
        DEFAULT_TRANSFER_SECONDS + walk_seconds(network.displacement_m(birch, annex))
    assert LOCAL_AB in network.node_in_hops(network.node_of(annex))


def test_cluster_labels_are_transitive(corridor):
    assert cluster_labels(corridor, 0) == [0, 1, 2]
    assert cluster_labels(corridor, 2700) == [0, 0, 0], "A-B and B-C within radius chain A to C"
    assert cluster_stations(corridor, 100).node_count == 3
    with pytest.raises(ValidationError):
        cluster_labels(corridor, -1)
