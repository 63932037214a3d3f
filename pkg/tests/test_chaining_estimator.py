import numpy as np
import pytest

from src.core.errors import ContractViolation
from src.core.models.hop import Mode
from src.core.overlay import Annotation, Overlay
from src.core.settings import EstimatorConfig
from src.data.builder import NetworkBuilder
from src.data.synthetic import GeneratorSpec, generate_synthetic
from src.graph.chaining import Chainer, check_connected
from src.graph.estimator import estimate_typical_time, min_trip_time, sample_starts

from .networks import DAY, EXPRESS_AC, LOCAL_AB, LOCAL_BC, T0, corridor_builder
from .oracles import oracle_min_trip, oracle_samples, oracle_typical_time


def walk_feeder_network():
    """The corridor plus Willow Lane, a five minute walk from Alder Street"""
    builder = corridor_builder()
    willow = builder.add_station("Willow Lane", 39.2935, -76.61, key="W")
    builder.add_unscheduled(willow, builder.station_id("A"), Mode.WALK, 300, 400.0)
    network = builder.build()
    walk = next(h.id for h in network.hops if h.mode is Mode.WALK)
    return network, walk


def test_best_ride_takes_earliest_arrival(corridor):
    chainer = Chainer(corridor)

    ride = chainer.best_ride(LOCAL_AB, T0 + 3601)
    assert (ride.board_utc, ride.alight_utc, ride.ordinal) == (T0 + 4200, T0 + 4800, 1)
    assert chainer.best_ride(LOCAL_AB, T0 + 3 * DAY) is None
    assert chainer.scanned > 0


def test_best_ride_sees_delays_out_of_order(corridor):
    # the 01:10 bus is held 15 min and now leaves after the 01:20 one
    overlay = Overlay().apply(corridor, Annotation.delay(LOCAL_AB, 1, 900, 900))
    chainer = Chainer(corridor, overlay)

    ride = chainer.best_ride(LOCAL_AB, T0 + 4000)
    assert (ride.board_utc, ride.ordinal) == (T0 + 4800, 2)
    options = chainer.ride_options(LOCAL_AB, T0 + 4000, 3)
    assert [r.ordinal for r in options] == [2, 1, 3, 4], "options come in effective departure order"
    assert options[1].board_utc == T0 + 5100


def test_chain_follows_transfers(corridor):
    rides = Chainer(corridor).forward([LOCAL_AB, LOCAL_BC], T0 + 4200)

    assert [(r.board_utc, r.alight_utc) for r in rides] == [(T0 + 4200, T0 + 4800), (T0 + 5700, T0 + 6300)]
    assert Chainer(corridor).forward([LOCAL_AB, LOCAL_BC], T0 + 2 * DAY) is None


def test_unscheduled_prefix_is_timed_backward():
    network, walk = walk_feeder_network()
    chainer = Chainer(network)
    legs = [walk, LOCAL_AB]

    assert chainer.lead(legs) == (1, 600), "walk plus the connection time at Alder Street"
    trips = list(chainer.trips(legs, T0 + 3000, T0 + 4300))
    assert [t[0].board_utc for t in trips] == [T0 + 3000, T0 + 3600, T0 + 4200]
    assert [(t[1].board_utc, t[1].alight_utc) for t in trips][0] == (T0 + 3600, T0 + 4200)
    assert trips[0][0].alight_utc == T0 + 3300

    walk_only = list(chainer.trips([walk], T0 + 100, T0 + 200))
    assert len(walk_only) == 1 and (walk_only[0][0].board_utc, walk_only[0][0].alight_utc) == (T0 + 100, T0 + 400)


def test_check_connected(corridor):
    check_connected(corridor, [LOCAL_AB, LOCAL_BC])
    with pytest.raises(ContractViolation):
        check_connected(corridor, [LOCAL_BC, LOCAL_AB])
    with pytest.raises(ContractViolation):
        check_connected(corridor, [])
    with pytest.raises(ContractViolation):
        estimate_typical_time(corridor, [EXPRESS_AC, LOCAL_AB])


def test_min_trip_time_boards_the_earliest_departure(corridor):
    legs = [LOCAL_AB, LOCAL_BC]

    assert min_trip_time(corridor, legs, T0 + 3600, 3600) == (T0 + 3600, T0 + 5400)
    # the 01:10 bus just misses the 01:20 connection and waits for 01:35
    assert min_trip_time(corridor, legs, T0 + 4200, 3600) == (T0 + 4200, T0 + 6300)
    assert min_trip_time(corridor, legs, T0 + 2 * DAY, 3600) is None
    for t in range(T0, T0 + 20000, 700):
        assert min_trip_time(corridor, legs, t, 3000) == oracle_min_trip(corridor, legs, t, 3000)


def test_typical_time_of_a_regular_service(corridor):
    config = EstimatorConfig(sample_count=16, sample_horizon_seconds=4 * 3600)

    assert estimate_typical_time(corridor, [LOCAL_AB], config) == (600, 600)
    assert estimate_typical_time(corridor, [EXPRESS_AC], config,
                                 samples=np.full(8, T0 + 8000)) is None


def test_long_transfer_waits_count():
    builder = NetworkBuilder()
    a = builder.add_station("Oak Row", 39.29, -76.61)
    b = builder.add_station("Pine Hill", 39.29, -76.60)
    c = builder.add_station("Quarry Gate", 39.29, -76.59)
    builder.add_events(builder.add_route("shuttle"), a, b, Mode.BUS, [(T0 + k * 600, 100) for k in range(30)])
    builder.add_events(builder.add_route("daily"), b, c, Mode.BUS, [(T0 + 10000, 100)])
    network = builder.build()
    legs = [h.id for h in network.hops]
    assert [network.hops[h].from_station for h in legs] == [a, b]

    assert min_trip_time(network, legs, T0, 20000) == (T0, T0 + 10100)
    assert estimate_typical_time(network, legs, samples=np.full(4, T0)) == (10100, 10100)


def test_more_service_never_slows_the_typical_trip():
    legs = [LOCAL_AB, LOCAL_BC]
    samples = np.arange(T0 + 3000, T0 + 9000, 500)
    sparse = corridor_builder().build()
    builder = corridor_builder()
    b, c = builder.station_id("B"), builder.station_id("C")
    builder.add_events(builder.add_route("r2"), b, c, Mode.BUS, [(T0 + 4350 + k * 900, 600) for k in range(20)])
    dense = builder.build()
    assert len(dense.hops[LOCAL_BC].departures) == 40

    before = estimate_typical_time(sparse, legs, samples=samples)
    after = estimate_typical_time(dense, legs, samples=samples)
    assert after[0] <= before[0] and after[1] <= before[1]
    assert after[0] < before[0], "half the connections now wait 7.5 min less"


def test_samples_are_reproducible(corridor):
    config = EstimatorConfig(rng_seed=42)
    samples = sample_starts(corridor, config)

    assert samples.shape == (64,)
    assert samples.min() >= T0 and samples.max() < T0 + 14 * DAY
    assert np.array_equal(samples, sample_starts(corridor, EstimatorConfig(rng_seed=42)))
    assert np.array_equal(samples, oracle_samples(T0, 64, 14 * DAY, 42))


def random_legs(network, rng, max_legs):
    """A connected scheduled hop sequence from a random first hop"""
    legs = [int(rng.integers(network.hop_count))]
    target = int(rng.integers(1, max_legs + 1))
    while len(legs) < target:
        options = [h for h in network.out_hops(network.hops[legs[-1]].to_station)
                   if network.hops[h].to_station != network.hops[legs[-1]].from_station]
        if not options:
            break
        legs.append(int(options[int(rng.integers(len(options)))]))
    return legs


@pytest.mark.acceptance
def test_estimator_matches_brute_force():
    spec = GeneratorSpec(topology='grid', stations=9, days=14, headways=(1800, 2700, 3600), irregularity=0.5,
                         spacing_m=1500.0)
    network = generate_synthetic(spec, seed=3)
    rng = np.random.default_rng(99)

    for k in range(100):
        legs = random_legs(network, rng, 3)
        config = EstimatorConfig(sample_count=16, rng_seed=k, per_sample_span_seconds=DAY)
        samples = oracle_samples(network.horizon[0], 16, config.sample_horizon_seconds, k)
        expected = oracle_typical_time(network, legs, samples, config.per_sample_span_seconds)

        assert estimate_typical_time(network, legs, config) == expected, f"legs {legs}"
