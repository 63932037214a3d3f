import pytest

from src.core.models.hop import Mode
from src.core.models.triplet import Triplet, TripletMatrix, TripletStore, retention_limit
from src.core.settings import EstimatorConfig
from src.data.builder import NetworkBuilder
from src.data.network_file import NetworkFile, encode_network_file
from src.data.synthetic import GeneratorSpec, generate_synthetic
from src.graph.triplets import build_direct_matrix, build_triplets, min_transfer_pair_table, precompute

from .networks import DAY, EXPRESS_AC, FAMILY_SPECS, LOCAL_AB, LOCAL_BC, T0, family_network

# every sample starts within the first hour of service
EARLY = EstimatorConfig(sample_count=16, sample_horizon_seconds=3600)


def diamond_network():
    """A to D via Beech (two 5 min rides) or via Chestnut (two 10 min rides), every 10 min"""
    builder = NetworkBuilder()
    a = builder.add_station("Ash", 39.29, -76.61, key="A")
    b = builder.add_station("Beech", 39.30, -76.60, key="B")
    c = builder.add_station("Chestnut", 39.28, -76.60, key="C")
    d = builder.add_station("Dogwood", 39.29, -76.59, key="D")
    starts = [T0 + 600 + k * 600 for k in range(20)]
    for key, (x, y, duration) in {"ab": (a, b, 300), "bd": (b, d, 300), "ac": (a, c, 600), "cd": (c, d, 600)}.items():
        route = builder.add_route(key, key.upper(), "Metro")
        builder.add_events(route, x, y, Mode.BUS, [(s, duration) for s in starts])
    return builder.build()


def test_retention_limit_grows_with_degree():
    assert retention_limit(0) == 4
    assert retention_limit(2) == 5
    assert retention_limit(8) == 7
    assert retention_limit(4096) == 16
    assert retention_limit(10 ** 9) == 16


def test_transfer_pair_table(corridor):
    assert min_transfer_pair_table(corridor) == {(LOCAL_AB, LOCAL_BC): 300}


def test_direct_matrix_keeps_every_served_pair(corridor):
    direct = build_direct_matrix(corridor, EARLY)

    assert [pair for pair, _ in direct.pairs()] == [(0, 1), (0, 2), (1, 2)]
    assert direct.get(0, 2) == (Triplet((), (EXPRESS_AC,), 900, 900),)
    assert direct.get(0, 1)[0].typical_e2e_seconds == 600
    assert direct.get(2, 0) == ()


def test_one_transfer_fragment(corridor):
    direct = build_direct_matrix(corridor, EARLY)
    level_one = build_triplets(corridor, 1, {0: direct}, EARLY)

    assert level_one.pair_count == 1
    assert level_one.get(0, 2) == (Triplet((1,), (LOCAL_AB, LOCAL_BC), 1800, 1800),)
    with pytest.raises(ValueError):
        build_triplets(corridor, 3, {0: direct}, EARLY)


def test_faster_via_comes_first():
    network = diamond_network()
    result = precompute(network, levels=[1], config=EARLY, mesh_cell_deg=None)

    fragments = result.triplets.get(1, 0, 3)
    assert [f.via_stations for f in fragments] == [(1,), (2,)]
    assert [f.typical_e2e_seconds for f in fragments] == [900, 1800]
    assert result.mesh is None


def test_precompute_report(corridor):
    result = precompute(corridor, config=EARLY)
    report = result.report

    assert result.triplets.levels == [0, 1, 2]
    assert report.levels[1].pairs == 1 and report.levels[1].triplets == 1
    assert report.levels[2].triplets == 0
    assert result.mesh is not None and report.mesh_entries == len(result.mesh)
    data = report.to_dict()
    assert 'wall_seconds' not in data and 'workers' not in data
    assert data['levels']['1']['triplets'] == 1
    text = report.to_text()
    assert "T=1: 1 pairs, 1 triplets" in text
    assert "samples: 16 (seed 0)" in text
    with pytest.raises(ValueError):
        precompute(corridor, levels=[3], config=EARLY)


def test_store_lookups():
    fragment = Triplet((1,), (0, 2), 1800, 1700)
    store = TripletStore(3, {1: TripletMatrix(3, {(0, 2): [fragment], (1, 2): []})})

    assert store.has(1) and not store.has(0)
    assert store.get(1, 0, 2) == (fragment,)
    assert store.get(1, 1, 2) == (), "empty lists are not stored"
    assert store.get(0, 0, 2) == ()
    assert list(store.row(1, 0)) == [(2, (fragment,))]
    assert list(store.row(2, 0)) == []
    assert fragment.transfers == 1


@pytest.mark.acceptance
def test_precompute_is_identical_across_workers():
    network = family_network('random')
    config = EstimatorConfig(sample_count=16, rng_seed=5)

    single = precompute(network, config=config, workers=1)
    double = precompute(network, config=config, workers=2)

    assert single.triplets == double.triplets
    assert single.mesh == double.mesh
    files = [encode_network_file(NetworkFile(network, r.triplets, r.mesh, r.report.to_dict()))
             for r in (single, double)]
    assert files[0] == files[1], "network files must be byte-identical"


@pytest.mark.acceptance
@pytest.mark.parametrize("spec", [
    FAMILY_SPECS['line'],
    GeneratorSpec(topology='grid', stations=100, days=2, headways=(1800,), spacing_m=1500.0),
], ids=['line', 'grid-10x10'])
def test_stored_pairs_stay_well_below_quadratic(spec):
    network = generate_synthetic(spec, seed=7)
    result = precompute(network, config=EstimatorConfig(sample_count=8, sample_horizon_seconds=DAY),
                        mesh_cell_deg=None)

    assert sorted(result.report.levels) == [0, 1, 2]
    for level, stats in result.report.levels.items():
        assert 0 < stats.pairs <= network.station_count ** 1.6, f"T={level}: {stats.pairs} pairs"
