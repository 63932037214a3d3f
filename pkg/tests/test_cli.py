import io
import json
import os

import pytest

from src.cli import EXIT_NO_ROUTE, EXIT_OK, EXIT_VALIDATION, main
from src.core.path_manager import NETWORK_ENV_VAR, path_manager
from src.data.network_file import read_network_file, write_network_file

from .networks import EXPRESS_AC, LOCAL_AB, LOCAL_BC, T0, island_network


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


@pytest.fixture
def line_spec(tmp_path):
    path = tmp_path / 'line.spec'
    path.write_text("topology = line\nstations = 5\ndays = 1\nheadways = 3600\n", encoding='utf-8')
    return str(path)


def test_build_from_a_generator_spec(tmp_path, line_spec):
    target = str(tmp_path / 'line.bbt')
    code, out, _ = run('build', '--generator', line_spec, '--seed', '3', '--no-walk', '-o', target)

    assert code == EXIT_OK
    assert out.startswith("stations: 5  hops: 8  events: ")
    assert read_network_file(target).network.station_count == 5
    assert path_manager.resolve_network_file() == target, "the last network is remembered"


def test_build_needs_a_source(tmp_path):
    code, _, err = run('build', '-o', str(tmp_path / 'empty.bbt'))

    assert code == EXIT_VALIDATION
    assert err.startswith("error: build needs at least one")


def test_plan_prints_the_report(corridor_file):
    code, out, _ = run('plan', corridor_file, '--from', 'Alder', '--to', 'Cedar Park',
                       '--dep-after', '2015-12-14T01:00:00')

    assert code == EXIT_OK
    assert out.startswith("From: Alder Street\n")
    assert "1. 20151214.200 Alder Street" in out


def test_plan_json_with_an_overlay(tmp_path, corridor_file):
    feed = tmp_path / 'cancellations.txt'
    feed.write_text(f"{EXPRESS_AC} 0 cancelled\n", encoding='utf-8')
    code, out, _ = run('plan', corridor_file, '--from', '0', '--to', '2', '--dep-after', str(T0 + 3600),
                       '--overlay', str(feed), '--json')

    assert code == EXIT_OK
    result = json.loads(out)
    assert [leg['hop_id'] for leg in result['itinerary']['legs']] == [LOCAL_AB, LOCAL_BC]
    assert result['overlay_epoch'] == 1
    assert result['query']['earliest_dep_utc'] == T0 + 3600


def test_plan_without_a_route_exits_3(tmp_path):
    path = str(tmp_path / 'island.bbt')
    write_network_file(path, island_network())
    code, out, _ = run('plan', path, '--from', 'Alder', '--to', 'Lonely')

    assert code == EXIT_NO_ROUTE
    assert "no route: Lonely Pier is not reachable from Alder Street" in out


def test_station_errors(corridor_file):
    code, _, err = run('plan', corridor_file, '--from', 'a', '--to', 'Cedar')
    assert code == EXIT_VALIDATION
    assert "Station 'a' is ambiguous (3 matches)" in err
    assert "  0: Alder Street\n" in err

    code, _, err = run('plan', corridor_file, '--from', 'Zebra Road', '--to', 'Cedar')
    assert code == EXIT_VALIDATION
    assert "Unknown station 'Zebra Road'" in err

    code, out, _ = run('plan', corridor_file, '--from', '39.2901,-76.6099', '--to', '2', '--json',
                       '--dep-after', str(T0 + 3600))
    assert code == EXIT_OK
    assert json.loads(out)['query']['dep_station'] == 0


def test_invalid_options_exit_2(corridor_file):
    assert run('plan', corridor_file, '--from', '0', '--to', '2', '--tmax', '9')[0] == EXIT_VALIDATION
    assert run('plan', corridor_file, '--from', '0', '--to', '2', '--weights', 'transfer')[0] == EXIT_VALIDATION
    assert run('plan', corridor_file, '--from', '0')[0] == EXIT_VALIDATION
    assert run('plan', '--from', '0', '--to', '2')[0] == EXIT_VALIDATION, "no network file anywhere"
    assert run('diagnose', corridor_file + '.missing')[0] == EXIT_VALIDATION


def test_precompute_updates_the_file(corridor_file):
    code, out, _ = run('precompute', corridor_file, '--samples', '16', '--seed', '1', '--levels', '1')

    assert code == EXIT_OK
    assert "T=1:" in out
    content = read_network_file(corridor_file)
    assert content.triplets is not None and 1 in content.triplets.levels
    assert content.mesh is not None
    assert content.precompute['levels']['1']['pairs'] >= 0
    assert os.path.exists(path_manager.get_report_path('precompute'))


def test_diagnose_uses_the_environment(monkeypatch, corridor_file):
    monkeypatch.setenv(NETWORK_ENV_VAR, corridor_file)
    code, out, _ = run('diagnose')

    assert code == EXIT_OK
    assert out.startswith("connectivity report\nstations: 3  hops: 3  nodes: 3\n")
    assert "3 components\n" in out, "the corridor only runs one way"
