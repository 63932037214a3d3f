import json

import pytest

from src.core.data_service import NetworkService
from web_app import create_app

from .networks import EXPRESS_AC, LOCAL_AB, LOCAL_BC, T0


@pytest.fixture
def service(corridor_file):
    return NetworkService().load(corridor_file)


@pytest.fixture
def client(service):
    app = create_app(service)
    app.config['TESTING'] = True
    return app.test_client()


def plan_lines(client, *requests):
    body = "\n".join(r if isinstance(r, str) else json.dumps(r) for r in requests)
    response = client.post('/plan', data=body, content_type='application/x-ndjson')
    assert response.status_code == 200
    assert response.mimetype == 'application/x-ndjson'
    return [json.loads(line) for line in response.get_data(as_text=True).splitlines()]


def hops(answer):
    return [leg['hop_id'] for leg in answer['itinerary']['legs']]


def test_batch_is_answered_in_order(client):
    answers = plan_lines(
        client,
        {'id': 'first', 'from': 'Alder', 'to': 'Cedar', 'dep_after': T0 + 3600},
        "{not json",
        {'from': 'a', 'to': 'Cedar'},
        "",
        {'id': 7, 'from': 'Birch', 'to': 'Cedar', 'dep_after': T0 + 3600},
    )

    assert len(answers) == 4, "blank lines are skipped"
    assert answers[0]['id'] == 'first' and hops(answers[0]) == [EXPRESS_AC]
    assert answers[1]['line'] == 2 and answers[1]['error'].startswith("Malformed JSON")
    assert answers[2]['line'] == 3 and len(answers[2]['candidates']) == 3
    assert answers[3]['id'] == 7 and hops(answers[3]) == [LOCAL_BC]


def test_answers_match_the_service(client, service):
    request = {'from': '0', 'to': '2', 'dep_after': T0 + 3600}
    (answer,) = plan_lines(client, request)

    expected = service.plan_request(dict(request)).to_dict()
    answer['stats'].pop('elapsed_ms')
    expected['stats'].pop('elapsed_ms')
    assert answer == expected


def test_unknown_fields_are_reported(client):
    (answer,) = plan_lines(client, {'from': '0', 'to': '2', 'speed': 'fast'})

    assert "Unknown request fields" in answer['error']


def test_bad_field_types_fail_only_their_line(client):
    answers = plan_lines(
        client,
        {'from': '0', 'to': '2', 'weights': [1, 2]},
        {'from': '0', 'to': '2', 'flex': 'sometimes'},
        {'from': '0', 'to': '2', 'dep_after': T0 + 3600, 'flex': 'false', 'allow_taxi': 'no'},
    )

    assert answers[0]['line'] == 1 and "'weights' must be" in answers[0]['error']
    assert answers[1]['line'] == 2 and "'flex' must be true or false" in answers[1]['error']
    assert answers[2]['query']['flexible_window'] is False
    assert answers[2]['query']['allow_taxi'] is False
    assert hops(answers[2]) == [EXPRESS_AC]


def test_overlay_changes_later_answers(client):
    request = {'from': '0', 'to': '2', 'dep_after': T0 + 3600}
    response = client.post('/overlay', data=f"# signal failure\n{EXPRESS_AC} 0 cancelled\n")
    assert response.get_json() == {'overlay_epoch': 1}

    (answer,) = plan_lines(client, request)
    assert hops(answer) == [LOCAL_AB, LOCAL_BC]
    assert answer['overlay_epoch'] == 1

    cleared = client.delete(f'/overlay?hop_id={EXPRESS_AC}')
    assert cleared.get_json() == {'overlay_epoch': 2}
    (answer,) = plan_lines(client, request)
    assert hops(answer) == [EXPRESS_AC]


def test_bad_overlay_lines_are_rejected(client):
    response = client.post('/overlay', data="1 0 late\n")

    assert response.status_code == 400
    assert 'error' in response.get_json()
    assert client.get('/api/status').get_json()['overlay_epoch'] == 0


def test_status_and_unloaded_service():
    app = create_app(NetworkService())
    client = app.test_client()

    assert client.get('/api/status').get_json()['data_loaded'] is False
    response = client.post('/plan', data='{"from": "0", "to": "1"}')
    assert response.status_code == 400
    assert client.get('/missing').status_code == 404


def test_status_of_a_loaded_network(client):
    status = client.get('/api/status').get_json()

    assert status['data_loaded'] is True
    assert status['stations'] == 3 and status['hops'] == 3
    assert status['triplet_levels'] == [] and status['mesh_entries'] == 0
