"""
Shared fixtures: small networks, isolated config/output directories and a
fresh global network service per test.
"""
import pytest

from src.core import data_service
from src.core.models.itinerary import Query
from src.core.path_manager import CONFIG_ENV_VAR, NETWORK_ENV_VAR, path_manager
from src.data.network_file import write_network_file

from .networks import T0, corridor_network


@pytest.fixture(autouse=True)
def isolated_paths(tmp_path, monkeypatch):
    """Keep config files, reports and the last-network record inside tmp_path"""
    monkeypatch.delenv(NETWORK_ENV_VAR, raising=False)
    monkeypatch.delenv(CONFIG_ENV_VAR, raising=False)
    monkeypatch.delenv('BBTIME_LOG_LEVEL', raising=False)
    monkeypatch.setattr(path_manager, 'config_dir', str(tmp_path / 'config'))
    monkeypatch.setattr(path_manager, 'output_base_dir', str(tmp_path / 'out'))
    monkeypatch.setattr(path_manager, 'current_output_dir', None)
    monkeypatch.setattr(path_manager, 'current_run_id', None)
    data_service.reset_network_service()
    yield
    data_service.reset_network_service()


@pytest.fixture
def corridor():
    return corridor_network()


@pytest.fixture
def corridor_file(tmp_path, corridor):
    path = tmp_path / 'corridor.bbt'
    write_network_file(str(path), corridor)
    return str(path)


@pytest.fixture
def exact_query():
    """Query factory with heuristics off: no geo gate, no budget, fixed window"""
    def make(dep: int, arr: int, earliest: int = T0 + 3600, **kwargs) -> Query:
        options = dict(budget_ms=None, geo_pruning=False, flexible_window=False)
        options.update(kwargs)
        return Query(dep, arr, earliest, **options)
    return make
