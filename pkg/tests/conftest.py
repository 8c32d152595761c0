import shutil
from pathlib import Path

import pytest

from momentrec.dataset import build_dataset
from momentrec.ingestion import ApiConfig, ingest
from momentrec.simulator import default_spec, generate_history

FIXTURES_DIR = Path(__file__).parent / "fixtures" / "offline_demo"


@pytest.fixture
def demo_fixtures(tmp_path) -> Path:
    target = tmp_path / "fixtures"
    shutil.copytree(FIXTURES_DIR, target)
    return target


@pytest.fixture
def demo_cache(demo_fixtures, tmp_path) -> Path:
    cache_dir = tmp_path / "cache"
    config = ApiConfig(mode="offline", fixtures_dir=demo_fixtures, cache_dir=cache_dir)
    ingest(config)
    return cache_dir


@pytest.fixture(scope="session")
def sim_spec():
    return default_spec(seed=11, plays_total=20000)


@pytest.fixture(scope="session")
def sim_cache(tmp_path_factory, sim_spec) -> Path:
    base = tmp_path_factory.mktemp("sim")
    fixtures = base / "fixtures"
    cache_dir = base / "cache"
    generate_history(sim_spec, fixtures)
    config = ApiConfig(mode="offline", fixtures_dir=fixtures, cache_dir=cache_dir)
    ingest(config)
    return cache_dir


@pytest.fixture(scope="session")
def sim_dataset(sim_cache):
    return build_dataset(sim_cache, k=1000)
