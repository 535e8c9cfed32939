import json
from pathlib import Path

import pytest

from immerse.store.registry import FixtureRegistry

CONFIGS = Path(__file__).parent / "configs"


@pytest.fixture
def configs_dir() -> Path:
    return CONFIGS


@pytest.fixture
def load_config_json():
    def load(name: str) -> dict:
        return json.loads((CONFIGS / name).read_text())

    return load


@pytest.fixture
def write_config(tmp_path):
    """Writes a config dict to tmp_path and returns its path."""
    def write(payload: dict, name: str = "run.json") -> Path:
        path = tmp_path / name
        path.write_text(json.dumps(payload))
        return path

    return write


@pytest.fixture
def fresh_registry():
    registry = FixtureRegistry()
    registry._initialized = False
    yield registry
    registry._initialized = False
    registry.initialize()
