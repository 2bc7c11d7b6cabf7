import pytest

from services.waves.core.config import get_settings
from services.waves.numerics.birkhoff_rott import build_workspace
from services.waves.numerics.curve import flat_state, initial_state
from services.waves.numerics.spectral import PeriodicGrid

from oracles import wavy_state


@pytest.fixture
def grid64():
    return PeriodicGrid(64)


@pytest.fixture
def grid128():
    return PeriodicGrid(128)


@pytest.fixture
def flat(grid64):
    return flat_state(grid64)


@pytest.fixture
def wavy():
    return wavy_state(128)


@pytest.fixture
def wavy_ws(wavy):
    return build_workspace(wavy)


@pytest.fixture
def small_wave(grid64):
    """Linear traveling mode k = 2, ε = 1e-2."""
    return initial_state(grid64, 2, 1e-2, 1)


@pytest.fixture
def write_config(tmp_path):
    """Write a key = value config file and return its path."""
    def write(**values):
        path = tmp_path / "run.cfg"
        lines = ["# test configuration"] + [f"{k} = {v}" for k, v in values.items()]
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        return path
    return write


@pytest.fixture(autouse=True)
def fresh_settings():
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()
