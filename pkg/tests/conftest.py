import numpy as np
import pytest

from mimo_d2d import ScenarioConfig, build_layout


@pytest.fixture(scope="session")
def small_config():
    """Cheap 7-cell scenario for plumbing tests."""
    return ScenarioConfig(
        cells=7,
        antennas=32,
        users_per_cell=4,
        d2d_per_cell=3,
        n_drops=4,
        n_fading_per_drop=2,
        n_position_samples=4000,
        n_location_samples=64,
        master_seed=1234,
    )


@pytest.fixture(scope="session")
def default_layout():
    return build_layout(19, 300.0)


@pytest.fixture()
def rng():
    return np.random.default_rng(2024)
