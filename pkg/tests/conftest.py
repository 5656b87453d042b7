import numpy as np
import pytest

from iwpt.channel import build_channels
from iwpt.digital import SolverConfig, build_trace_kernel, solve_digital
from iwpt.scene import desk_scene
from iwpt.wpt import e_max
from tests.helpers import DESK_FRACTIONS, close_scene, make_scene


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def tiny_scene():
    return make_scene()


@pytest.fixture
def tiny_channels(tiny_scene):
    return build_channels(tiny_scene)


@pytest.fixture
def tiny_kernel(tiny_channels):
    return build_trace_kernel(tiny_channels)


@pytest.fixture
def imaging_scene():
    return close_scene()


@pytest.fixture
def imaging_channels(imaging_scene):
    return build_channels(imaging_scene)


@pytest.fixture
def solver_config():
    return SolverConfig(max_iterations=30)


@pytest.fixture(scope="session")
def desk():
    return desk_scene()


@pytest.fixture(scope="session")
def desk_channels(desk):
    return build_channels(desk)


@pytest.fixture(scope="session")
def desk_kernel(desk_channels):
    return build_trace_kernel(desk_channels)


@pytest.fixture(scope="session")
def desk_solves(desk, desk_channels, desk_kernel):
    """The default digital design on the desk scene, keyed by ``E_r / E_max``."""
    ceiling = e_max(desk_channels.g, desk.tx_power, desk.efficiency)
    return {
        fraction: solve_digital(
            desk_kernel,
            desk_channels.g,
            desk.tx_power,
            fraction * ceiling,
            desk.efficiency,
        )
        for fraction in DESK_FRACTIONS
    }
