import numpy as np
import pytest

from phasemotion import _backend
from phasemotion.pyramid import build_filter_bank
from phasemotion.synthetic import plane_wave_texture


@pytest.fixture(params=_backend.available())
def backend(request):
    with _backend.use(request.param):
        yield request.param


@pytest.fixture(scope="session")
def bank48():
    return build_filter_bank(48, 48)


@pytest.fixture(scope="session")
def bank64():
    return build_filter_bank(64, 64)


@pytest.fixture(scope="session")
def axis_texture():
    """64x64 texture whose waves sit within ~11 degrees of an axis, near the scale-1 band centre."""
    return plane_wave_texture(64, 64, 0.95, 1.45, n_waves=30, seed=3, max_tilt=0.2)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
