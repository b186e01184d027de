import itertools

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from widthlab.ballbody import build_M, build_reuleaux
from widthlab.frame import build_frame
from widthlab.patches import build_generator_set
from widthlab.shadow import build_shadow

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

PAIRS = list(itertools.combinations("ABCD", 2))


@pytest.fixture(scope="session")
def frame():
    return build_frame()


@pytest.fixture(scope="session")
def gens(frame):
    return build_generator_set(frame)


@pytest.fixture(scope="session")
def M(frame):
    return build_M(frame)


@pytest.fixture(scope="session")
def R(frame):
    return build_reuleaux(frame)


@pytest.fixture(scope="session")
def shadow(frame):
    return build_shadow(frame)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def sphere_grid(n):
    """Dense deterministic grid on the unit 2-sphere (used as brute-force oracle)."""
    i = np.arange(n) + 0.5
    z = 1 - 2 * i / n
    r = np.sqrt(1 - z * z)
    a = np.pi * (1 + 5 ** 0.5) * i
    return np.column_stack([r * np.cos(a), r * np.sin(a), z])


# one line per acceptance criterion, printed after the run
ACCEPTANCE = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[ACCEPTANCE] = {}


@pytest.fixture
def acceptance_log(request):
    return request.config.stash[ACCEPTANCE]


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(ACCEPTANCE, {})
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(lines):
        terminalreporter.write_line(lines[n])
