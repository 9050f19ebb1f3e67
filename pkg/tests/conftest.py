import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from orisvlc.channel import ChannelCoefficients

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def random_coeffs(rng, max_leds=2, max_elems=5, max_users=3, density=0.7):
    """Tiny random allocation instance with non-negative gains."""
    L = int(rng.integers(1, max_leds + 1))
    K = int(rng.integers(1, max_elems + 1))
    U = int(rng.integers(1, max_users + 1))
    a = rng.random((L, K, U)) * rng.uniform(0.05, 2.0)
    a[rng.random(a.shape) > density] = 0.0
    c = rng.random(U) * rng.uniform(0.1, 2.0)
    return ChannelCoefficients.from_dense(c, a)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, echoed at the end of the run
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[n])
