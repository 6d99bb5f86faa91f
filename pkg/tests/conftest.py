import numpy as np
import pytest

from mecgame import kernels
from mecgame.scenario import GeneratorConfig, make_network


@pytest.fixture(params=kernels.available_backends(), scope="module")
def backend(request):
    """Run the test once per importable kernel backend."""
    previous = kernels.BACKEND
    kernels.set_backend(request.param)
    yield request.param
    kernels.set_backend(previous)


def small_config(num_users, num_bs=None, **kw):
    num_bs = num_bs if num_bs is not None else max(2, num_users)
    return GeneratorConfig(num_bs=num_bs, num_users=num_users, **kw)


def mixed_network(num_users, seed, num_bs=None, **kw):
    """Small instance with a mix of latency/energy weights."""
    kw.setdefault("alpha_t", (1.0, 0.5, 0.0))
    return make_network(small_config(num_users, num_bs, **kw), seed)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# lines recorded by the acceptance tests, echoed after the run
ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
