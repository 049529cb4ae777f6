import numpy as np
import pytest

from moddeepesn.initialization import InitSpec, build_model
from moddeepesn.numerics import RngStream
from moddeepesn.topology import TopologyKind, build_connectivity


@pytest.fixture
def small_model():
    def make(topology="wide:2", n_r=8, seed=0, **spec):
        conn = build_connectivity(TopologyKind.parse(topology))
        return build_model(conn, 1, n_r, InitSpec(**spec), RngStream(seed))

    return make


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE = []


@pytest.fixture
def criterion(request):
    """Record a pass/fail line for an acceptance criterion and print it immediately."""

    def record(number, passed, detail):
        line = f"criterion {number}: {'PASS' if passed else 'FAIL'} - {detail}"
        ACCEPTANCE.append(line)
        capman = request.config.pluginmanager.getplugin("capturemanager")
        with capman.global_and_fixture_disabled():
            print(f"\n{line}")
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
