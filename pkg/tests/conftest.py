import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from starid.trajectory import PolyPiece, TFoT, TrajectorySet

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def const(value, t0, t1, id=""):
    return TFoT.constant(np.atleast_1d(np.asarray(value, dtype=float)), t0, t1, id=id)


def tset(*trajs, dim=None):
    return TrajectorySet.of(trajs, dim=dim)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
