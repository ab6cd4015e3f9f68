import numpy as np
import pytest

from gtorsion import scenarios

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def catalogue():
    return {sc.id: sc for sc in scenarios.catalogue()}


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def at(sid, index=0, count=3, seed=0, backend=None):
    """Bundle geometry at one sampled point of a built-in scenario."""
    sc = scenarios.get(sid)
    pt = scenarios.sample(sc, count, seed)[index]
    return sc.structure(backend), pt, sc.structure(backend).at(pt)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
