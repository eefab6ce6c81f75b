import sys
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from epigame.game import ActionGrid, CostParams, GameSpec  # noqa: E402
from epigame.scenario import table1  # noqa: E402
from epigame.sir_core import EpidemicParams  # noqa: E402

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def table1_spec():
    return table1("nu_beta")


@pytest.fixture(scope="session")
def decoupled_spec():
    return table1("zero")


@pytest.fixture(scope="session")
def small_spec():
    """The table1 scenario at cross rates nu_beta on a 4-point grid (1024 profiles)."""
    return table1("nu_beta", n_points=4)


@pytest.fixture(scope="session")
def disease_free_spec():
    spec = table1("nu_beta", n_points=4)
    ep = spec.epidemic
    return replace(spec, epidemic=EpidemicParams(ep.beta, ep.gamma, ep.s0, np.zeros(5)))


def two_region_spec(beta, n_points=5, a=(1.0, 1.0), b=(2.0, 2.0), c=(30.0, 30.0)):
    epi = EpidemicParams(beta, [0.15, 0.15], [0.9, 0.9], [0.01, 0.005])
    return GameSpec(epi, CostParams(a, b, c), ActionGrid([0.2, 0.2], [0.8, 0.8], n_points))
