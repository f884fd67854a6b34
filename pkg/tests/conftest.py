import numpy as np
import pytest

from satvnf.algorithms import SolverParams
from satvnf.engine import PlacementContext
from satvnf.pathing import PathTable
from satvnf.topology import CoverageMap, attach_cloud, build_constellation


@pytest.fixture(scope="session")
def default_network():
    """The 3x4 default constellation with the cloud behind satellites 5 and 6."""
    return attach_cloud(build_constellation(3, 4), {5, 6})


@pytest.fixture(scope="session")
def default_coverage():
    return CoverageMap(3, 4, overlap=0.1)


@pytest.fixture(scope="session")
def default_table(default_network):
    return PathTable(default_network, 8)


@pytest.fixture(scope="session")
def default_context(default_network, default_coverage, default_table):
    return PlacementContext(default_network, default_coverage, default_table,
                            SolverParams(d=8, beam_width=4))


@pytest.fixture()
def rng():
    return np.random.default_rng(12345)
