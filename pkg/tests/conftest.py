import pytest

from interlace_lab.lattice import WalkSpec, green_table
from interlace_lab.moments import MomentOracle


@pytest.fixture(scope="session")
def line():
    return WalkSpec.nearest_neighbor(1, 1.0)


@pytest.fixture(scope="session")
def line_table(line):
    return green_table(line, 4)


@pytest.fixture(scope="session")
def line_oracle(line_table):
    return MomentOracle(line_table)
