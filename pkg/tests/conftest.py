import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from cellid.config import default_cell_parameters, load_config  # noqa: E402
from cellid.objective import ObjectiveSpec  # noqa: E402
from cellid.optimizers import make_bounds  # noqa: E402
from cellid.protocols import build_suite  # noqa: E402


@pytest.fixture(scope="session")
def cell():
    return default_cell_parameters()


@pytest.fixture(scope="session")
def run_config():
    return load_config()


@pytest.fixture(scope="session")
def suite(cell):
    return build_suite(cell)


@pytest.fixture(scope="session")
def fit_spec(suite, cell):
    return ObjectiveSpec(suite.fitting, cell)


@pytest.fixture(scope="session")
def bounds(cell):
    return make_bounds(cell.estimands)


def trace_named(suite, name):
    return next(t for t in suite.traces if t.profile_name == name)
