import pytest

from resop.fixtures import folsom_inflows_path, folsom_spec_path
from resop.hydrology import load_flow_csv
from resop.reservoir import load_reservoir_spec


@pytest.fixture(scope="session")
def spec():
    return load_reservoir_spec(folsom_spec_path())


@pytest.fixture(scope="session")
def history():
    return load_flow_csv(folsom_inflows_path().read_text())
