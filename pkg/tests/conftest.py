import pytest

from reldsep.examples import organization_model, organization_schema, organization_skeleton
from reldsep.paths import parse_path
from reldsep.model import parse_rv


@pytest.fixture
def org_schema():
    return organization_schema()


@pytest.fixture
def org_model():
    return organization_model()


@pytest.fixture
def csr_model():
    return organization_model("csr")


@pytest.fixture
def org_skeleton():
    return organization_skeleton()


@pytest.fixture
def P():
    return parse_path


@pytest.fixture
def RV():
    return parse_rv
