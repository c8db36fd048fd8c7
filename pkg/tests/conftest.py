import pytest

from rappor_agg import EncodingParams, build_constant_table


@pytest.fixture(scope="session")
def params():
    return EncodingParams()


@pytest.fixture(scope="session")
def table32():
    return build_constant_table(32)
