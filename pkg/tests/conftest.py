import pytest

from flowbuild import make_flow


@pytest.fixture
def constant_flow():
    return make_flow(durations_ms=[10] * 20)
