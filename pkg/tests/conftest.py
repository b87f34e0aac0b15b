import pytest

from hypstrata.hyperelliptic import clear_caches


@pytest.fixture
def fresh_caches():
    clear_caches()
    yield
    clear_caches()
