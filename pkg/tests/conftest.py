import random

import pytest
from hypothesis import settings

from groundocr.fixtures import generate_pages

settings.register_profile("default", max_examples=150, deadline=None)
settings.load_profile("default")


@pytest.fixture(scope="session")
def pages():
    return list(generate_pages(11, 60))


@pytest.fixture
def rng():
    return random.Random(1234)
