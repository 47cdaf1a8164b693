import random

import pytest

from etenon.algebra import get_suite
from etenon.tenon import load_stopwords

# Filled in by the acceptance tests; rendered once capture is released
# so the verdict lines survive any capture mode.
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.line(line)


@pytest.fixture
def mock():
    return get_suite("mock")


@pytest.fixture(scope="session")
def bn256():
    return get_suite("bn256")


@pytest.fixture
def rng():
    return random.Random(0xE7E)


@pytest.fixture(scope="session")
def stopwords():
    return load_stopwords()
