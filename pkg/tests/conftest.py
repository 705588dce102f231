import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("ms3", deadline=None, max_examples=60)
settings.load_profile("ms3")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)

# one line per acceptance criterion, collected by tests/test_acceptance.py
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[n])
