import os

import pytest

GOLDEN_DIR = os.path.join(os.path.dirname(__file__), "golden")


@pytest.fixture(scope="session")
def golden():
    assert os.path.isdir(GOLDEN_DIR), "golden results directory missing"
    return GOLDEN_DIR
