import os
import sys

import pytest

_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.insert(0, _ROOT)

from funnelgate.scenarios import example2, example3_cos, example3_exp  # noqa: E402


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: full 100 s reproduction runs")


@pytest.fixture(scope="module")
def ex2():
    return example2()


@pytest.fixture(scope="module")
def ex3_exp():
    return example3_exp()


@pytest.fixture(scope="module")
def ex3_cos():
    return example3_cos()
