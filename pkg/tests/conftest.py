import math
from pathlib import Path

import pytest

from qmultihop.channels import NoiseKind
from qmultihop.states import ClusterParams, InputParams

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def balanced():
    return ClusterParams.balanced()


@pytest.fixture
def equal_input():
    s = 1 / math.sqrt(2)
    return InputParams(s, s)


@pytest.fixture
def noiseless():
    return NoiseKind.amplitude(0.0)


@pytest.fixture
def fixtures():
    return FIXTURES
