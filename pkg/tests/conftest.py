import numpy as np
import pytest

from slinv import Potential


@pytest.fixture(scope="session")
def zero_pot():
    return Potential.zero(2048)


@pytest.fixture(scope="session")
def sin_pot():
    return Potential.from_function(np.sin, 2048)


@pytest.fixture(scope="session")
def small_sin_pot():
    return Potential.from_function(lambda x: 0.3 * np.sin(x), 2048)
