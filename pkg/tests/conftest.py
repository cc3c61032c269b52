import math

import numpy as np
import pytest

from csbilliard import circle, ellipse
from csbilliard.fourcurve import d_profile, perturbed_profile, table_from_d

ELLIPSE_AXES = (1.25, 1.0)


@pytest.fixture(scope="session")
def disk():
    return circle(1.0)


@pytest.fixture(scope="session")
def oval():
    return ellipse(*ELLIPSE_AXES)


@pytest.fixture(scope="session")
def bumpy():
    """Table built from d = pi/4 + 0.05 sin 2 psi with R = 1."""
    return table_from_d(perturbed_profile(0.05), 1.0)


@pytest.fixture(scope="session")
def disk_profile(disk):
    return d_profile(disk)


@pytest.fixture(scope="session")
def oval_profile(oval):
    return d_profile(oval)


@pytest.fixture(scope="session")
def bumpy_profile(bumpy):
    return d_profile(bumpy)


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def ellipse_boundary(a, b, n):
    t = np.linspace(0.0, 2 * math.pi, n, endpoint=False)
    return a * np.cos(t), b * np.sin(t)
