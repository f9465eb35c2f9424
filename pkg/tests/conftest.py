import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from uniconv.calculus import QuadraticMap
from uniconv.cones import ProductCone
from uniconv.geometry import PNormBall
from uniconv.optim import ProblemSpec

settings.register_profile(
    "uniconv",
    deadline=None,
    max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
    derandomize=True,
)
settings.load_profile("uniconv")

X0 = np.array([1.0, 1.0]) / math.sqrt(2.0)


def worked_phi():
    return QuadraticMap(np.diag([2.0, -2.0])[None], np.zeros((1, 2)), [0.0])


def worked_g():
    return QuadraticMap(np.diag([2.0, 2.0])[None], np.zeros((1, 2)), [-1.0])


def worked_problem(r):
    return ProblemSpec(worked_phi(), worked_g(), PNormBall(X0, r), ProductCone.zero(1), X0)


@pytest.fixture
def x0():
    return X0.copy()


@pytest.fixture
def image_map():
    """Phi_{x0}(x) = (x1^2 - x2^2, x1^2 + x2^2 - 1); phi(x0) = 0."""
    return QuadraticMap(
        np.stack([np.diag([2.0, -2.0]), np.diag([2.0, 2.0])]),
        np.zeros((2, 2)),
        [0.0, -1.0],
    )
