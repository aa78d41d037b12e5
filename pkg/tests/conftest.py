import numpy as np
import pytest

from corekit.points import dense
from corekit.weighted import WeightedSet


def line(coords, weights=None):
    """1-d instance from a list of scalars."""
    pts = [dense(i, [c]) for i, c in enumerate(coords)]
    w = np.ones(len(pts)) if weights is None else np.asarray(weights, float)
    return WeightedSet(pts, w)


def plane(rows, weights=None):
    pts = [dense(i, r) for i, r in enumerate(rows)]
    w = np.ones(len(pts)) if weights is None else np.asarray(weights, float)
    return WeightedSet(pts, w)


@pytest.fixture
def two_points():
    return line([0.0, 1.0])


@pytest.fixture
def three_one():
    # three points at 0, one at 1
    return line([0.0, 0.0, 0.0, 1.0])
