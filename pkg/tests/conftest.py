import numpy as np
import pytest

from detkmed.generators import clustered_points, random_matrix, uniform_points
from detkmed.metric import WeightedMetricSpace


def line_space(coords, weights=None):
    pts = np.asarray(coords, dtype=float)[:, None]
    return WeightedMetricSpace.from_points(pts, weights)


def small_corpus(count, max_n, min_n=4, weighted_every=3, seed0=0):
    """Deterministic mixed corpus: l2 / l1 points, repaired matrices, a few
    weighted and duplicate-heavy instances."""
    spaces = []
    for s in range(count):
        n = min_n + (s * 7 + seed0) % (max_n - min_n + 1)
        kind = s % 4
        unit = (s % weighted_every) != 1
        if kind == 0:
            spaces.append(uniform_points(n, dim=2, seed=seed0 + s, unit_weights=unit))
        elif kind == 1:
            spaces.append(uniform_points(n, dim=3, seed=seed0 + s, norm="l1",
                                         unit_weights=unit))
        elif kind == 2:
            spaces.append(random_matrix(n, seed=seed0 + s, unit_weights=unit))
        else:
            spaces.append(clustered_points(n, clusters=max(1, n // 4),
                                           spread=0.02 if s % 2 else 0.0,
                                           seed=seed0 + s, unit_weights=unit))
    return spaces


@pytest.fixture(scope="session")
def tiny_spaces():
    return small_corpus(24, max_n=12)


@pytest.fixture(scope="session")
def mid_spaces():
    return small_corpus(16, max_n=30)
