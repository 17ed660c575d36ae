import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from rebalance.instance import Instance, Station  # noqa: E402


def make_instance(caps, init, d, trucks=1, capacity=20):
    stations = tuple(Station(i, int(c), int(o)) for i, (c, o) in enumerate(zip(caps, init)))
    return Instance(stations, trucks, capacity, np.asarray(d, dtype=float))


def random_micro_instance(rng, S, T, int_distances=False):
    caps = rng.integers(1, 12, size=S)
    init = np.array([rng.integers(0, c + 1) for c in caps])
    if int_distances:
        d = rng.integers(1, 20, size=(S + 1, S + 1)).astype(float)
    else:
        d = rng.uniform(0.5, 10.0, size=(S + 1, S + 1))
    np.fill_diagonal(d, 0.0)
    return make_instance(caps, init, d, trucks=T, capacity=int(rng.integers(1, 15)))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
