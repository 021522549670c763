import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from tdapipe import kernels  # noqa: E402

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(params=kernels.available_backends())
def backend(request):
    return request.param


@pytest.fixture
def square():
    return np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])


@pytest.fixture
def two_clusters():
    return np.array([[0.0], [0.1], [10.0], [10.1]])


@pytest.fixture
def circle20():
    t = 2 * np.pi * np.arange(20) / 20
    return np.column_stack([np.cos(t), np.sin(t)])


def random_clouds(count, seed, n_range=(3, 12), d_range=(2, 4)):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        n = int(rng.integers(n_range[0], n_range[1] + 1))
        d = int(rng.integers(d_range[0], d_range[1] + 1))
        out.append(rng.normal(size=(n, d)))
    return out
