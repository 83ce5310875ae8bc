import os

import numpy as np
import pytest

DATA = os.path.join(os.path.dirname(__file__), "data")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def counting():
    """2x2x2 tensor whose 1-based entry (a, b, c) is a + 2(b-1) + 4(c-1)."""
    X = np.empty((2, 2, 2))
    for a in range(2):
        for b in range(2):
            for c in range(2):
                X[a, b, c] = (a + 1) + 2 * b + 4 * c
    return X


@pytest.fixture
def natural_image_path():
    return os.path.join(DATA, "natural_60x60.png")


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
