import numpy as np
import pytest

from spinmetro.spin_algebra import SpinQuantum

SMALL_SPINS = [SpinQuantum(t) for t in range(1, 9)]  # 1/2 .. 4


def spin_id(j):
    return f"j={j}"


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
