import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from shnw.linwave import WaveState
from shnw.spectral import make_grid, random_real_field


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_state(grid, rng, kmax=None, amplitude=1.0, decay=0.0):
    return WaveState(
        u=random_real_field(grid, rng, kmax=kmax, decay=decay, amplitude=amplitude),
        ut=random_real_field(grid, rng, kmax=kmax, decay=decay, amplitude=amplitude),
        t=0.0,
    )


@pytest.fixture
def grid2d():
    return make_grid(2, 16, 2 * np.pi)
