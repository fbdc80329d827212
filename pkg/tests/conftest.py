import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from sparsepaint.grid import Image
from sparsepaint.solver import InpaintSolver, MultigridConfig

FIXDIR = os.path.join(os.path.dirname(__file__), "fixtures")


@pytest.fixture(scope="session")
def fixdir():
    return FIXDIR


@pytest.fixture(scope="session")
def solver64():
    """Double-precision verification solver with a tight stopping rule."""
    return InpaintSolver(MultigridConfig(dtype="float64", tol=1e-10,
                                         max_cycles=200))


@pytest.fixture(scope="session")
def solver32():
    """Production-precision solver with default stopping."""
    return InpaintSolver(MultigridConfig(dtype="float32"))


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def textured64():
    """64x64 synthetic with edges, texture and smooth regions."""
    yy, xx = np.mgrid[0:64, 0:64].astype(np.float64)
    img = 128 + 60 * np.sin(xx / 5) * np.cos(yy / 7) + 40 * (xx > 40) \
        - 30 * (yy > 50)
    return Image(img[None])
