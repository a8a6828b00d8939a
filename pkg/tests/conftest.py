import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from sigmaspace.imaging import ImageBuffer, synth_corpus  # noqa: E402


@pytest.fixture(scope="session")
def corpus16():
    return synth_corpus(seed=1, count=16, size=64)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def rgb_image(rng):
    return ImageBuffer(rng.random((32, 40, 3)))
