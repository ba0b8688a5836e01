import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from qinfo.rng import Rng  # noqa: E402


@pytest.fixture
def rng():
    return Rng(20240607)


@pytest.fixture
def gen():
    """numpy generator for building test inputs independently of the package RNG."""
    return np.random.default_rng(12345)


REPO_ROOT = Path(__file__).resolve().parent.parent
