import sys
from pathlib import Path

import numpy as np
import pytest

# make the sibling oracle module importable regardless of invocation dir
sys.path.insert(0, str(Path(__file__).resolve().parent))


@pytest.fixture
def rng():
    return np.random.default_rng(20240814)


@pytest.fixture(params=["numpy", "numba"])
def backend(request, monkeypatch):
    """Run the decorated test under both accumulation backends."""
    monkeypatch.setenv("HDPCA_BACKEND", request.param)
    return request.param
