import os

os.environ.setdefault("MPLBACKEND", "Agg")

import numpy as np
import pytest

import rangesr as rs


@pytest.fixture(scope="session")
def warm_kernels():
    """Compile the JIT kernels on a tiny problem so timed tests stay honest."""
    rng = np.random.default_rng(0)
    color = rs.ColorImage(rng.integers(0, 255, (16, 16, 3), dtype=np.uint8))
    truth = rs.RangeImage(rng.integers(10, 60, (16, 16)).astype(np.float32))
    cfg = rs.default_config(factor=2)
    lr = rs.decimate(truth, 2)
    rs.super_resolve(lr, color, cfg)
    return True
