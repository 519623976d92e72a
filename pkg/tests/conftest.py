import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from lpmkl.kernels import KernelMatrix
from lpmkl.labels import LabelVector


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_psd_kernel(rng, n, rank=None, jitter=1e-8):
    rank = rank or n
    X = rng.normal(size=(n, rank))
    return KernelMatrix(X @ X.T + jitter * np.eye(n), name="rand")


def random_labels(rng, n, p_pos=0.4):
    values = np.where(rng.uniform(size=n) < p_pos, 1, -1).astype(np.int8)
    if np.all(values == values[0]):
        values[0] = -values[0]
    return LabelVector(values)
