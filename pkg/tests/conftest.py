"""Pytest configuration file.

This file contains fixtures and configuration for pytest.
"""

import os
import sys

import numpy as np
import pytest

# Add the parent directory to sys.path to allow importing modules from the project
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

from src.stripes.config import reload_compute_config  # noqa: E402
from src.stripes.kernels import KernelFamily, KernelSpec  # noqa: E402
from src.stripes.lattice import StripeSpec, TorusConfig, make_stripes  # noqa: E402


@pytest.fixture(autouse=True)
def fresh_compute_config():
    """Drop the cached compute configuration around every test."""
    reload_compute_config()
    yield
    reload_compute_config()


@pytest.fixture
def rng():
    """Return a seeded random generator."""
    return np.random.default_rng(20240917)


@pytest.fixture
def reference_spec():
    """Reference kernel in d=1, p=3 without regularization."""
    return KernelSpec(1, 3.0, 0.0, KernelFamily.ONE_NORM)


@pytest.fixture
def euclidean_line_spec():
    """Euclidean lattice kernel in d=1, p=3 at tau=0.7 (spacing 0.7)."""
    return KernelSpec(1, 3.0, 0.7, KernelFamily.EUCLIDEAN)


@pytest.fixture
def euclidean_plane_spec():
    """Euclidean lattice kernel in d=2, p=4 at tau=1 (spacing 1)."""
    return KernelSpec(2, 4.0, 1.0, KernelFamily.EUCLIDEAN)


@pytest.fixture
def one_norm_plane_spec():
    """Reference kernel in d=2, p=4 at tau=0.5."""
    return KernelSpec(2, 4.0, 0.5, KernelFamily.ONE_NORM)


@pytest.fixture
def plane_stripes():
    """Width-2 stripes in direction 0 on a 16x16 torus."""
    return make_stripes(StripeSpec(0, 2.0), 2, 16)


@pytest.fixture
def grain_boundary():
    """Period-4 stripes in direction 0 where x1 < 8 and in direction 1 elsewhere, n=16."""
    n = 16
    x0, x1 = np.indices((n, n))
    along_first = (x0 % 4 < 2).astype(np.uint8)
    along_second = (x1 % 4 < 2).astype(np.uint8)
    return TorusConfig(2, n, np.where(x1 < 8, along_first, along_second))
