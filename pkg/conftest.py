"""
Pytest configuration for eqkernel.

Adds the project root to sys.path so `eqkernel` imports without an install,
and provides the seeded generators the test modules share.
"""
import sys
from pathlib import Path

import numpy as np
import pytest

project_root = Path(__file__).parent
if str(project_root) not in sys.path:
    sys.path.insert(0, str(project_root))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def config_dir():
    return project_root / "eqkernel" / "config" / "experiments"
