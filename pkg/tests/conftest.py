import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from skyfed.fixtures import FixtureSpec, generate_fixture


def random_positions(rng, n, dec_min=-90.0, dec_max=90.0):
    ra = rng.uniform(0.0, 360.0, n)
    z = rng.uniform(np.sin(np.radians(dec_min)), np.sin(np.radians(dec_max)), n)
    dec = np.degrees(np.arcsin(z))
    return ra, dec


@pytest.fixture(scope="session")
def small_catalog():
    """1000-object synthetic catalog shared across fast tests."""
    catalogs, _ = generate_fixture(FixtureSpec(objects=1000, seed=7))
    return catalogs["photoobj"]


@pytest.fixture(scope="session")
def medium_catalog():
    """10^4-object synthetic catalog for oracle-equivalence tests."""
    catalogs, _ = generate_fixture(FixtureSpec(objects=10_000, seed=11))
    return catalogs["photoobj"]
