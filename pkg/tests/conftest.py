import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def report(capsys):
    """Print a line straight to the terminal, bypassing capture."""

    def emit(line):
        with capsys.disabled():
            print("\n" + line, flush=True)

    return emit
