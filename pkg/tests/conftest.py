import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from driftbench.synth import SynthConfig, generate


@pytest.fixture(scope="session")
def small_synth():
    """400-record default-structure dataset shared by cheap tests."""
    return generate(SynthConfig(n_records=400, seed=7))


@pytest.fixture(scope="session")
def medium_synth():
    """2000-record dataset for scenario/eval tests."""
    return generate(SynthConfig(n_records=2000, seed=3))
